"""
Command handlers: one function per CLI command, each turning a RunConfig into rows.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import csv
import json
import logging
import re

import numpy as np

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ConfigError, GaussMacError, OptimizerError
from gaussmac.schemas import OuterBoundsRecord, RayRecord, RegionReport, RunConfig
from gaussmac.services.bgmac import (
    BgcClass,
    PhaseInsensitiveBgmac,
    channel_from_config,
    classify,
    to_interference,
    validate,
)
from gaussmac.services.capacities import (
    EnergyBudget,
    OuterBounds,
    SenderSet,
    coherent_bound,
    ea_bgc_capacity,
    ea_outer,
    ea_total_rate_capacity,
    eta_sweep,
    unassisted_outer,
)
from gaussmac.services.fock_oracle import fock_thermal_loss_rate
from gaussmac.services.memory import (
    CausalMemoryParams,
    memory_bottleneck_bound,
    memory_coherent_benchmark,
    memory_total_rate,
)
from gaussmac.services.region import GaussianEncoding, one_shot_region, union_region

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-3


@dataclass
class CommandOutput:
    rows: List[Dict[str, Any]]
    document: Optional[Any] = None  # pydantic model written for --format json
    extras: Dict[str, Any] = field(default_factory=dict)  # file suffix -> JSON-able object
    failure: Optional[GaussMacError] = None  # raised after the partial output is written


# ============= Budget Helpers =============

def budget_points(run: RunConfig, s: int, fixed: Optional[Sequence[float]] = None) -> List[Tuple[float, EnergyBudget]]:
    """(total N_S, budget) pairs: a log sweep when configured, else the fixed budget"""
    fixed = list(fixed) if fixed is not None else (run.budget.ns if run.budget else None)
    if run.sweep is None:
        return [(float(sum(fixed)), EnergyBudget(tuple(fixed)))]
    fractions = run.sweep.fractions
    if fractions is None:
        total = sum(fixed) if fixed else 0.0
        fractions = [x / total for x in fixed] if total > 0 else [1.0 / s] * s
    grid = np.logspace(run.sweep.log10_min, run.sweep.log10_max, run.sweep.points)
    return [(float(N), EnergyBudget.from_fractions(fractions, float(N))) for N in grid]


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def _channel(run: RunConfig) -> PhaseInsensitiveBgmac:
    return channel_from_config(run.channel)


def check_sandwich(lower: float, upper: float, label: str, tol: float = 1e-9):
    """Achievable rate below its upper bound, relative tolerance for large values"""
    if lower > upper + tol * max(1.0, abs(upper)):
        raise GaussMacError(f"Refusing to write {label}: {lower:.12g} exceeds its upper bound {upper:.12g}")


# ============= Handlers =============

def run_point_capacity(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    if channel.s != 1:
        raise ConfigError("point-capacity needs a single-sender channel")
    delta, w2, nb = channel.delta[0], float(channel.w2[0]), channel.N_B
    universe = SenderSet.universe(1)
    use_oracle = run.oracle and delta == 0 and w2 < 1
    if run.oracle and not use_oracle:
        logger.warning("⚠️ Fock oracle covers covariant thermal-loss channels only; column skipped")

    rows = []
    for total, budget in budget_points(run, 1):
        ea = ea_bgc_capacity(delta, budget.N_S[0], w2, nb)
        coh = coherent_bound(channel, budget, universe)
        check_sandwich(coh, ea, f"coherent_capacity at N_S={total:.6g}")
        row = {"N_S": total, "ea_capacity": ea, "coherent_capacity": coh, "ratio": _ratio(ea, coh)}
        if use_oracle:
            try:
                row["fock_oracle"] = fock_thermal_loss_rate(w2, nb, budget.N_S[0])
            except ConfigError as e:
                logger.debug(f"Fock oracle skipped at N_S={total:.3g}: {e}")
                row["fock_oracle"] = None
        rows.append(row)
    return CommandOutput(rows)


def run_coherent_region(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    subsets = [J for J in SenderSet.all_subsets(channel.s) if not J.is_empty()]
    rows = []
    for total, budget in budget_points(run, channel.s):
        row: Dict[str, Any] = {"N_S": total}
        for J in subsets:
            row["C_" + "-".join(str(k + 1) for k in J.indices)] = coherent_bound(channel, budget, J)
        rows.append(row)
    return CommandOutput(rows)


def _bounds_row(total: float, bounds: OuterBounds) -> Dict[str, Any]:
    row: Dict[str, Any] = {"N_S": total, "kind": bounds.kind, "condition": bounds.condition_used.value}
    for k, cap in enumerate(bounds.individual, start=1):
        row[f"R{k}_cap"] = cap
    row["total_cap"] = bounds.total
    row["alternative_total"] = bounds.alternative.total if bounds.alternative else None
    return row


def run_outer_bounds(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    universe = SenderSet.universe(channel.s)
    # a lenient channel has no covariance-matrix action to compare against
    bona_fide = validate(channel).ok
    rows, records = [], []
    for total, budget in budget_points(run, channel.s):
        achievable = {}
        if bona_fide:
            achievable = {
                "unassisted": coherent_bound(channel, budget, universe),
                "ea": ea_total_rate_capacity(channel, budget),
            }
        for bounds in (unassisted_outer(channel, budget), ea_outer(channel, budget)):
            if bounds is None:
                continue
            if bounds.kind in achievable:
                check_sandwich(achievable[bounds.kind], bounds.total, f"{bounds.kind} total at N_S={total:.6g}")
            rows.append(_bounds_row(total, bounds))
            records.append(OuterBoundsRecord(
                kind=bounds.kind,
                condition=bounds.condition_used.value,
                individual=list(bounds.individual),
                total=bounds.total,
                dark_counts=list(bounds.per_sender_dark_counts),
                alternative_total=bounds.alternative.total if bounds.alternative else None,
            ))
    if not rows:
        logger.warning("⚠️ Neither outer-bound condition holds for this channel; nothing to write")
    return CommandOutput(rows, document=[r.model_dump() for r in records])


def run_ea_total(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    universe = SenderSet.universe(channel.s)
    rows = []
    for total, budget in budget_points(run, channel.s):
        ea = ea_total_rate_capacity(channel, budget)
        coh = coherent_bound(channel, budget, universe)
        check_sandwich(coh, ea, f"coherent_total at N_S={total:.6g}")
        rows.append({"N_S": total, "ea_total": ea, "coherent_total": coh, "ratio": _ratio(ea, coh)})
    return CommandOutput(rows)


def run_gaussian_region(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    if run.budget is None:
        raise ConfigError("gaussian-region needs a fixed budget ('ns')")
    budget = EnergyBudget(tuple(run.budget.ns))
    region = union_region(channel, budget, optimizer=run.optimizer)
    tmsv = one_shot_region(channel, GaussianEncoding.tmsv(channel.s), budget)

    rows, records = [], []
    for ray in region.rays:
        if not ray.constraints.feasible(ray.point, tol=1e-9):
            raise GaussMacError(f"Ray point {ray.point.R} violates its own rate constraints")
        row: Dict[str, Any] = {"phi": ray.phi}
        row.update({f"R{k}": v for k, v in enumerate(ray.point.R, start=1)})
        row.update({f"r{k}": v for k, v in enumerate(ray.encoding.r, start=1)})
        row.update({f"theta{k}": v for k, v in enumerate(ray.encoding.theta[1:], start=2)})
        row["iterations"] = ray.iterations
        rows.append(row)
        records.append(RayRecord(
            phi=ray.phi,
            direction=list(ray.direction),
            rates=list(ray.point.R),
            r=list(ray.encoding.r),
            theta=list(ray.encoding.theta),
            iterations=ray.iterations,
            converged=ray.converged,
            r_trace=list(ray.r_trace),
        ))

    hull = region.hull.tolist()
    report = RegionReport(
        s=channel.s,
        ns=list(budget.N_S),
        rays=records,
        hull=hull,
        tmsv_constraints=tmsv.as_labels(),
    )
    stalled = [i for i, ray in enumerate(region.rays) if not ray.converged]
    failure = None
    if stalled:
        failure = OptimizerError(f"{len(stalled)} ray(s) did not converge: {stalled}", partial=report)
    return CommandOutput(rows, document=report.model_dump(), extras={"hull": hull}, failure=failure)


def run_memory(run: RunConfig) -> CommandOutput:
    cfg = run.memory
    params = CausalMemoryParams(cfg.epsilon, cfg.gamma, cfg.n, cfg.nb)
    s = len(cfg.eta)
    rows, stalled = [], 0
    for total, budget in budget_points(run, s, fixed=cfg.ns):
        ea, allocation = memory_total_rate(params, cfg.eta, budget, run.optimizer)
        coh = memory_coherent_benchmark(params, cfg.eta, budget, run.optimizer)
        bottleneck = memory_bottleneck_bound(params, cfg.eta, budget, run.optimizer)
        stalled += 0 if allocation.converged else 1
        rows.append({
            "N_S": total,
            "ea_rate": ea,
            "coherent_rate": coh,
            "ratio": _ratio(ea, coh),
            "ea_bottleneck": bottleneck,
        })
    failure = OptimizerError(f"Energy allocation did not converge at {stalled} budget point(s)") if stalled else None
    return CommandOutput(rows, failure=failure)


def run_oracle_check(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    if channel.s != 1:
        raise ConfigError("oracle-check needs a single-sender channel")
    bgc_class = classify(to_interference(channel)[1])
    if bgc_class is not BgcClass.THERMAL_LOSS:
        raise ConfigError(f"oracle-check supports thermal-loss channels, got {bgc_class.value}")
    tau, nb = float(channel.w2[0]), channel.N_B

    rows, worst = [], 0.0
    for total, budget in budget_points(run, 1):
        gaussian = ea_total_rate_capacity(channel, budget)
        fock = fock_thermal_loss_rate(tau, nb, budget.N_S[0])
        worst = max(worst, abs(fock - gaussian))
        rows.append({"N_S": total, "gaussian_rate": gaussian, "fock_rate": fock, "difference": fock - gaussian})
    failure = None
    if worst > ORACLE_TOLERANCE:
        failure = GaussMacError(f"Fock oracle disagrees with the Gaussian pipeline by {worst:.3e} bits")
    else:
        logger.info(f"✅ Fock oracle agrees within {worst:.2e} bits")
    return CommandOutput(rows, failure=failure)


def run_eta_sweep(run: RunConfig) -> CommandOutput:
    channel = _channel(run)
    _, bgc = to_interference(channel)
    if run.budget is None:
        raise ConfigError("eta-sweep needs a fixed budget ('ns')")
    etas = run.sweep.etas if run.sweep and run.sweep.etas else np.linspace(0.0, 1.0, 11).tolist()
    budget = EnergyBudget(tuple(run.budget.ns))
    return CommandOutput(eta_sweep(bgc, budget, etas))


COMMANDS: Dict[str, Callable[[RunConfig], CommandOutput]] = {
    "point-capacity": run_point_capacity,
    "coherent-region": run_coherent_region,
    "outer-bounds": run_outer_bounds,
    "ea-total": run_ea_total,
    "gaussian-region": run_gaussian_region,
    "memory": run_memory,
    "oracle-check": run_oracle_check,
    "eta-sweep": run_eta_sweep,
}


# ============= Output =============

NON_RATE_COLUMNS = re.compile(r"N_S|phi|eta1|difference|iterations|(r|theta)\d+")


def check_rows(rows: List[Dict[str, Any]]):
    """Self-consistency before writing: rates are finite and non-negative"""
    for row in rows:
        for key, value in row.items():
            if NON_RATE_COLUMNS.fullmatch(key):
                continue
            if isinstance(value, float) and (not np.isfinite(value) or value < -1e-9):
                raise GaussMacError(f"Refusing to write {key}={value}: rates must be finite and non-negative")


def _format(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{settings.CSV_SIGNIFICANT_DIGITS}g}"
    return value


def write_output(output: CommandOutput, path: Optional[str], fmt: str) -> List[Path]:
    """Write rows (CSV) or the structured document (JSON); returns the files written"""
    check_rows(output.rows)
    written: List[Path] = []
    if path is None:
        for row in output.rows:
            logger.info(", ".join(f"{k}={_format(v)}" for k, v in row.items()))
        return written

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = output.document if output.document is not None else output.rows
        target.write_text(json.dumps(payload, indent=2, sort_keys=True))
    else:
        fields: List[str] = []
        for row in output.rows:
            fields += [k for k in row if k not in fields]
        with target.open("w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            writer.writeheader()
            for row in output.rows:
                writer.writerow({k: _format(row.get(k)) for k in fields})
        for suffix, obj in output.extras.items():
            extra = target.with_suffix(f".{suffix}.json")
            extra.write_text(json.dumps(obj, indent=2))
            written.append(extra)
    written.insert(0, target)
    return written
