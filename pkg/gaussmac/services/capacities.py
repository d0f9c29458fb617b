"""
Closed-form rate limits for phase-insensitive BGMACs.

All rates are in bits per channel use.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ShapeError, UnphysicalError
from gaussmac.services.bgmac import (
    PhaseInsensitiveBgmac,
    PointToPointBgc,
    apply_to_cm,
    interference_bgmac,
)
from gaussmac.services.gaussian_core import (
    CovarianceMatrix,
    direct_sum,
    entropy_of,
    g_function,
    tmsv_cm,
)

logger = logging.getLogger(__name__)


# ============= Domain Types =============

@dataclass(frozen=True)
class EnergyBudget:
    """Mean photon number per sender"""

    N_S: Tuple[float, ...]

    def __post_init__(self):
        values = []
        for x in self.N_S:
            x = float(x)
            if x < -settings.PHYSICALITY_TOL:
                raise UnphysicalError(f"Energy budget entries must be non-negative, got {x}")
            values.append(max(x, 0.0))
        object.__setattr__(self, "N_S", tuple(values))

    @property
    def s(self) -> int:
        return len(self.N_S)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.N_S, dtype=float)

    @classmethod
    def zeros(cls, s: int) -> "EnergyBudget":
        return cls((0.0,) * s)

    @classmethod
    def from_fractions(cls, fractions: Sequence[float], N_S: float) -> "EnergyBudget":
        """N_{S,k} = fraction_k · N_S"""
        return cls(tuple(f * N_S for f in fractions))


@dataclass(frozen=True)
class SenderSet:
    """Subset J of {1..s} stored as a bitmask (bit k-1 set for sender k)"""

    mask: int
    s: int

    def __post_init__(self):
        if self.s < 1:
            raise ShapeError("SenderSet needs s >= 1")
        if not 0 <= self.mask < (1 << self.s):
            raise ShapeError(f"Mask {self.mask} is outside the universe of {self.s} senders")

    @classmethod
    def of(cls, s: int, members: Sequence[int]) -> "SenderSet":
        """Build from 1-based sender numbers"""
        mask = 0
        for k in members:
            if not 1 <= k <= s:
                raise ShapeError(f"Sender {k} not in 1..{s}")
            mask |= 1 << (k - 1)
        return cls(mask, s)

    @classmethod
    def universe(cls, s: int) -> "SenderSet":
        return cls((1 << s) - 1, s)

    @classmethod
    def empty(cls, s: int) -> "SenderSet":
        return cls(0, s)

    @classmethod
    def all_subsets(cls, s: int) -> Iterator["SenderSet"]:
        for mask in range(1 << s):
            yield cls(mask, s)

    @property
    def indices(self) -> Tuple[int, ...]:
        """0-based positions of the members"""
        return tuple(k for k in range(self.s) if self.mask >> k & 1)

    @property
    def complement(self) -> "SenderSet":
        return SenderSet(((1 << self.s) - 1) ^ self.mask, self.s)

    def is_empty(self) -> bool:
        return self.mask == 0

    def issubset(self, other: "SenderSet") -> bool:
        return self.mask & ~other.mask == 0

    def label(self) -> str:
        return "{" + ",".join(str(k + 1) for k in self.indices) + "}"

    def __len__(self) -> int:
        return len(self.indices)


class OuterCondition(str, Enum):
    A = "A"  # conjugators on the contravariant senders
    B = "B"  # conjugators on the covariant senders


@dataclass(frozen=True)
class OuterBounds:
    kind: str  # "unassisted" or "ea"
    condition_used: OuterCondition
    individual: Tuple[float, ...]
    total: float
    per_sender_dark_counts: Tuple[float, ...]
    alternative: Optional["OuterBounds"] = None

    @property
    def tightest_total(self) -> float:
        if self.alternative is None:
            return self.total
        return min(self.total, self.alternative.total)


# ============= Helpers =============

def _check_budget(channel: PhaseInsensitiveBgmac, budget: EnergyBudget):
    if budget.s != channel.s:
        raise ShapeError(f"Budget has {budget.s} entries for a {channel.s}-sender channel")


def _condition_params(
    channel: PhaseInsensitiveBgmac, condition: OuterCondition
) -> Optional[Tuple[np.ndarray, int, float]]:
    """
    (δ'_k, δ of the bottleneck channel, σ²) for the conjugator decomposition,
    or None when the bottleneck channel would be unphysical.
    """
    w2 = channel.w2
    d = np.asarray(channel.delta, dtype=float)
    W2 = channel.total_gain
    if condition is OuterCondition.A:
        delta_prime, delta_out = d, 0
        floor = max(W2 - 1.0, 0.0) + float(np.sum(w2 * d))
    else:
        delta_prime, delta_out = 1.0 - d, 1
        floor = W2 + float(np.sum(w2 * (1.0 - d)))
    if channel.N_B < floor - settings.PHYSICALITY_TOL:
        return None
    sigma2 = max(channel.N_B - float(np.sum(w2 * delta_prime)), 0.0)
    return delta_prime, delta_out, sigma2


def feasible_conditions(channel: PhaseInsensitiveBgmac) -> List[OuterCondition]:
    return [c for c in OuterCondition if _condition_params(channel, c) is not None]


def preferred_condition(channel: PhaseInsensitiveBgmac) -> OuterCondition:
    """(a) when Σ(1-2δ_k)|w_k|² >= 0, i.e. when covariant weight dominates"""
    d = np.asarray(channel.delta, dtype=float)
    return OuterCondition.A if float(np.sum((1 - 2 * d) * channel.w2)) >= 0 else OuterCondition.B


# ============= Coherent-state Region =============

def coherent_bound(channel: PhaseInsensitiveBgmac, budget: EnergyBudget, J: SenderSet) -> float:
    """C_coh,J = g(Σ_{k∈J} |w_k|² N_{S,k} + N_B) - g(N_B)"""
    _check_budget(channel, budget)
    if J.is_empty():
        return 0.0
    idx = list(J.indices)
    signal = float(np.sum(channel.w2[idx] * budget.array[idx]))
    return max(g_function(signal + channel.N_B) - g_function(channel.N_B), 0.0)


# ============= Entanglement-assisted Point-to-point =============

def ea_bgc_capacity(delta: int, N_S: float, w2: float, N_B: float) -> float:
    """
    EA classical capacity of a phase-insensitive BGC, achieved by a TMSV input.

    C_E = g(N_S) + g(N_S') - g(A_+) - g(A_-) with N_S' = |w|² N_S + N_B.
    """
    bgc = PointToPointBgc(int(delta), float(w2), float(N_B))
    N = float(N_S)
    if N < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(f"N_S must be non-negative, got {N}")
    N = max(N, 0.0)
    N_out = bgc.w2 * N + bgc.N_B

    if bgc.delta == 0:
        radicand = (N + N_out + 1) ** 2 - 4 * bgc.w2 * N * (N + 1)
    else:
        radicand = (N_out - N) ** 2 + 4 * bgc.w2 * N * (N + 1)
    if radicand < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(f"Negative radicand {radicand:.3e} in EA capacity")
    D = np.sqrt(max(radicand, 0.0))

    if bgc.delta == 0:
        a_plus = (D - 1 + (N_out - N)) / 2
        a_minus = (D - 1 - (N_out - N)) / 2
    else:
        a_plus = (N + N_out + D) / 2
        a_minus = (N + N_out - D) / 2

    value = g_function(N) + g_function(N_out) - g_function(a_plus) - g_function(a_minus)
    return max(float(value), 0.0)


# ============= Output Entropies =============

def output_entropy_table(V_out: CovarianceMatrix, s: int) -> Callable[[bool, SenderSet], float]:
    """Memoised S(A'[X]) and S(B, A'[X]) on the output layout [B, A'_1..A'_s]"""
    cache: Dict[Tuple[bool, int], float] = {}

    def entropy(with_b: bool, X: SenderSet) -> float:
        key = (with_b, X.mask)
        if key not in cache:
            modes = ([0] if with_b else []) + [k + 1 for k in X.indices]
            cache[key] = entropy_of(V_out, modes)
        return cache[key]

    return entropy


def rate_bound(entropy: Callable[[bool, SenderSet], float], J: SenderSet) -> float:
    """F_J = S(A') + S(B, A'[J^c]) - S(B, A') - S(A'[J^c]); zero for the empty set"""
    if J.is_empty():
        return 0.0
    U = SenderSet.universe(J.s)
    Jc = J.complement
    return entropy(False, U) + entropy(True, Jc) - entropy(True, U) - entropy(False, Jc)


def ea_total_rate_capacity(channel: PhaseInsensitiveBgmac, budget: EnergyBudget) -> float:
    """I(A';B) of the product-TMSV input, the EA total-rate capacity (F_U at zero squeezing)"""
    _check_budget(channel, budget)
    V_out = apply_to_cm(channel, direct_sum(*(tmsv_cm(N) for N in budget.N_S)))
    value = rate_bound(output_entropy_table(V_out, channel.s), SenderSet.universe(channel.s))
    return max(float(value), 0.0)


# ============= Outer Bounds =============

def outer_bounds_for_condition(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    condition: OuterCondition,
    kind: str = "unassisted",
) -> Optional[OuterBounds]:
    """
    Super-receiver individual caps and bottleneck total cap under one
    conjugator decomposition; None when that decomposition is unphysical.
    """
    _check_budget(channel, budget)
    if kind not in ("unassisted", "ea"):
        raise ShapeError(f"Unknown bound kind '{kind}'")
    params = _condition_params(channel, condition)
    if params is None:
        return None
    delta_prime, delta_out, sigma2 = params
    W2 = channel.total_gain
    N = budget.array
    dark = sigma2 + W2 * delta_prime

    if kind == "unassisted":
        individual = [
            max(g_function(W2 * N[k] + dark[k]) - g_function(dark[k]), 0.0) for k in range(channel.s)
        ]
        total = g_function(float(np.sum(channel.w2 * (N + delta_prime))) + sigma2) - g_function(sigma2)
    else:
        individual = [
            ea_bgc_capacity(channel.delta[k], N[k], W2, dark[k]) for k in range(channel.s)
        ]
        eta = channel.w2 / W2 if W2 > 0 else np.zeros(channel.s)
        total = ea_bgc_capacity(delta_out, float(np.sum(eta * (N + delta_prime))), W2, sigma2)

    return OuterBounds(
        kind=kind,
        condition_used=condition,
        individual=tuple(float(x) for x in individual),
        total=max(float(total), 0.0),
        per_sender_dark_counts=tuple(float(x) for x in dark),
    )


def _outer(channel, budget, kind, condition):
    if condition is not None:
        bounds = outer_bounds_for_condition(channel, budget, condition, kind)
        if bounds is None:
            logger.warning(f"Condition ({condition.value}) does not hold; no {kind} outer bound available")
        return bounds

    feasible = feasible_conditions(channel)
    if not feasible:
        logger.warning(f"Neither outer-bound condition holds; no {kind} outer bound available")
        return None
    primary = preferred_condition(channel)
    if primary not in feasible:
        primary = feasible[0]
    bounds = outer_bounds_for_condition(channel, budget, primary, kind)
    others = [c for c in feasible if c is not primary]
    if others:
        alternative = outer_bounds_for_condition(channel, budget, others[0], kind)
        bounds = OuterBounds(
            kind=bounds.kind,
            condition_used=bounds.condition_used,
            individual=bounds.individual,
            total=bounds.total,
            per_sender_dark_counts=bounds.per_sender_dark_counts,
            alternative=alternative,
        )
    return bounds


def unassisted_outer(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    condition: Optional[OuterCondition] = None,
) -> Optional[OuterBounds]:
    """Unassisted outer bounds; the condition is auto-selected unless given"""
    return _outer(channel, budget, "unassisted", condition)


def ea_outer(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    condition: Optional[OuterCondition] = None,
) -> Optional[OuterBounds]:
    """Entanglement-assisted outer bounds; each cap is a point-to-point EA capacity"""
    return _outer(channel, budget, "ea", condition)


# ============= Studies =============

def eta_sweep(bgc: PointToPointBgc, budget: EnergyBudget, etas: Sequence[float]) -> List[Dict[str, Optional[float]]]:
    """Total rates of the two-sender interference channel versus the ratio η_1"""
    if budget.s != 2:
        raise ShapeError("eta_sweep is defined for two senders")
    universe = SenderSet.universe(2)
    rows = []
    for eta1 in etas:
        channel = interference_bgmac((eta1, 1.0 - eta1), bgc)
        bounds = ea_outer(channel, budget)
        rows.append({
            "eta1": float(eta1),
            "ea_total": ea_total_rate_capacity(channel, budget),
            "coherent_total": coherent_bound(channel, budget, universe),
            "ea_bottleneck": bounds.total if bounds is not None else None,
        })
    logger.debug(f"eta sweep finished over {len(rows)} ratios")
    return rows
