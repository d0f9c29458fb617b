"""
One-shot Gaussian-state rate regions of a BGMAC.

Each sender k prepares a squeezed TMSV: Ŝ(r_k, θ_k) on the signal half of a
TMSV whose photon number N'_k keeps the signal at N_{S,k}. For a fixed encoding
the achievable rates form the polytope Σ_{k∈J} R_k <= F_J with
F_J = I(A'[J]; B | A'[J^c]). The union over encodings is traced out ray by ray.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ShapeError, UnphysicalError
from gaussmac.schemas.run_schemas import OptimizerSettings
from gaussmac.services.bgmac import PhaseInsensitiveBgmac, apply_to_cm
from gaussmac.services.capacities import (
    EnergyBudget,
    SenderSet,
    coherent_bound,
    output_entropy_table,
    rate_bound,
)
from gaussmac.services.gaussian_core import (
    OUTPUT_LABEL,
    CovarianceMatrix,
    ModeLayout,
    apply_transform,
    direct_sum,
    entropy_of,
    local_transform,
    purify_single_mode,
    signal_label,
    squeezer,
    subsystem_cm,
    symplectic_form,
    tmsv_cm,
    vacuum_cm,
)

logger = logging.getLogger(__name__)


# ============= Domain Types =============

@dataclass(frozen=True)
class GaussianEncoding:
    r: Tuple[float, ...]
    theta: Tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        theta = tuple(float(x) for x in self.theta)
        if len(r) != len(theta):
            raise ShapeError(f"Encoding has {len(r)} squeezings but {len(theta)} phases")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @property
    def s(self) -> int:
        return len(self.r)

    @property
    def r_norm(self) -> float:
        return float(np.linalg.norm(self.r))

    @classmethod
    def tmsv(cls, s: int) -> "GaussianEncoding":
        """No squeezing: product of TMSV states"""
        return cls((0.0,) * s, (0.0,) * s)


@dataclass(frozen=True)
class RatePoint:
    R: Tuple[float, ...]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.R))

    @property
    def total(self) -> float:
        return float(sum(self.R))


@dataclass(frozen=True)
class RegionConstraints:
    """Bounds Σ_{k∈J} R_k <= bound(J) keyed by the SenderSet bitmask"""

    s: int
    bounds: Dict[int, float]

    def __post_init__(self):
        if set(self.bounds) != set(range(1 << self.s)):
            raise ShapeError(f"Region needs all {1 << self.s} sender sets")
        if self.bounds[0] != 0.0:
            raise ShapeError("bound of the empty sender set must be 0")

    def bound(self, J: SenderSet) -> float:
        return self.bounds[J.mask]

    def slack(self, point: RatePoint) -> float:
        """Smallest bound(J) - Σ_{k∈J} R_k over the non-empty J"""
        R = np.asarray(point.R)
        return min(
            self.bounds[J.mask] - float(np.sum(R[list(J.indices)]))
            for J in SenderSet.all_subsets(self.s) if not J.is_empty()
        )

    def feasible(self, point: RatePoint, tol: float = 1e-9) -> bool:
        return min(point.R) >= -tol and self.slack(point) >= -tol

    def step_length(self, direction: Sequence[float]) -> float:
        """
        Largest t with t·d inside the polytope.

        The constraints are linear in t, so the limit of a bisection on t is
        min_J bound(J) / Σ_{k∈J} d_k, taken directly.
        """
        d = np.asarray(direction, dtype=float)
        t = np.inf
        for J in SenderSet.all_subsets(self.s):
            load = float(np.sum(d[list(J.indices)]))
            if load > 0:
                t = min(t, max(self.bounds[J.mask], 0.0) / load)
        return 0.0 if not np.isfinite(t) else float(t)

    def as_labels(self) -> Dict[str, float]:
        return {J.label(): self.bounds[J.mask] for J in SenderSet.all_subsets(self.s)}


@dataclass(frozen=True)
class RayResult:
    direction: Tuple[float, ...]
    phi: Optional[float]
    encoding: GaussianEncoding
    point: RatePoint
    constraints: RegionConstraints
    iterations: int
    converged: bool
    r_trace: Tuple[float, ...] = field(default=())

    @property
    def slope(self) -> Optional[float]:
        """c = R_2 / R_1 for two senders"""
        if len(self.point.R) != 2 or self.point.R[0] == 0:
            return None
        return self.point.R[1] / self.point.R[0]


@dataclass(frozen=True)
class UnionRegion:
    rays: List[RayResult]
    hull: np.ndarray  # vertices, one row per point


# ============= Encodings =============

def r_star(N_S: float) -> float:
    """Largest squeezing compatible with signal energy N_S: ½ log(1 + 2N + 2√(N(N+1)))"""
    return float(np.arcsinh(np.sqrt(max(N_S, 0.0))))


def tmsv_photon_for(N_S: float, r: float) -> float:
    """N'_S with cosh(2r)·N'_S + sinh²r = N_S"""
    value = (N_S - np.sinh(r) ** 2) / np.cosh(2 * r)
    if value < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(f"|r| = {abs(r):.6g} exceeds r* = {r_star(N_S):.6g} for N_S = {N_S:.6g}")
    return float(max(value, 0.0))


def gaussian_input_cm(encoding: GaussianEncoding, budget: EnergyBudget) -> CovarianceMatrix:
    """Product over senders of squeezed TMSV states, layout [A_1, A'_1, ..., A_s, A'_s]"""
    if encoding.s != budget.s:
        raise ShapeError(f"Encoding for {encoding.s} senders, budget for {budget.s}")
    pairs = []
    for r, theta, N in zip(encoding.r, encoding.theta, budget.N_S):
        if abs(r) > r_star(N) + 1e-12:
            raise UnphysicalError(f"|r| = {abs(r):.6g} exceeds r* = {r_star(N):.6g} for N_S = {N:.6g}")
        T = local_transform(squeezer(r, theta).matrix, [0], 2)
        pairs.append(apply_transform(T, tmsv_cm(tmsv_photon_for(N, r))))
    return direct_sum(*pairs)


# ============= Rate Functionals =============

def rate_functional_F_J(
    channel: PhaseInsensitiveBgmac,
    encoding: GaussianEncoding,
    budget: EnergyBudget,
    J: SenderSet,
) -> float:
    """F_J = S(A') + S(B, A'[J^c]) - S(B, A') - S(A'[J^c])"""
    V_out = apply_to_cm(channel, gaussian_input_cm(encoding, budget))
    return float(rate_bound(output_entropy_table(V_out, channel.s), J))


def one_shot_region(
    channel: PhaseInsensitiveBgmac,
    encoding: GaussianEncoding,
    budget: EnergyBudget,
) -> RegionConstraints:
    if channel.s > settings.MAX_SENDERS:
        raise ShapeError(f"Region evaluation supports at most {settings.MAX_SENDERS} senders")
    V_out = apply_to_cm(channel, gaussian_input_cm(encoding, budget))
    entropy = output_entropy_table(V_out, channel.s)
    bounds = {
        J.mask: max(float(rate_bound(entropy, J)), 0.0) for J in SenderSet.all_subsets(channel.s)
    }
    return RegionConstraints(channel.s, bounds)


def pentagon_contains(outer: RegionConstraints, inner: RegionConstraints, rel_tol: float = 1e-3) -> bool:
    """
    Bound-wise containment of one rate polytope in another.

    Exact for polymatroidal regions, where every bound is attained.
    """
    if outer.s != inner.s:
        raise ShapeError("Regions have different sender counts")
    return all(
        inner.bounds[mask] <= outer.bounds[mask] * (1 + rel_tol) + 1e-12 for mask in outer.bounds
    )


def gradient_F_J(
    channel: PhaseInsensitiveBgmac,
    encoding: GaussianEncoding,
    budget: EnergyBudget,
    J: SenderSet,
    h: Optional[float] = None,
) -> np.ndarray:
    """
    Finite-difference gradient of F_J over (r_1..r_s, θ_1..θ_s).

    Central differences, switching to one-sided ones where a step would cross r*.
    """
    h = h or settings.GRADIENT_STEP
    s = encoding.s
    r0 = np.asarray(encoding.r)
    theta0 = np.asarray(encoding.theta)

    def F(r, theta):
        return rate_functional_F_J(channel, GaussianEncoding(tuple(r), tuple(theta)), budget, J)

    f0 = None
    grad = np.zeros(2 * s)
    for k in range(s):
        limit = r_star(budget.N_S[k])
        up, down = r0.copy(), r0.copy()
        up[k] += h
        down[k] -= h
        can_up, can_down = up[k] <= limit, down[k] >= -limit
        if can_up and can_down:
            grad[k] = (F(up, theta0) - F(down, theta0)) / (2 * h)
        elif can_up or can_down:
            if f0 is None:
                f0 = F(r0, theta0)
            grad[k] = (F(up, theta0) - f0) / h if can_up else (f0 - F(down, theta0)) / h
        else:
            logger.debug(f"r* = {limit:.3g} below step {h}; derivative in r_{k + 1} set to 0")
    for k in range(s):
        up, down = theta0.copy(), theta0.copy()
        up[k] += h
        down[k] -= h
        grad[s + k] = (F(r0, up) - F(r0, down)) / (2 * h)
    return grad


# ============= Ray Optimization =============

def ray_directions(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    n_rays: int,
    seed: int = 0,
) -> List[Tuple[Optional[float], np.ndarray]]:
    """
    Ray directions with their polar angle φ.

    For two senders φ is uniform in [0, π/2) in coordinates normalised by the
    single-sender coherent capacities; more senders get seeded random positive
    directions; a single sender has only its own axis.
    """
    s = channel.s
    if s == 1:
        return [(0.0, np.ones(1))]
    scale = np.array([
        coherent_bound(channel, budget, SenderSet.of(s, [k + 1])) for k in range(s)
    ])
    scale = np.where(scale > 0, scale, 1.0)
    if s == 2:
        phis = [i * (np.pi / 2) / n_rays for i in range(n_rays)]
        return [(phi, scale * np.array([np.cos(phi), np.sin(phi)])) for phi in phis]
    rng = np.random.default_rng(seed)
    return [(None, scale * rng.uniform(0.05, 1.0, size=s)) for _ in range(n_rays)]


def _decode(x: np.ndarray, limits: np.ndarray, s: int) -> GaussianEncoding:
    r = np.clip(x[:s], -1.0, 1.0) * limits
    theta = np.concatenate([[0.0], x[s:]])
    return GaussianEncoding(tuple(r), tuple(theta))


def ray_maximize(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    direction: Sequence[float],
    optimizer: Optional[OptimizerSettings] = None,
    phi: Optional[float] = None,
) -> RayResult:
    """
    Maximise the feasible step length along a ray over Gaussian encodings.

    Nelder-Mead over (r_k / r*_k, θ_2..θ_s) with θ_1 = 0, multi-start from
    r = 0 plus seeded random points. Among near-ties the encoding with the
    smallest ‖r‖ wins.
    """
    optimizer = optimizer or OptimizerSettings()
    d = np.asarray(direction, dtype=float)
    if d.shape != (channel.s,) or np.any(d < 0) or not np.any(d > 0):
        raise ShapeError(f"Ray direction must be non-negative and nonzero, got {d.tolist()}")
    s = channel.s
    limits = np.array([r_star(N) for N in budget.N_S])

    def evaluate(x: np.ndarray) -> Tuple[float, GaussianEncoding, RegionConstraints]:
        encoding = _decode(x, limits, s)
        region = one_shot_region(channel, encoding, budget)
        return region.step_length(d), encoding, region

    x0 = np.zeros(2 * s - 1)
    t0, enc0, region0 = evaluate(x0)
    if t0 <= 0:
        point = RatePoint(tuple(0.0 for _ in range(s)))
        return RayResult(tuple(d), phi, enc0, point, region0, 0, True, (0.0,))

    rng = np.random.default_rng(optimizer.seed)
    starts = [x0] + [
        np.concatenate([rng.uniform(-1, 1, s), rng.uniform(0, np.pi, s - 1)])
        for _ in range(optimizer.starts - 1)
    ]
    bounds = [(-1.0, 1.0)] * s + [(0.0, np.pi)] * (s - 1)

    # (t, ‖r‖, x, run index)
    candidates = []
    runs = []
    for run, start in enumerate(starts):
        trace = [_decode(start, limits, s).r_norm]

        def record(xk, trace=trace):
            trace.append(_decode(xk, limits, s).r_norm)

        result = minimize(
            lambda x: -evaluate(x)[0],
            start,
            method="Nelder-Mead",
            bounds=bounds,
            callback=record,
            options={
                "maxiter": optimizer.maxiter,
                "xatol": 1e-4,
                "fatol": optimizer.rtol * t0,
            },
        )
        runs.append((result, trace))
        for x in (start, result.x):
            t = evaluate(x)[0]
            candidates.append((t, _decode(x, limits, s).r_norm, x, run))
        logger.debug(f"ray {d.round(6).tolist()} start {run}: t={-result.fun:.9g}, nit={result.nit}")

    best_t = max(c[0] for c in candidates)
    near = [c for c in candidates if c[0] >= best_t - 1e-9 * abs(best_t)]
    t, _, x, run = min(near, key=lambda c: c[1])
    result, trace = runs[run]

    t, encoding, region = evaluate(x)
    point = RatePoint(tuple(float(v) for v in t * d))
    if not result.success:
        logger.warning(f"⚠️ Ray {d.round(6).tolist()} did not converge in {optimizer.maxiter} iterations")
    return RayResult(
        direction=tuple(d),
        phi=phi,
        encoding=encoding,
        point=point,
        constraints=region,
        iterations=int(result.nit),
        converged=bool(result.success),
        r_trace=tuple(trace),
    )


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 1:
        return np.array([[0.0], [float(points.max())]])
    try:
        hull = ConvexHull(points)
        return points[hull.vertices]
    except (QhullError, ValueError) as e:
        logger.debug(f"Convex hull degenerate ({e}); returning raw points")
        return np.unique(points, axis=0)


def union_region(
    channel: PhaseInsensitiveBgmac,
    budget: EnergyBudget,
    n_rays: Optional[int] = None,
    optimizer: Optional[OptimizerSettings] = None,
) -> UnionRegion:
    """Optimal ray points over Gaussian encodings and the convex hull of those points with the origin"""
    optimizer = optimizer or OptimizerSettings()
    n_rays = n_rays or optimizer.rays
    directions = ray_directions(channel, budget, n_rays, optimizer.seed)
    logger.info(f"Optimising {len(directions)} rays for s={channel.s} with {optimizer.workers} worker(s)")

    def run(item):
        i, (phi, d) = item
        per_ray = optimizer.model_copy(update={"seed": optimizer.seed + i})
        return ray_maximize(channel, budget, d, per_ray, phi=phi)

    items = list(enumerate(directions))
    if optimizer.workers > 1:
        with ThreadPoolExecutor(max_workers=optimizer.workers) as pool:
            rays = list(pool.map(run, items))
    else:
        rays = [run(item) for item in items]

    points = np.vstack([np.zeros(channel.s)] + [np.asarray(ray.point.R) for ray in rays])
    return UnionRegion(rays=rays, hull=_hull_vertices(points))


# ============= Subadditivity =============

def random_two_use_input(s: int, rng: np.random.Generator, max_photons: float = 2.0) -> CovarianceMatrix:
    """
    Correlated pure two-use input, per sender [A_k(1), A_k(2), R_k(1), R_k(2)].

    Two TMSVs followed by a random symplectic on the sender's two signal modes.
    """
    omega = symplectic_form(2)
    blocks = []
    for _ in range(s):
        n1, n2 = rng.uniform(0, max_photons, 2)
        # modes [A(1), R(1), A(2), R(2)] -> [A(1), A(2), R(1), R(2)]
        V = direct_sum(tmsv_cm(n1), tmsv_cm(n2)).matrix
        order = [0, 1, 4, 5, 2, 3, 6, 7]
        V = CovarianceMatrix(V[np.ix_(order, order)])
        H = rng.normal(size=(4, 4)) * 0.5
        S = expm(omega @ (H + H.T) / 2)
        blocks.append(apply_transform(local_transform(S, [0, 1], 4), V))
    return direct_sum(*blocks)


def _two_use_layout(s: int) -> ModeLayout:
    labels = []
    for k in range(1, s + 1):
        labels += [signal_label(k), f"U{k}", f"R{k}.1", f"R{k}.2"]
    return ModeLayout(tuple(labels))


def subadditivity_sample(
    channel_1: PhaseInsensitiveBgmac,
    channel_2: PhaseInsensitiveBgmac,
    V_joint: CovarianceMatrix,
) -> Tuple[float, float]:
    """
    (I(R; B_1 B_2), I_U(use 1) + I_U(use 2)) for a two-use input.

    The per-use terms purify each sender's single-mode reduced state on that use.
    """
    s = channel_1.s
    if channel_2.s != s:
        raise ShapeError("Both uses need the same number of senders")
    layout = _two_use_layout(s)
    if V_joint.m != layout.m:
        raise ShapeError(f"Two-use input must have {layout.m} modes, got {V_joint.m}")

    after_1 = apply_to_cm(channel_1, V_joint, layout)
    mid_labels = ("B1",) + tuple(
        signal_label(int(label[1:])) if label.startswith("U") else label
        for label in layout.labels if not label.startswith("A")
    )
    after_2 = apply_to_cm(channel_2, after_1, ModeLayout(mid_labels))
    outputs, refs = [0, 1], list(range(2, after_2.m))
    lhs = entropy_of(after_2, refs) + entropy_of(after_2, outputs) - entropy_of(after_2, outputs + refs)

    rhs = 0.0
    for use, channel in ((0, channel_1), (1, channel_2)):
        pure = [
            purify_single_mode(subsystem_cm(V_joint, [layout.position(label)]))
            for label in layout.labels[use::4]
        ]
        V_out = apply_to_cm(channel, direct_sum(*pure))
        idlers = list(range(1, s + 1))
        rhs += entropy_of(V_out, idlers) + entropy_of(V_out, [0]) - entropy_of(V_out, [0] + idlers)
    return float(lhs), float(rhs)
