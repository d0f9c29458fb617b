"""
N-fold causal memory interference BGMAC.

Each use couples the signal a^(k) and a fresh thermal mode e^(k) to a memory
mode m through two beamsplitters (ε: noise-memory, γ: signal-memory):

    m^(k+1) = √(εγ) m^(k) + √(1-γ) a^(k) + √(γ(1-ε)) e^(k)
    b^(k)   = -√(ε(1-γ)) m^(k) + √γ a^(k) - √((1-ε)(1-γ)) e^(k)

The memory starts thermal with the same N_B as the environment. The SVD of
the signal transfer matrix unravels the N uses into N independent thermal-loss
channels whose total-rate capacities add.
"""

from dataclasses import dataclass
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.optimize import minimize_scalar

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ShapeError, UnphysicalError
from gaussmac.schemas.run_schemas import OptimizerSettings
from gaussmac.services.bgmac import PointToPointBgc, apply_to_cm, check_eta, interference_bgmac
from gaussmac.services.capacities import (
    EnergyBudget,
    SenderSet,
    coherent_bound,
    ea_bgc_capacity,
    ea_total_rate_capacity,
)
from gaussmac.services.gaussian_core import (
    CovarianceMatrix,
    ModeLayout,
    SymplecticTransform,
    apply_transform,
    signal_label,
    thermal_cm,
)

logger = logging.getLogger(__name__)


# ============= Domain Types =============

@dataclass(frozen=True)
class CausalMemoryParams:
    epsilon: float
    gamma: float
    N: int
    N_B: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise UnphysicalError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.gamma <= 1.0:
            raise UnphysicalError(f"gamma must lie in [0, 1], got {self.gamma}")
        if int(self.N) != self.N or self.N < 1:
            raise ShapeError(f"N must be a positive integer, got {self.N}")
        if self.N_B < 0:
            raise UnphysicalError(f"N_B must be non-negative, got {self.N_B}")


@dataclass(frozen=True)
class UnravelledChannels:
    tau: np.ndarray
    nb: np.ndarray
    U: np.ndarray  # output rotation, U W' V^T = diag(√τ)
    V: np.ndarray  # input rotation
    noise_offdiagonal: float  # max |U(I-Ω)U^T| off the diagonal

    @property
    def N(self) -> int:
        return len(self.tau)


@dataclass(frozen=True)
class EnergyAllocation:
    """N_{S,k,d}: rows are senders, columns sub-channels"""

    matrix: np.ndarray
    converged: bool = True

    @property
    def s(self) -> int:
        return self.matrix.shape[0]

    @property
    def N(self) -> int:
        return self.matrix.shape[1]

    def column(self, d: int) -> EnergyBudget:
        return EnergyBudget(tuple(self.matrix[:, d]))


# ============= Transfer Matrices =============

def unroll(params: CausalMemoryParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Signal matrix W' (N x N, lower triangular) and environment matrix K
    (N x (N+1), columns e^(1)..e^(N), m^(1)) with b = W' a + K (e, m).
    """
    eps, gam, N = params.epsilon, params.gamma, params.N
    W = np.zeros((N, N))
    K = np.zeros((N, N + 1))
    mem_a = np.zeros(N)
    mem_env = np.zeros(N + 1)
    mem_env[N] = 1.0

    for k in range(N):
        W[k] = -np.sqrt(eps * (1 - gam)) * mem_a
        W[k, k] += np.sqrt(gam)
        K[k] = -np.sqrt(eps * (1 - gam)) * mem_env
        K[k, k] -= np.sqrt((1 - eps) * (1 - gam))

        mem_a = np.sqrt(eps * gam) * mem_a
        mem_a[k] += np.sqrt(1 - gam)
        mem_env = np.sqrt(eps * gam) * mem_env
        mem_env[k] += np.sqrt(gam * (1 - eps))
    return W, K


def gamma_k(params: CausalMemoryParams, k: int) -> float:
    """γ_k = γ + ε(1-γ)² Σ_{j<k-1} (εγ)^j, finite at εγ = 1"""
    eg = params.epsilon * params.gamma
    series = float(sum(eg ** j for j in range(k - 1)))
    return params.gamma + params.epsilon * (1 - params.gamma) ** 2 * series


def commutation_matrix(params: CausalMemoryParams) -> np.ndarray:
    """Ω_kk' = δ_kk' - (1 - γ_min(k,k')) √(εγ)^|k-k'|"""
    N = params.N
    root = np.sqrt(params.epsilon * params.gamma)
    omega = np.eye(N)
    for k in range(1, N + 1):
        for kp in range(1, N + 1):
            omega[k - 1, kp - 1] -= (1 - gamma_k(params, min(k, kp))) * root ** abs(k - kp)
    return omega


def unravel(params: CausalMemoryParams) -> UnravelledChannels:
    """SVD W' = U^T diag(√τ) V; dark counts (1 - τ_d) N_B"""
    W, _ = unroll(params)
    try:
        left, sv, right = np.linalg.svd(W)
    except np.linalg.LinAlgError as e:
        raise UnphysicalError(f"SVD of the memory transfer matrix failed: {e}")
    U, V = left.T, right
    tau = np.clip(sv ** 2, 0.0, 1.0)

    rotated = U @ (np.eye(params.N) - commutation_matrix(params)) @ U.T
    offdiag = float(np.max(np.abs(rotated - np.diag(np.diag(rotated))))) if params.N > 1 else 0.0
    if offdiag > 1e-10:
        logger.warning(f"⚠️ Unravelled noise not diagonal (max off-diagonal {offdiag:.3e})")
    return UnravelledChannels(tau=tau, nb=(1 - tau) * params.N_B, U=U, V=V, noise_offdiagonal=offdiag)


# ============= Covariance-matrix Action =============

def apply_memory_channel(params: CausalMemoryParams, V_in: CovarianceMatrix) -> CovarianceMatrix:
    """
    Direct action on [a^(1)..a^(N), passengers...] -> [b^(1)..b^(N), passengers...]
    with environment and memory thermal at N_B.
    """
    N = params.N
    if V_in.m < N:
        raise ShapeError(f"Memory channel needs at least {N} input modes, got {V_in.m}")
    W, K = unroll(params)
    p = V_in.m - N
    T = np.zeros((2 * (N + p), 2 * (V_in.m + N + 1)))
    T[:2 * N, :2 * N] = np.kron(W, np.eye(2))
    T[2 * N:2 * (N + p), 2 * N:2 * (N + p)] = np.eye(2 * p)
    T[:2 * N, 2 * V_in.m:] = np.kron(K, np.eye(2))
    return apply_transform(SymplecticTransform(T), V_in, thermal_cm(params.N_B, N + 1))


def apply_unravelled(unravelled: UnravelledChannels, V_in: CovarianceMatrix) -> CovarianceMatrix:
    """Input rotation V, independent thermal-loss channels, output rotation U^T"""
    N = unravelled.N
    if V_in.m < N:
        raise ShapeError(f"Unravelled channel needs at least {N} input modes, got {V_in.m}")

    def rotation(O: np.ndarray) -> SymplecticTransform:
        full = np.eye(2 * V_in.m)
        full[:2 * N, :2 * N] = np.kron(O, np.eye(2))
        return SymplecticTransform(full)

    state = apply_transform(rotation(unravelled.V), V_in)
    labels = [f"M{i}" for i in range(V_in.m)]
    for d in range(N):
        bgc = PointToPointBgc(0, float(unravelled.tau[d]), float(unravelled.nb[d]))
        layout = ModeLayout(tuple(signal_label(1) if i == d else labels[i] for i in range(V_in.m)))
        out = apply_to_cm(bgc.as_bgmac(), state, layout)
        # output is [B, others...]; move B back to position d
        order = list(range(1, d + 1)) + [0] + list(range(d + 1, V_in.m))
        idx = [q for i in order for q in (2 * i, 2 * i + 1)]
        state = CovarianceMatrix(out.matrix[np.ix_(idx, idx)])
    return apply_transform(rotation(unravelled.U.T), state)


# ============= Energy Allocation =============

def _simplex_grid(N: int, step: float) -> List[np.ndarray]:
    levels = int(round(1 / step))
    points = []
    for combo in product(range(levels + 1), repeat=N - 1):
        if sum(combo) <= levels:
            points.append(np.array(list(combo) + [levels - sum(combo)], dtype=float) / levels)
    return points


def _optimize_allocation(
    column_value: Callable[[int, np.ndarray], float],
    budget: EnergyBudget,
    N: int,
    optimizer: OptimizerSettings,
    label: str,
) -> Tuple[float, EnergyAllocation]:
    """
    Maximise Σ_d column_value(d, N_S ∘ x[:, d]) over per-sender split fractions x.

    Pairwise-transfer coordinate ascent from several starts; the objective is
    separable over sub-channels and concave along each transfer.
    """
    s = budget.s
    N_S = budget.array
    if N == 1 or not np.any(N_S > 0):
        alloc = np.zeros((s, N))
        alloc[:, 0] = N_S
        value = sum(column_value(d, alloc[:, d]) for d in range(N))
        return float(value), EnergyAllocation(alloc)

    def total(x: np.ndarray) -> float:
        return float(sum(column_value(d, N_S * x[:, d]) for d in range(N)))

    starts = [np.full((s, N), 1.0 / N)]
    if N <= 3 and s <= 3:
        starts.append(_grid_start(column_value, N_S, N, s))
    rng = np.random.default_rng(optimizer.seed)
    starts += [rng.dirichlet(np.ones(N), size=s) for _ in range(max(optimizer.starts - len(starts), 0))]

    best_value, best_x, all_converged = -np.inf, None, True
    for x in starts:
        x = x.copy()
        value = total(x)
        converged = False
        for sweep in range(settings.ALLOCATION_MAX_SWEEPS):
            previous = value
            for k in range(s):
                if N_S[k] == 0:
                    continue
                for d1 in range(N):
                    for d2 in range(d1 + 1, N):
                        pool = x[k, d1] + x[k, d2]
                        if pool <= 0:
                            continue

                        def pair_loss(lam, k=k, d1=d1, d2=d2, pool=pool):
                            trial = x.copy()
                            trial[k, d1], trial[k, d2] = lam * pool, (1 - lam) * pool
                            return -(column_value(d1, N_S * trial[:, d1]) + column_value(d2, N_S * trial[:, d2]))

                        res = minimize_scalar(pair_loss, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
                        # bounded Brent never evaluates the edges
                        trials = [(pair_loss(x[k, d1] / pool), x[k, d1] / pool), (res.fun, res.x)]
                        trials += [(pair_loss(edge), edge) for edge in (0.0, 1.0)]
                        _, lam = min(trials)
                        x[k, d1], x[k, d2] = lam * pool, (1 - lam) * pool
            value = total(x)
            if value - previous <= optimizer.rtol * max(abs(value), 1e-300):
                converged = True
                break
        all_converged = all_converged and converged
        logger.debug(f"{label} allocation start: value={value:.9g} after {sweep + 1} sweeps")
        if value > best_value:
            best_value, best_x = value, x

    if not all_converged:
        logger.warning(f"⚠️ {label} allocation hit {settings.ALLOCATION_MAX_SWEEPS} sweeps without converging")
    best_x = best_x / best_x.sum(axis=1, keepdims=True)
    return best_value, EnergyAllocation(N_S[:, None] * best_x, converged=all_converged)


def _grid_start(column_value, N_S: np.ndarray, N: int, s: int) -> np.ndarray:
    """Best point of the fraction grid; column values are cached per (d, levels)"""
    grid = _simplex_grid(N, settings.ALLOCATION_GRID_STEP)
    cache: Dict[Tuple[int, Tuple[float, ...]], float] = {}

    def cached(d: int, fractions: Tuple[float, ...]) -> float:
        key = (d, fractions)
        if key not in cache:
            cache[key] = column_value(d, N_S * np.asarray(fractions))
        return cache[key]

    best, best_x = -np.inf, None
    for rows in product(grid, repeat=s):
        x = np.vstack(rows)
        value = sum(cached(d, tuple(x[:, d])) for d in range(N))
        if value > best:
            best, best_x = value, x
    return best_x


def _subchannels(params: CausalMemoryParams, eta: Sequence[float]):
    eta = check_eta(eta)
    unravelled = unravel(params)
    channels = [
        interference_bgmac(eta, PointToPointBgc(0, float(t), float(nb)))
        for t, nb in zip(unravelled.tau, unravelled.nb)
    ]
    return eta, unravelled, channels


def memory_total_rate(
    params: CausalMemoryParams,
    eta: Sequence[float],
    budget: EnergyBudget,
    optimizer: Optional[OptimizerSettings] = None,
) -> Tuple[float, EnergyAllocation]:
    """EA total-rate capacity: Σ_d C_E,U of the unravelled interference channels, optimised over the energy split"""
    _, _, channels = _subchannels(params, eta)
    if budget.s != channels[0].s:
        raise ShapeError(f"Budget has {budget.s} entries for {channels[0].s} senders")

    def value(d: int, column: np.ndarray) -> float:
        return ea_total_rate_capacity(channels[d], EnergyBudget(tuple(column)))

    return _optimize_allocation(value, budget, params.N, optimizer or OptimizerSettings(), "EA")


def memory_coherent_benchmark(
    params: CausalMemoryParams,
    eta: Sequence[float],
    budget: EnergyBudget,
    optimizer: Optional[OptimizerSettings] = None,
) -> float:
    """Σ_d C_coh,U of the unravelled channels under the best energy split"""
    _, _, channels = _subchannels(params, eta)
    universe = SenderSet.universe(budget.s)

    def value(d: int, column: np.ndarray) -> float:
        return coherent_bound(channels[d], EnergyBudget(tuple(column)), universe)

    rate, _ = _optimize_allocation(value, budget, params.N, optimizer or OptimizerSettings(), "coherent")
    return rate


def memory_bottleneck_bound(
    params: CausalMemoryParams,
    eta: Sequence[float],
    budget: EnergyBudget,
    optimizer: Optional[OptimizerSettings] = None,
) -> float:
    """Σ_d C_E(Σ_k η_k N_{S,k,d}, τ_d, N_{B,d}) under the best energy split"""
    eta, unravelled, _ = _subchannels(params, eta)

    def value(d: int, column: np.ndarray) -> float:
        return ea_bgc_capacity(0, float(eta @ column), float(unravelled.tau[d]), float(unravelled.nb[d]))

    rate, _ = _optimize_allocation(value, budget, params.N, optimizer or OptimizerSettings(), "bottleneck")
    return rate
