"""
Truncated Fock-space reference computations for small single-sender cases.

States are qutip objects. The thermal environment is expanded as a Fock mixture
Σ_k p_k |k><k| so the beamsplitter only ever acts on pure vectors; the output
density matrix is accumulated term by term instead of being formed on the joint
system+environment.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple
import logging

import numpy as np
import qutip as qt
from scipy.linalg import expm

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ConfigError, ShapeError, UnphysicalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockState:
    """Ket or density operator over a product of truncated modes"""

    qobj: qt.Qobj
    tail_mass: float = 0.0  # probability lost to truncation

    @classmethod
    def from_array(
        cls,
        dims: Sequence[int],
        data: np.ndarray,
        is_density: bool = False,
        tail_mass: float = 0.0,
    ) -> "FockState":
        dims = [int(d) for d in dims]
        D = int(np.prod(dims))
        data = np.asarray(data, dtype=complex)
        expected = (D, D) if is_density else (D, 1)
        if data.size != int(np.prod(expected)):
            raise ShapeError(f"Fock data of size {data.size} does not match dims {dims}")
        qobj_dims = [dims, dims] if is_density else [dims, [1] * len(dims)]
        return cls(qt.Qobj(data.reshape(expected), dims=qobj_dims), tail_mass)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(int(d) for d in self.qobj.dims[0])

    @property
    def is_density(self) -> bool:
        return bool(self.qobj.isoper)

    @property
    def trace(self) -> float:
        if self.is_density:
            return float(np.real(self.qobj.tr()))
        return float(self.qobj.norm()) ** 2


# ============= States =============

def fock_tmsv(N_S: float, dim: int) -> FockState:
    """Σ_n c_n |n>|n> with c_n = (N+1)^{-1/2} (N/(N+1))^{n/2}, renormalised after truncation"""
    if N_S < 0:
        raise UnphysicalError(f"N_S must be non-negative, got {N_S}")
    if dim < 1:
        raise ShapeError("Truncation dimension must be positive")
    ratio = N_S / (N_S + 1)
    coeffs = np.sqrt(1 / (N_S + 1)) * ratio ** (np.arange(dim) / 2)
    psi = coeffs[0] * qt.tensor(qt.basis(dim, 0), qt.basis(dim, 0))
    for n in range(1, dim):
        psi += coeffs[n] * qt.tensor(qt.basis(dim, n), qt.basis(dim, n))
    return FockState(psi.unit(), tail_mass=float(ratio ** dim))


def thermal_populations(N: float, dim: int) -> Tuple[np.ndarray, float]:
    """p_k = N^k / (N+1)^{k+1} for k < dim, and the dropped tail"""
    k = np.arange(dim)
    p = (N ** k) / (N + 1) ** (k + 1)
    return p, float((N / (N + 1)) ** dim) if N > 0 else 0.0


# ============= Channel =============

def beamsplitter_unitary(tau: float, dim_a: int, dim_b: int) -> qt.Qobj:
    """
    exp(θ(a†b - ab†)) with cos²θ = τ, on the truncated basis |n_a, n_b>.

    Built exactly in each fixed-total-photon block, then restricted, so amplitude
    leaving the truncation shows up as lost trace.
    """
    theta = np.arccos(np.sqrt(np.clip(tau, 0.0, 1.0)))
    D = dim_a * dim_b
    U = np.zeros((D, D))
    for n in range(dim_a + dim_b - 1):
        # block basis |k, n-k>, k = 0..n
        G = np.zeros((n + 1, n + 1))
        for k in range(n):
            amp = np.sqrt((k + 1) * (n - k))
            G[k + 1, k] = amp
            G[k, k + 1] = -amp
        block = expm(theta * G)
        kept = [k for k in range(n + 1) if k < dim_a and n - k < dim_b]
        flat = [k * dim_b + (n - k) for k in kept]
        U[np.ix_(flat, flat)] = block[np.ix_(kept, kept)]
    return qt.Qobj(U, dims=[[dim_a, dim_b], [dim_a, dim_b]])


def _pure_components(state: FockState) -> List[Tuple[float, qt.Qobj]]:
    if not state.is_density:
        return [(1.0, state.qobj)]
    weights, kets = state.qobj.eigenstates()
    return [(float(w), ket) for w, ket in zip(weights, kets) if w > 1e-14]


def fock_thermal_loss_apply(
    state: FockState,
    signal_mode: int,
    tau: float,
    N_env: float,
    dim_env: int,
) -> FockState:
    """Beamsplitter of transmissivity τ with a thermal(N_env) mode on the signal, environment traced out"""
    dims = state.dims
    if not 0 <= signal_mode < len(dims):
        raise ShapeError(f"Mode {signal_mode} not in state with {len(dims)} modes")
    if not 0.0 <= tau <= 1.0:
        raise UnphysicalError(f"Transmissivity must lie in [0, 1], got {tau}")
    p_env, env_tail = thermal_populations(N_env, dim_env)
    if env_tail > settings.FOCK_TAIL_THRESHOLD:
        raise ConfigError(
            f"Environment truncation {dim_env} too small for N_env={N_env:.4g} (tail {env_tail:.2e})"
        )

    d_s = dims[signal_mode]
    rest = int(np.prod(dims)) // d_s
    U4 = beamsplitter_unitary(tau, d_s, dim_env).full().reshape(d_s, dim_env, d_s, dim_env)  # (s', e', s, e)

    # signal mode last while propagating
    perm = [i for i in range(len(dims)) if i != signal_mode] + [signal_mode]
    rho = np.zeros((rest * d_s, rest * d_s), dtype=complex)
    for weight, ket in _pure_components(state):
        psi = ket.permute(perm).full().reshape(rest, d_s)
        for k, pk in enumerate(p_env):
            if pk < 1e-300:
                continue
            U_k = U4[:, :, :, k].reshape(d_s * dim_env, d_s)
            M = (psi @ U_k.T).reshape(rest * d_s, dim_env)
            rho += weight * pk * (M @ M.conj().T)

    permuted_dims = [dims[i] for i in perm]
    out = qt.Qobj(rho, dims=[permuted_dims, permuted_dims]).permute([int(i) for i in np.argsort(perm)])

    tail = max(1.0 - float(np.real(out.tr())), 0.0)
    if tail > settings.FOCK_TAIL_THRESHOLD:
        raise ConfigError(
            f"Output truncation {list(dims)} dropped {tail:.2e} of the state; increase the dimensions"
        )
    return FockState(out, tail_mass=tail)


# ============= Entropies =============

def reduced_density(state: FockState, keep: Sequence[int]) -> qt.Qobj:
    """Normalised reduced density operator on the listed modes (in ascending mode order)"""
    keep = sorted(keep)
    n = len(state.dims)
    if not keep or any(not 0 <= i < n for i in keep):
        raise ShapeError(f"Modes {keep} out of range for {n} modes")
    rho = state.qobj.ptrace(keep)
    return rho / float(np.real(rho.tr()))


def density_entropy(rho: qt.Qobj) -> float:
    """
    -tr ρ log2 ρ.

    Eigenvalues below 1e-15 are dropped; round-off leaves slightly negative ones
    on rank-deficient states.
    """
    evals = np.real(rho.eigenenergies())
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log2(evals)))


def fock_mutual_information(state: FockState, partition: Tuple[Sequence[int], Sequence[int]]) -> float:
    """I(X;Y) = S(X) + S(Y) - S(XY) for disjoint mode groups X, Y"""
    X, Y = list(partition[0]), list(partition[1])
    if set(X) & set(Y):
        raise ShapeError("Partition groups must be disjoint")
    return (
        density_entropy(reduced_density(state, X))
        + density_entropy(reduced_density(state, Y))
        - density_entropy(reduced_density(state, X + Y))
    )


def fock_mean_photon(state: FockState, mode: int) -> float:
    rho = reduced_density(state, [mode])
    return float(np.real(qt.expect(qt.num(state.dims[mode]), rho)))


def fock_thermal_loss_rate(
    tau: float,
    N_B: float,
    N_S: float,
    dims: Tuple[int, int, int] = (25, 25, 30),
) -> float:
    """
    I(A';B) for a TMSV through the thermal-loss channel (τ, N_B).

    dims = (signal, idler, environment) truncations; the TMSV uses the first.
    """
    if tau >= 1.0:
        if N_B > 0:
            raise UnphysicalError("A noiseless-transmission channel cannot have a dark count")
        N_env = 0.0
    else:
        N_env = N_B / (1 - tau)
    d_sig, d_idl, d_env = dims
    if d_idl != d_sig:
        raise ShapeError(f"TMSV truncation needs equal signal and idler dimensions, got {dims[:2]}")
    tmsv = fock_tmsv(N_S, d_sig)
    if tmsv.tail_mass > settings.FOCK_TAIL_THRESHOLD:
        raise ConfigError(f"Signal truncation {d_sig} too small for N_S={N_S:.4g} (tail {tmsv.tail_mass:.2e})")
    out = fock_thermal_loss_apply(tmsv, 0, tau, N_env, d_env)
    value = fock_mutual_information(out, ([1], [0]))
    logger.debug(f"Fock oracle tau={tau}, N_B={N_B}, N_S={N_S}: I={value:.9f} bits, tail={out.tail_mass:.2e}")
    return value
