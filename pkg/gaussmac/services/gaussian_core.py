"""
Covariance-matrix calculus for zero-mean bosonic Gaussian states.

Conventions used everywhere in gaussmac:
  - quadrature ordering (x_1, p_1, ..., x_m, p_m)
  - vacuum covariance matrix = identity, thermal(N) = (2N+1) I
  - entropies in bits
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ShapeError, UnphysicalError

logger = logging.getLogger(__name__)

SIGNAL_PREFIX = "A"
IDLER_PREFIX = "A'"
OUTPUT_LABEL = "B"


# ============= Domain Types =============

@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric 2m x 2m matrix of quadrature second moments"""

    matrix: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.matrix, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2 != 0:
            raise ShapeError(f"Covariance matrix must be 2m x 2m, got shape {V.shape}")
        scale = max(1.0, float(np.max(np.abs(V)))) if V.size else 1.0
        asym = float(np.max(np.abs(V - V.T))) if V.size else 0.0
        if asym > settings.SYMMETRY_TOL * scale:
            raise UnphysicalError(f"Covariance matrix not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "matrix", (V + V.T) / 2)

    @property
    def m(self) -> int:
        """Number of modes"""
        return self.matrix.shape[0] // 2

    def __array__(self, dtype=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class SymplecticTransform:
    """2n x 2m real matrix acting on quadratures; a sub-block of a symplectic when modes are discarded"""

    matrix: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.matrix, dtype=float)
        if T.ndim != 2 or T.shape[0] % 2 or T.shape[1] % 2:
            raise ShapeError(f"Transform must be 2n x 2m, got shape {T.shape}")
        object.__setattr__(self, "matrix", T)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def is_symplectic(self, tol: float = 1e-10) -> bool:
        """T Ω T^T = Ω for square transforms"""
        if self.rows != self.cols:
            return False
        omega = symplectic_form(self.rows // 2)
        return bool(np.max(np.abs(self.matrix @ omega @ self.matrix.T - omega)) <= tol)

    def compose(self, other: "SymplecticTransform") -> "SymplecticTransform":
        """self after other"""
        if self.cols != other.rows:
            raise ShapeError(f"Cannot compose {self.matrix.shape} after {other.matrix.shape}")
        return SymplecticTransform(self.matrix @ other.matrix)


@dataclass(frozen=True)
class ModeLayout:
    """Ordered mode labels (signal A_k, idler A'_k, output B, environment E) and their positions"""

    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ShapeError(f"Mode labels must be unique: {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def index(self) -> Dict[str, int]:
        return {label: i for i, label in enumerate(self.labels)}

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ShapeError(f"Mode '{label}' not in layout {self.labels}")

    def positions(self, labels: Iterable[str]) -> List[int]:
        return [self.position(label) for label in labels]

    @classmethod
    def standard(cls, s: int) -> "ModeLayout":
        """Channel input layout [A_1, A'_1, ..., A_s, A'_s]"""
        labels: List[str] = []
        for k in range(1, s + 1):
            labels += [signal_label(k), idler_label(k)]
        return cls(tuple(labels))

    @classmethod
    def output(cls, s: int) -> "ModeLayout":
        """Channel output layout [B, A'_1, ..., A'_s]"""
        return cls((OUTPUT_LABEL,) + tuple(idler_label(k) for k in range(1, s + 1)))


def signal_label(k: int) -> str:
    return f"{SIGNAL_PREFIX}{k}"


def idler_label(k: int) -> str:
    return f"{IDLER_PREFIX}{k}"


# ============= Entropy =============

def g_function(x: float) -> float:
    """
    Entropy in bits of a thermal state with mean photon number x:
    g(x) = (x+1) log2(x+1) - x log2(x)
    """
    x = float(x)
    if x < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(f"g(x) called with negative photon number {x:.3e}")
    if x < settings.G_ZERO_CUTOFF:
        return 0.0
    return float((x + 1) * np.log2(x + 1) - x * np.log2(x))


def symplectic_form(m: int) -> np.ndarray:
    """Ω_sym = ⊕_m [[0, 1], [-1, 0]]"""
    return np.kron(np.eye(m), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(V: CovarianceMatrix) -> np.ndarray:
    """
    Symplectic spectrum of V, one value per mode, sorted ascending.

    Computed from the Hermitian matrix V^{1/2} (iΩ) V^{1/2}, whose eigenvalues are ±ν_i.
    Values within PHYSICALITY_TOL below 1 are clamped to 1; anything below
    1 - UNPHYSICAL_TOL flags an unphysical state.
    """
    M = np.asarray(V.matrix)
    m = M.shape[0] // 2
    if m == 0:
        return np.zeros(0)

    evals, evecs = np.linalg.eigh(M)
    if evals[0] <= 0:
        raise UnphysicalError(f"Covariance matrix not positive definite (min eigenvalue {evals[0]:.3e})")
    sqrt_v = (evecs * np.sqrt(evals)) @ evecs.T
    herm = sqrt_v @ (1j * symplectic_form(m)) @ sqrt_v
    nu = np.linalg.eigvalsh((herm + herm.conj().T) / 2)[m:]

    if nu[0] < 1 - settings.UNPHYSICAL_TOL:
        raise UnphysicalError(f"Symplectic eigenvalue {nu[0]:.9f} < 1: state violates uncertainty")
    if nu[0] < 1 - settings.PHYSICALITY_TOL:
        logger.debug(f"Clamping symplectic eigenvalue {nu[0]:.12f} up to 1")
    return np.maximum(nu, 1.0)


def von_neumann_entropy(V: CovarianceMatrix) -> float:
    """S(V) = Σ_i g((ν_i - 1) / 2) in bits"""
    return float(sum(g_function((nu - 1) / 2) for nu in symplectic_eigenvalues(V)))


# ============= State Construction =============

def _check_photon_number(N: float, name: str = "N") -> float:
    N = float(N)
    if N < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(f"{name} must be non-negative, got {N}")
    return max(N, 0.0)


def vacuum_cm(m: int = 1) -> CovarianceMatrix:
    return CovarianceMatrix(np.eye(2 * m))


def thermal_cm(N: float, m: int = 1) -> CovarianceMatrix:
    """(2N+1) I over m modes"""
    N = _check_photon_number(N)
    return CovarianceMatrix((2 * N + 1) * np.eye(2 * m))


def tmsv_cm(N_S: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with N_S photons per mode, ordered (signal, idler)"""
    N_S = _check_photon_number(N_S, "N_S")
    a = (2 * N_S + 1) * np.eye(2)
    c = 2 * np.sqrt(N_S * (N_S + 1)) * np.diag([1.0, -1.0])
    return CovarianceMatrix(np.block([[a, c], [c, a]]))


def direct_sum(*cms: CovarianceMatrix) -> CovarianceMatrix:
    """Block-diagonal covariance matrix of a product state"""
    blocks = [np.asarray(cm.matrix) for cm in cms if cm.m > 0]
    if not blocks:
        return CovarianceMatrix(np.zeros((0, 0)))
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    offset = 0
    for b in blocks:
        n = b.shape[0]
        out[offset:offset + n, offset:offset + n] = b
        offset += n
    return CovarianceMatrix(out)


def purify_single_mode(V: CovarianceMatrix) -> CovarianceMatrix:
    """
    Two-mode pure state whose first mode has covariance V.

    V = ν S S^T with S = (V/ν)^{1/2} symplectic; the purification is
    (S ⊕ I) TMSV_ν (S ⊕ I)^T.
    """
    if V.m != 1:
        raise ShapeError(f"purify_single_mode expects one mode, got {V.m}")
    M = np.asarray(V.matrix)
    det = float(np.linalg.det(M))
    if det <= 0:
        raise UnphysicalError("Single-mode covariance matrix has non-positive determinant")
    nu = np.sqrt(det)
    if nu < 1 - settings.UNPHYSICAL_TOL:
        raise UnphysicalError(f"Single-mode state with ν = {nu:.9f} < 1")
    nu = max(nu, 1.0)
    evals, evecs = np.linalg.eigh(M / nu)
    S = (evecs * np.sqrt(evals)) @ evecs.T
    z = np.diag([1.0, -1.0])
    c = np.sqrt(max(nu * nu - 1.0, 0.0))
    return CovarianceMatrix(np.block([[M, c * S @ z], [c * z @ S.T, nu * np.eye(2)]]))


# ============= Symplectic Transforms =============

def _rotation(theta: float) -> np.ndarray:
    # Heisenberg action of exp(-iθ a†a): a -> a e^{-iθ}
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def phase_rotation(theta: float) -> SymplecticTransform:
    return SymplecticTransform(_rotation(theta))


def squeezer(r: float, theta: float) -> SymplecticTransform:
    """
    Ŝ(r, θ) = R̂(θ) Ŝ(r) with Ŝ(r)† a Ŝ(r) = a cosh r - a† sinh r,
    i.e. x -> e^{-r} x, p -> e^{r} p followed by the phase rotation.
    """
    return SymplecticTransform(_rotation(theta) @ np.diag([np.exp(-r), np.exp(r)]))


def beamsplitter_array(weights: Sequence[float]) -> SymplecticTransform:
    """
    Passive s-port interferometer whose first output is Σ_k weights_k a_k.

    The orthogonal mode matrix is the Householder reflection exchanging e_1 and
    the (unit-norm, real, non-negative) weight vector.
    """
    u = np.asarray(weights, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ShapeError("beamsplitter_array needs a non-empty weight vector")
    if np.any(u < 0):
        raise ShapeError("beamsplitter weights must be non-negative")
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-12:
        raise ShapeError(f"beamsplitter weights must have unit norm, got {norm:.15f}")

    v = u.copy()
    v[0] -= 1.0
    vv = float(v @ v)
    if vv < 1e-30:
        mixer = np.eye(u.size)
    else:
        mixer = np.eye(u.size) - 2.0 * np.outer(v, v) / vv
    return SymplecticTransform(np.kron(mixer, np.eye(2)))


def local_transform(block: np.ndarray, modes: Sequence[int], m: int) -> SymplecticTransform:
    """Embed a transform on the given modes into an m-mode identity"""
    block = np.asarray(block, dtype=float)
    if block.shape != (2 * len(modes), 2 * len(modes)):
        raise ShapeError(f"Block shape {block.shape} does not match {len(modes)} modes")
    idx = quadrature_indices(modes)
    full = np.eye(2 * m)
    full[np.ix_(idx, idx)] = block
    return SymplecticTransform(full)


def apply_transform(
    T: SymplecticTransform,
    V: CovarianceMatrix,
    appended_env: Optional[CovarianceMatrix] = None,
) -> CovarianceMatrix:
    """T (V ⊕ V_env) T^T"""
    full = V if appended_env is None else direct_sum(V, appended_env)
    if T.cols != full.matrix.shape[0]:
        raise ShapeError(
            f"Transform expects {T.cols // 2} input modes, got {full.m}"
        )
    return CovarianceMatrix(T.matrix @ full.matrix @ T.matrix.T)


# ============= Subsystems =============

def quadrature_indices(mode_indices: Sequence[int]) -> List[int]:
    idx: List[int] = []
    for i in mode_indices:
        idx += [2 * i, 2 * i + 1]
    return idx


def subsystem_cm(V: CovarianceMatrix, mode_indices: Sequence[int]) -> CovarianceMatrix:
    """Principal sub-matrix of the listed modes, in the listed order"""
    for i in mode_indices:
        if not 0 <= i < V.m:
            raise ShapeError(f"Mode index {i} out of range for {V.m} modes")
    idx = quadrature_indices(mode_indices)
    return CovarianceMatrix(V.matrix[np.ix_(idx, idx)])


def mean_photon(V: CovarianceMatrix, mode_index: int) -> float:
    """<a†a> = (V_xx + V_pp)/4 - 1/2 for zero-mean states"""
    if not 0 <= mode_index < V.m:
        raise ShapeError(f"Mode index {mode_index} out of range for {V.m} modes")
    i = 2 * mode_index
    return float((V.matrix[i, i] + V.matrix[i + 1, i + 1]) / 4 - 0.5)


def entropy_of(V: CovarianceMatrix, mode_indices: Sequence[int]) -> float:
    """Entropy of a subsystem; the empty subsystem has zero entropy"""
    if len(mode_indices) == 0:
        return 0.0
    return von_neumann_entropy(subsystem_cm(V, mode_indices))
