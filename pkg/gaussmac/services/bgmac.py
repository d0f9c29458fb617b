"""
Phase-insensitive bosonic Gaussian multiple-access channels.

Output mode:  a_B = Σ_k w_k [(1-δ_k) a_{A_k} + δ_k a_{A_k}†] + u1 e_1 + u2 e_2†
with two vacuum environment modes carrying the dark count N_B = u2² + Σ δ_k |w_k|².
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from gaussmac.core.config import settings
from gaussmac.core.exceptions import ChannelValidationError, ConfigError, ShapeError, UnphysicalError
from gaussmac.schemas.channel_schemas import BgcConfig, ChannelConfig
from gaussmac.services.gaussian_core import (
    OUTPUT_LABEL,
    CovarianceMatrix,
    ModeLayout,
    SymplecticTransform,
    apply_transform,
    signal_label,
    vacuum_cm,
)

logger = logging.getLogger(__name__)

Z = np.diag([1.0, -1.0])


class BgcClass(str, Enum):
    THERMAL_LOSS = "thermal-loss"
    AWGN = "awgn"
    AMPLIFIER = "amplifier"
    CONJUGATE_AMPLIFIER = "conjugate-amplifier"

    @property
    def delta(self) -> int:
        return 1 if self is BgcClass.CONJUGATE_AMPLIFIER else 0


# ============= Validation =============

@dataclass(frozen=True)
class Violation:
    condition: str
    required: float
    actual: float

    @property
    def shortfall(self) -> float:
        return self.required - self.actual


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(
            f"{v.condition}: needs N_B >= {v.required:.6g}, got {v.actual:.6g} (short by {v.shortfall:.3g})"
            for v in self.violations
        )


def _bona_fide_report(w2: Sequence[float], delta: Sequence[int], N_B: float) -> ValidationReport:
    w2 = np.asarray(w2, dtype=float)
    d = np.asarray(delta, dtype=float)
    covariant_floor = -1.0 + float(np.sum(w2 * (1 - d)))
    contravariant_floor = float(np.sum(w2 * d))
    violations = []
    if N_B < covariant_floor - settings.PHYSICALITY_TOL:
        violations.append(Violation("u1^2 >= 0", covariant_floor, N_B))
    if N_B < contravariant_floor - settings.PHYSICALITY_TOL:
        violations.append(Violation("u2^2 >= 0", contravariant_floor, N_B))
    return ValidationReport(tuple(violations))


# ============= Channel Records =============

@dataclass(frozen=True)
class PhaseInsensitiveBgmac:
    """
    s-sender phase-insensitive BGMAC.

    With strict=True (default) construction fails on channels violating the
    bona fide condition. strict=False keeps the record so closed-form bounds can
    still be evaluated at boundary settings; its covariance-matrix action then
    fails with UnphysicalError.
    """

    w: Tuple[complex, ...]
    delta: Tuple[int, ...]
    N_B: float
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        w = tuple(complex(x) for x in self.w)
        delta = tuple(int(d) for d in self.delta)
        if not w:
            raise ShapeError("A BGMAC needs at least one sender")
        if len(delta) != len(w):
            raise ShapeError(f"Got {len(w)} weights but {len(delta)} conjugation flags")
        if any(d not in (0, 1) for d in delta):
            raise ShapeError(f"Conjugation flags must be 0 or 1, got {delta}")
        if len(w) > settings.MAX_SENDERS:
            raise ShapeError(f"At most {settings.MAX_SENDERS} senders supported, got {len(w)}")
        if self.N_B < 0:
            raise UnphysicalError(f"Dark count N_B must be non-negative, got {self.N_B}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "N_B", float(self.N_B))

        if self.strict:
            report = validate(self)
            if not report.ok:
                raise ChannelValidationError(
                    f"Channel is not bona fide: {report.describe()}", list(report.violations)
                )

    @property
    def s(self) -> int:
        return len(self.w)

    @property
    def w2(self) -> np.ndarray:
        return np.abs(np.asarray(self.w)) ** 2

    @property
    def total_gain(self) -> float:
        return float(np.sum(self.w2))

    @property
    def is_global_covariant(self) -> bool:
        return all(d == 0 for d in self.delta)

    @property
    def is_global_contravariant(self) -> bool:
        return all(d == 1 for d in self.delta)


@dataclass(frozen=True)
class PointToPointBgc:
    """Single-mode phase-insensitive channel (δ, |w|², N_B)"""

    delta: int
    w2: float
    N_B: float
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.delta not in (0, 1):
            raise ShapeError(f"delta must be 0 or 1, got {self.delta}")
        if self.w2 < 0 or self.N_B < 0:
            raise UnphysicalError(f"|w|^2 and N_B must be non-negative, got ({self.w2}, {self.N_B})")
        if self.strict:
            report = _bona_fide_report([self.w2], [self.delta], self.N_B)
            if not report.ok:
                raise ChannelValidationError(
                    f"Point-to-point channel is not physical: {report.describe()}",
                    list(report.violations),
                )

    @classmethod
    def of_class(cls, bgc_class: BgcClass, w2: float, N_B: float, strict: bool = True) -> "PointToPointBgc":
        """Build a channel and check that |w|² matches the named class"""
        bgc = cls(bgc_class.delta, w2, N_B, strict=strict)
        if classify(bgc) is not bgc_class:
            raise ConfigError(f"|w|^2 = {w2} is not a {bgc_class.value} channel")
        return bgc

    @property
    def display_gain(self) -> float:
        """Gain as quoted for amplifiers: |w|²+1 for the conjugate amplifier"""
        return self.w2 + 1 if self.delta == 1 else self.w2

    def as_bgmac(self) -> PhaseInsensitiveBgmac:
        return PhaseInsensitiveBgmac((np.sqrt(self.w2),), (self.delta,), self.N_B, strict=self.strict)


# ============= Operations =============

def validate(channel: PhaseInsensitiveBgmac) -> ValidationReport:
    """Check N_B >= max{-1 + Σ|w_k|²(1-δ_k), Σ|w_k|²δ_k}"""
    return _bona_fide_report(channel.w2, channel.delta, channel.N_B)


def noise_params(channel: PhaseInsensitiveBgmac) -> Tuple[float, float]:
    """Environment amplitudes (u1, u2) of the two-mode noise dilation"""
    w2 = channel.w2
    d = np.asarray(channel.delta, dtype=float)
    u2_sq = channel.N_B - float(np.sum(d * w2))
    u1_sq = 1.0 + u2_sq - float(np.sum((1 - 2 * d) * w2))
    if min(u1_sq, u2_sq) < -settings.PHYSICALITY_TOL:
        raise UnphysicalError(
            f"Channel has no physical dilation (u1^2={u1_sq:.6g}, u2^2={u2_sq:.6g}): {validate(channel).describe()}"
        )
    return float(np.sqrt(max(u1_sq, 0.0))), float(np.sqrt(max(u2_sq, 0.0)))


def weight_block(w: complex, delta: int) -> np.ndarray:
    """2x2 quadrature block of w·a (δ=0) or w·a† (δ=1)"""
    phi = np.angle(w)
    c, s = np.cos(phi), np.sin(phi)
    block = abs(w) * np.array([[c, -s], [s, c]])
    return block @ Z if delta else block


def channel_transform(channel: PhaseInsensitiveBgmac, layout: ModeLayout) -> Tuple[SymplecticTransform, ModeLayout]:
    """
    Transform from (layout modes ⊕ E1 ⊕ E2) to [B, passengers...].

    Passengers are every mode of the layout that is not a channel input,
    copied to the output in their original order.
    """
    u1, u2 = noise_params(channel)
    signal_pos = [layout.position(signal_label(k)) for k in range(1, channel.s + 1)]
    passengers = [i for i in range(layout.m) if i not in set(signal_pos)]

    m_in = layout.m + 2
    T = np.zeros((2 * (1 + len(passengers)), 2 * m_in))
    for k, pos in enumerate(signal_pos):
        T[0:2, 2 * pos:2 * pos + 2] = weight_block(channel.w[k], channel.delta[k])
    T[0:2, 2 * layout.m:2 * layout.m + 2] = u1 * np.eye(2)
    T[0:2, 2 * layout.m + 2:2 * layout.m + 4] = u2 * Z
    for row, pos in enumerate(passengers, start=1):
        T[2 * row:2 * row + 2, 2 * pos:2 * pos + 2] = np.eye(2)

    out_layout = ModeLayout((OUTPUT_LABEL,) + tuple(layout.labels[i] for i in passengers))
    return SymplecticTransform(T), out_layout


def apply_to_cm(
    channel: PhaseInsensitiveBgmac,
    V: CovarianceMatrix,
    layout: Optional[ModeLayout] = None,
) -> CovarianceMatrix:
    """
    Channel output covariance matrix.

    Default input layout is [A_1, A'_1, ..., A_s, A'_s], giving output [B, A'_1, ..., A'_s].
    """
    layout = layout or ModeLayout.standard(channel.s)
    if V.m != layout.m:
        raise ShapeError(f"Input has {V.m} modes but layout {layout.labels} has {layout.m}")
    T, _ = channel_transform(channel, layout)
    return apply_transform(T, V, vacuum_cm(2))


def classify(bgc: PointToPointBgc) -> BgcClass:
    if bgc.delta == 1:
        return BgcClass.CONJUGATE_AMPLIFIER
    if abs(bgc.w2 - 1.0) <= settings.NORMALIZATION_TOL:
        return BgcClass.AWGN
    return BgcClass.THERMAL_LOSS if bgc.w2 < 1 else BgcClass.AMPLIFIER


def check_eta(eta: Sequence[float]) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.ndim != 1 or eta.size == 0:
        raise ShapeError("Interference ratios must be a non-empty list")
    if np.any(eta < 0):
        raise ConfigError(f"Interference ratios must be non-negative, got {eta.tolist()}")
    if abs(float(np.sum(eta)) - 1.0) > settings.NORMALIZATION_TOL:
        raise ConfigError(f"Interference ratios must sum to 1, got {float(np.sum(eta)):.15g}")
    return eta


def interference_bgmac(eta: Sequence[float], bgc: PointToPointBgc) -> PhaseInsensitiveBgmac:
    """Beamsplitter mixing with ratios η followed by the single-mode channel Ψ"""
    eta = check_eta(eta)
    w = tuple(np.sqrt(eta * bgc.w2))
    return PhaseInsensitiveBgmac(w, (bgc.delta,) * eta.size, bgc.N_B, strict=bgc.strict)


def to_interference(channel: PhaseInsensitiveBgmac) -> Tuple[np.ndarray, PointToPointBgc]:
    """
    Interference form (η, Ψ) of a global covariant or global contravariant channel.

    Weight phases are dropped; they are local phase rotations on the senders
    and leave every rate unchanged.
    """
    if not (channel.is_global_covariant or channel.is_global_contravariant):
        raise ConfigError("Only global covariant or global contravariant channels have an interference form")
    total = channel.total_gain
    if total <= 0:
        raise ConfigError("Channel with all-zero weights has no interference form")
    eta = channel.w2 / total
    return eta, PointToPointBgc(channel.delta[0], total, channel.N_B, strict=channel.strict)


def bgc_from_config(config: BgcConfig, strict: bool = True) -> PointToPointBgc:
    return PointToPointBgc.of_class(BgcClass(config.bgc_class), config.w2, config.nb, strict=strict)


def channel_from_config(config: ChannelConfig) -> PhaseInsensitiveBgmac:
    """Build a channel from either JSON form (explicit weights or interference)"""
    if config.interference is not None:
        bgc = bgc_from_config(config.interference.bgc, strict=config.strict)
        channel = interference_bgmac(config.interference.eta, bgc)
    else:
        w: List[complex] = [complex(re, im) for re, im in config.w]
        channel = PhaseInsensitiveBgmac(tuple(w), tuple(config.delta), config.nb, strict=config.strict)
    logger.debug(f"Loaded channel s={channel.s}, |w|^2={channel.w2.tolist()}, delta={channel.delta}, N_B={channel.N_B}")
    return channel
