"""Test statistics, CFAR thresholds and presence decisions.

Four statistics are computed from the eigen-spectrum of the sample covariance:

========== ==================== =========================================
kind       label                statistic
========== ==================== =========================================
GLRT       GLRT                 arithmetic mean / geometric mean
R_MAX_MIN  R-MaxEV-MinEV        lambda_max / lambda_min
R_MAX_NV   R-MaxEV-NV           lambda_max / mean(lambda_2 .. lambda_N)
M_MAX_MIN  M-MaxEV-MinEV        (lambda_max + lambda_min) / 2
========== ==================== =========================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import _backend
from .covariance_eig import EigenSpectrum, noise_variance_estimate
from .errors import ConfigurationError, DegenerateSpectrumError, DomainError, UnsupportedError
from .rmt_dist import P_MAX, P_MIN, mp_edges, tw_constants, tw_quantile

__all__ = [
    "CalibrationTable",
    "Decision",
    "DetectorKind",
    "ThresholdMode",
    "ThresholdPolicy",
    "analytic_threshold",
    "batch_statistics",
    "decide",
    "glrt_statistic",
    "mean_max_min",
    "ratio_max_min",
    "ratio_max_nv",
    "statistic",
]

_EPS = np.finfo(np.float64).eps


class DetectorKind(str, enum.Enum):
    GLRT = "glrt"
    R_MAX_MIN = "r-max-min"
    R_MAX_NV = "r-max-nv"
    M_MAX_MIN = "m-max-min"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def column(self) -> int:
        """Column of this statistic in :func:`batch_statistics` output."""
        return _ORDER.index(self)

    @property
    def needs_full_rank(self) -> bool:
        """True when the statistic divides by (or takes the log of) lambda_min."""
        return self in (DetectorKind.GLRT, DetectorKind.R_MAX_MIN)


_ORDER = list(DetectorKind)
_LABELS = {
    DetectorKind.GLRT: "GLRT",
    DetectorKind.R_MAX_MIN: "R-MaxEV-MinEV",
    DetectorKind.R_MAX_NV: "R-MaxEV-NV",
    DetectorKind.M_MAX_MIN: "M-MaxEV-MinEV",
}


class ThresholdMode(str, enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class ThresholdPolicy:
    """How thresholds are obtained.

    ``tw_order`` selects the Tracy-Widom law and matching centering constants
    (2 is the complex-data law).  ``as_written`` switches the R-MaxEV-MinEV
    analytic threshold to the literal ``lambda_max / (q * mu + nu)`` form.
    """

    mode: ThresholdMode = ThresholdMode.ANALYTIC
    tw_order: int = 2
    as_written: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", ThresholdMode(self.mode))
        if self.tw_order not in (1, 2):
            raise DomainError(f"tw_order must be 1 or 2, got {self.tw_order!r}")


@dataclass(frozen=True)
class Decision:
    kind: DetectorKind
    statistic: float
    threshold: float
    emitter_present: bool
    target_pfa: float


@dataclass
class CalibrationTable:
    """Empirical H0 thresholds for one (N, L) operating point, keyed by (kind, pfa)."""

    n: int
    l: int  # noqa: E741
    thresholds: Dict[Tuple[DetectorKind, float], float] = field(default_factory=dict)

    def add(self, kind: DetectorKind, pfa: float, threshold: float) -> None:
        self.thresholds[(DetectorKind(kind), float(pfa))] = float(threshold)

    def lookup(self, kind: DetectorKind, pfa: float) -> float:
        for (k, p), thr in self.thresholds.items():
            if k == kind and math.isclose(p, pfa, rel_tol=1e-12, abs_tol=1e-15):
                return thr
        raise ConfigurationError(f"no calibrated threshold for {kind.value} at pfa={pfa}")


def _numerically_zero(x: float, spec: EigenSpectrum) -> bool:
    return x <= spec.n * _EPS * spec.lambda_max


def glrt_statistic(spec: EigenSpectrum) -> float:
    """Sphericity ratio: arithmetic over geometric mean of the eigenvalues (log domain)."""
    if _numerically_zero(spec.lambda_min, spec):
        raise DegenerateSpectrumError("GLRT undefined: zero eigenvalue (needs L >= N)")
    v = spec.values
    return float(np.exp(np.log(v.mean()) - np.log(v).mean()))


def ratio_max_min(spec: EigenSpectrum) -> float:
    if _numerically_zero(spec.lambda_min, spec):
        raise DegenerateSpectrumError("lambda_max / lambda_min undefined: lambda_min is zero")
    return spec.lambda_max / spec.lambda_min


def ratio_max_nv(spec: EigenSpectrum) -> float:
    noise = noise_variance_estimate(spec)
    if _numerically_zero(noise, spec):
        raise DegenerateSpectrumError("noise variance estimate is zero")
    return spec.lambda_max / noise


def mean_max_min(spec: EigenSpectrum) -> float:
    return 0.5 * (spec.lambda_max + spec.lambda_min)


_STATISTICS = {
    DetectorKind.GLRT: glrt_statistic,
    DetectorKind.R_MAX_MIN: ratio_max_min,
    DetectorKind.R_MAX_NV: ratio_max_nv,
    DetectorKind.M_MAX_MIN: mean_max_min,
}


def statistic(kind: DetectorKind, spec: EigenSpectrum) -> float:
    return _STATISTICS[DetectorKind(kind)](spec)


def batch_statistics(values, backend=None) -> np.ndarray:
    """All four statistics for a (T, N) array of descending spectra.

    Columns follow :attr:`DetectorKind.column`; degenerate entries are NaN.
    """
    be = backend or _backend.BACKEND
    return be.batch_statistics(values)


def analytic_threshold(kind, pfa, n, l, spec: EigenSpectrum, policy: ThresholdPolicy) -> float:  # noqa: E741
    """Tracy-Widom CFAR threshold for ``kind`` at false-alarm probability ``pfa``.

    With ``q = F^{-1}(1 - pfa)`` and ``(mu, nu)`` from :func:`tw_constants`:

    * R-MaxEV-NV: ``(q nu + mu) / sigma2_hat``
    * M-MaxEV-MinEV: ``(q nu + mu + lambda_max) / 2``
    * R-MaxEV-MinEV: ``lambda_max / (q mu + nu)`` when ``policy.as_written``,
      otherwise ``(q nu + mu) / (a sigma2_hat)`` with ``a`` the lower
      Marchenko-Pastur edge.

    The thresholds of M-MaxEV-MinEV and the literal R-MaxEV-MinEV form depend on
    ``lambda_max`` of the spectrum under test.
    """
    kind = DetectorKind(kind)
    if kind is DetectorKind.GLRT:
        raise UnsupportedError("GLRT has no analytic threshold; use empirical calibration")
    if not P_MIN < pfa < P_MAX:
        raise DomainError(f"pfa={pfa!r} outside Tracy-Widom table coverage ({P_MIN}, {P_MAX})")
    q = tw_quantile(1.0 - pfa, policy.tw_order)
    c = tw_constants(n, l, policy.tw_order)
    if kind is DetectorKind.M_MAX_MIN:
        return 0.5 * (q * c.nu + c.mu + spec.lambda_max)
    if kind is DetectorKind.R_MAX_MIN and policy.as_written:
        return spec.lambda_max / (q * c.mu + c.nu)
    noise = noise_variance_estimate(spec)
    if _numerically_zero(noise, spec):
        raise DegenerateSpectrumError("noise variance estimate is zero")
    if kind is DetectorKind.R_MAX_NV:
        return (q * c.nu + c.mu) / noise
    lower = mp_edges(n, l).a
    if lower == 0.0:
        raise DegenerateSpectrumError("lower Marchenko-Pastur edge is zero (N == L)")
    return (q * c.nu + c.mu) / (lower * noise)


def decide(
    kind,
    spec: EigenSpectrum,
    pfa: float,
    policy: ThresholdPolicy = ThresholdPolicy(),
    calibration: Optional[CalibrationTable] = None,
    threshold: Optional[float] = None,
) -> Decision:
    """Compare the statistic with its threshold; ``statistic > threshold`` means present.

    The threshold comes from ``threshold`` when given, else from ``calibration``
    under an empirical policy, else from :func:`analytic_threshold`.
    """
    kind = DetectorKind(kind)
    value = statistic(kind, spec)
    if threshold is None:
        if policy.mode is ThresholdMode.EMPIRICAL:
            if calibration is None:
                raise ConfigurationError("empirical policy needs a CalibrationTable")
            if spec.l is not None and (calibration.n, calibration.l) != (spec.n, spec.l):
                raise ConfigurationError(
                    f"calibration is for N={calibration.n}, L={calibration.l}; "
                    f"spectrum has N={spec.n}, L={spec.l}"
                )
            threshold = calibration.lookup(kind, pfa)
        else:
            if spec.l is None:
                raise ConfigurationError("analytic thresholds need the snapshot count L")
            threshold = analytic_threshold(kind, pfa, spec.n, spec.l, spec, policy)
    threshold = float(threshold)
    return Decision(kind, value, threshold, bool(value > threshold), float(pfa))
