"""Sample covariance, its eigen-spectrum and the noise-variance estimate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from ._fallback import NEG_TOL
from .array_signal import SnapshotMatrix
from .errors import DomainError, InvariantViolation, NumericError

__all__ = [
    "EigenSpectrum",
    "HermitianMatrix",
    "eigen_spectrum",
    "noise_variance_estimate",
    "sample_covariance",
    "spectra_from_snapshots",
]

HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """N x N Hermitian matrix; ``l`` records the snapshot count when it is a sample covariance."""

    entries: np.ndarray
    l: Optional[int] = None  # noqa: E741

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        if a.size and np.max(np.abs(a - a.conj().T)) > HERMITIAN_ATOL:
            raise InvariantViolation("matrix is not conjugate-symmetric within 1e-12")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class EigenSpectrum:
    """Descending, nonnegative eigenvalues plus the trace they came from."""

    values: np.ndarray
    trace: float
    n: int
    l: Optional[int] = None  # noqa: E741

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("spectrum must be a nonempty 1-D array")
        if np.any(np.diff(v) > 0):
            raise DomainError("eigenvalues must be sorted in descending order")
        if v[-1] < 0:
            raise DomainError("eigenvalues must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "trace", float(self.trace))

    @classmethod
    def from_values(cls, values, l=None) -> "EigenSpectrum":  # noqa: E741
        """Build a spectrum from eigenvalues in any order (trace = their sum)."""
        v = np.sort(np.asarray(values, dtype=np.float64))[::-1]
        return cls(v, float(v.sum()), v.size, l)

    @property
    def lambda_max(self) -> float:
        return float(self.values[0])

    @property
    def lambda_min(self) -> float:
        return float(self.values[-1])


def sample_covariance(y: SnapshotMatrix) -> HermitianMatrix:
    """``(1/L) sum_k y[k] y[k]^H``, symmetrised so the result is exactly Hermitian."""
    if y.l < 1:
        raise DomainError("sample covariance needs at least one snapshot")
    d = y.data
    r = (d @ d.conj().T) / y.l
    r = 0.5 * (r + r.conj().T)
    return HermitianMatrix(r, l=y.l)


def eigen_spectrum(r: HermitianMatrix) -> EigenSpectrum:
    """Eigenvalues of ``r`` in descending order.

    Round-off negatives down to ``-1e-10 * trace`` are clamped to zero; anything
    more negative raises :class:`InvariantViolation`.
    """
    trace = float(np.trace(r.entries).real)
    try:
        w = np.linalg.eigvalsh(r.entries)[::-1].copy()
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None
    if w[-1] < 0:
        if w[-1] < -NEG_TOL * abs(trace):
            raise InvariantViolation(
                f"eigenvalue {w[-1]:.3e} below -{NEG_TOL:g} * trace; matrix is not PSD"
            )
        w[w < 0] = 0.0
    if r.l is not None and r.l < r.n:
        # rank <= L: the trailing eigenvalues are zero up to round-off
        w[r.l:] = 0.0
    return EigenSpectrum(w, trace, r.n, r.l)


def noise_variance_estimate(spec: EigenSpectrum) -> float:
    """Mean of all eigenvalues except the largest: ``(trace - lmax) / (N - 1)``."""
    if spec.n < 2:
        raise DomainError("noise variance estimate needs N >= 2")
    return float(spec.values[1:].sum() / (spec.n - 1))


def spectra_from_snapshots(y, backend=None):
    """Batched spectra for a (T, N, L) stack of snapshots.

    Returns ``(values, trace)`` arrays of shape (T, N) and (T,).  For N > L the
    trailing N - L eigenvalues are exact zeros.
    """
    be = backend or _backend.BACKEND
    return be.batch_spectra(y)
