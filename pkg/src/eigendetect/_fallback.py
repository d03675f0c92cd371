"""Pure-numpy implementation of the per-trial hot path.

Same contract as the compiled ``_kernels`` module; used when the extension is
not built or when ``EIGENDETECT_BACKEND=python`` is set.
"""

import numpy as np

from .errors import InvariantViolation, NumericError

# Eigenvalues below -NEG_TOL * trace are rejected; above it they are clamped to 0.
NEG_TOL = 1e-10
_EPS = np.finfo(np.float64).eps


def batch_spectra(y):
    """Descending sample-covariance eigenvalues for a stack of snapshot matrices.

    ``y`` has shape (T, N, L).  When N > L the L x L Gram matrix is decomposed
    instead and the spectrum is padded with exact zeros.  Returns
    ``(values, trace)`` with shapes (T, N) and (T,).
    """
    y = np.asarray(y, dtype=np.complex128)
    t, n, l = y.shape
    yh = y.conj().transpose(0, 2, 1)
    c = y @ yh if n <= l else yh @ y
    c /= l
    trace = np.einsum("tii->t", c).real.copy()
    try:
        w = np.linalg.eigvalsh(c)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None
    m = w.shape[1]
    values = np.zeros((t, n))
    values[:, :m] = w[:, ::-1]
    neg = values < 0
    if neg.any():
        bad = values < -NEG_TOL * trace[:, None]
        if bad.any():
            k = int(np.argwhere(bad)[0, 0])
            raise InvariantViolation(
                f"trial {k}: eigenvalue {values[bad][0]:.3e} below -{NEG_TOL:g} * trace"
            )
        values[neg] = 0.0
    return values, trace


def batch_statistics(values):
    """Columns: GLRT (AM/GM), lmax/lmin, lmax/noise-estimate, (lmax + lmin)/2.

    Degenerate entries are NaN.  An eigenvalue counts as zero when it is at
    most N * eps * lmax.
    """
    values = np.asarray(values, dtype=np.float64)
    t, n = values.shape
    lmax = values[:, 0]
    lmin = values[:, -1]
    tol = n * _EPS * lmax
    out = np.full((t, 4), np.nan)
    full_rank = lmin > tol
    with np.errstate(divide="ignore", invalid="ignore"):
        v = values[full_rank]
        out[full_rank, 0] = np.exp(np.log(v.mean(axis=1)) - np.log(v).mean(axis=1))
        out[full_rank, 1] = lmax[full_rank] / lmin[full_rank]
        if n >= 2:
            noise = values[:, 1:].sum(axis=1) / (n - 1)
            ok = noise > tol
            out[ok, 2] = lmax[ok] / noise[ok]
    out[:, 3] = 0.5 * (lmax + lmin)
    return out
