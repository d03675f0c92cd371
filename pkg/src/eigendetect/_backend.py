"""Select the compiled kernels when available, else the numpy fallback.

Set ``EIGENDETECT_BACKEND=python`` to force the fallback.
"""

import logging
import os

import numpy as np

from . import _fallback
from .errors import ConfigurationError, InvariantViolation, NumericError

log = logging.getLogger(__name__)

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None


class _CompiledBackend:
    name = "compiled"

    def batch_spectra(self, y):
        y = np.ascontiguousarray(y, dtype=np.complex128)
        t, n, _ = y.shape
        values = np.empty((t, n))
        trace = np.empty(t)
        status, bad, info = _kernels.batch_spectra(y, values, trace, _fallback.NEG_TOL)
        if status == 1:
            raise NumericError(f"trial {bad}: zheevd failed to converge (info={info})")
        if status == 2:
            raise InvariantViolation(
                f"trial {bad}: eigenvalue below -{_fallback.NEG_TOL:g} * trace"
            )
        return values, trace

    def batch_statistics(self, values):
        values = np.ascontiguousarray(values, dtype=np.float64)
        out = np.empty((values.shape[0], 4))
        _kernels.batch_statistics(values, out)
        return out


class _PythonBackend:
    name = "python"
    batch_spectra = staticmethod(_fallback.batch_spectra)
    batch_statistics = staticmethod(_fallback.batch_statistics)


def available_backends():
    return ["compiled", "python"] if _kernels is not None else ["python"]


def get_backend(name=None):
    """Return a backend by name; ``None`` honours EIGENDETECT_BACKEND then prefers compiled."""
    if name is None:
        name = os.environ.get("EIGENDETECT_BACKEND", "").strip().lower() or None
    if name is None:
        return _CompiledBackend() if _kernels is not None else _PythonBackend()
    if name == "python":
        return _PythonBackend()
    if name == "compiled":
        if _kernels is None:
            raise ConfigurationError("compiled backend requested but _kernels is not built")
        return _CompiledBackend()
    raise ConfigurationError(f"unknown backend {name!r}")


BACKEND = get_backend()
log.debug("eigendetect backend: %s", BACKEND.name)
