"""Random-matrix limit laws used for CFAR thresholds.

Marchenko-Pastur support edges, Tracy-Widom CDF/quantile lookup from
precomputed tables, and the centering/scaling constants that map the largest
sample-covariance eigenvalue onto the Tracy-Widom law.

Tables live in ``eigendetect/data/tw{1,2}.txt``; set ``EIGENDETECT_TW_DIR``
to load them from elsewhere.  Regenerate with ``tools/make_tw_tables.py``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError

__all__ = [
    "MpEdges",
    "TwConstants",
    "TwTable",
    "TW_DIR_ENV",
    "load_tw_table",
    "mp_edges",
    "tw_cdf",
    "tw_constants",
    "tw_quantile",
]

TW_DIR_ENV = "EIGENDETECT_TW_DIR"
P_MIN, P_MAX = 0.001, 0.999


@dataclass(frozen=True)
class MpEdges:
    a: float
    b: float


@dataclass(frozen=True)
class TwConstants:
    mu: float
    nu: float
    order: int


def _check_order(order):
    if order not in (1, 2):
        raise DomainError(f"Tracy-Widom order must be 1 or 2, got {order!r}")


def mp_edges(n: int, l: int) -> MpEdges:  # noqa: E741
    """Marchenko-Pastur support ``[(sqrt(L) - sqrt(N))^2 / L, (sqrt(L) + sqrt(N))^2 / L]``.

    Defined for unit noise variance and ``1 <= N <= L``.
    """
    if n < 1 or l < 1:
        raise DomainError(f"need N >= 1 and L >= 1, got N={n}, L={l}")
    if n > l:
        raise DomainError(f"Marchenko-Pastur edges need N <= L, got N={n}, L={l}")
    sl, sn = math.sqrt(l), math.sqrt(n)
    # sqrt(L) - sqrt(N) written as (L - N) / (sqrt(L) + sqrt(N)) to avoid cancellation
    return MpEdges(((l - n) / (sl + sn)) ** 2 / l, (sl + sn) ** 2 / l)


def tw_constants(n: int, l: int, order: int = 1) -> TwConstants:  # noqa: E741
    """Centering and scaling of the largest eigenvalue of the 1/L-normalised sample covariance.

    Order 1 uses the real-data constants (with L - 1), order 2 the complex-data
    constants.  ``(lambda_max - mu) / nu`` is then approximately TW of that order.
    """
    _check_order(order)
    if n < 2 or l < 2:
        raise DomainError(f"need N >= 2 and L >= 2, got N={n}, L={l}")
    m = l - 1 if order == 1 else l
    sm, sn = math.sqrt(m), math.sqrt(n)
    mu = (sm + sn) ** 2 / l
    nu = (sm + sn) * (1.0 / sm + 1.0 / sn) ** (1.0 / 3.0) / l
    return TwConstants(mu, nu, order)


class TwTable:
    """Tabulated Tracy-Widom CDF with shape-preserving cubic interpolation."""

    def __init__(self, grid, cdf, order: int):
        _check_order(order)
        grid = np.asarray(grid, dtype=np.float64)
        cdf = np.asarray(cdf, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != cdf.shape or grid.size < 4:
            raise ConfigurationError("table needs matching 1-D columns with at least 4 rows")
        if np.any(np.diff(grid) <= 0):
            raise ConfigurationError("table abscissae must be strictly ascending")
        if np.any(np.diff(cdf) <= 0) or cdf[0] < 0 or cdf[-1] > 1:
            raise ConfigurationError("table CDF must be strictly increasing inside [0, 1]")
        if not (cdf[0] < P_MIN and cdf[-1] > P_MAX):
            raise ConfigurationError(
                f"table must cover ({P_MIN}, {P_MAX}); got [{cdf[0]:.3g}, {cdf[-1]:.3g}]"
            )
        self.grid = grid
        self.cdf = cdf
        self.order = order
        self._interp = PchipInterpolator(grid, cdf, extrapolate=False)

    @classmethod
    def from_file(cls, path, order: int) -> "TwTable":
        try:
            data = np.loadtxt(path, comments="#", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read Tracy-Widom table {path}: {exc}") from None
        if data.shape[1] != 2:
            raise ConfigurationError(f"{path}: expected two columns 't cdf'")
        return cls(data[:, 0], data[:, 1], order)

    def evaluate(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.clip(self._interp(t), 0.0, 1.0)
        out = np.where(t < self.grid[0], 0.0, out)
        out = np.where(t > self.grid[-1], 1.0, out)
        out = np.where(np.isnan(t), np.nan, out)
        return out if out.ndim else float(out)

    def invert(self, p: float) -> float:
        p = float(p)
        if not P_MIN < p < P_MAX:
            raise DomainError(f"probability {p!r} outside table coverage ({P_MIN}, {P_MAX})")
        i = int(np.searchsorted(self.cdf, p))
        if self.cdf[i] == p:
            return float(self.grid[i])
        lo, hi = self.grid[i - 1], self.grid[i]
        return float(brentq(lambda t: float(self._interp(t)) - p, lo, hi, xtol=1e-14, rtol=1e-15))


def _table_path(order: int) -> Path:
    override = os.environ.get(TW_DIR_ENV)
    if override:
        return Path(override) / f"tw{order}.txt"
    return Path(str(resources.files("eigendetect") / "data" / f"tw{order}.txt"))


@lru_cache(maxsize=None)
def _load_cached(path: str, order: int) -> TwTable:
    if not os.path.exists(path):
        raise ConfigurationError(f"Tracy-Widom table for order {order} not found at {path}")
    return TwTable.from_file(path, order)


def load_tw_table(order: int = 1, path=None) -> TwTable:
    """Load (and cache) the table for ``order`` from ``path``, the env override, or package data."""
    _check_order(order)
    p = Path(path) if path is not None else _table_path(order)
    return _load_cached(str(p.resolve()), order)


def tw_cdf(t, order: int = 1, table: Optional[TwTable] = None):
    """Tracy-Widom CDF; 0 below the table grid and 1 above it."""
    return (table or load_tw_table(order)).evaluate(t)


def tw_quantile(p: float, order: int = 1, table: Optional[TwTable] = None) -> float:
    """Inverse of :func:`tw_cdf` for ``p`` in (0.001, 0.999)."""
    return (table or load_tw_table(order)).invert(p)
