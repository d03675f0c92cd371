"""Monte Carlo campaigns: statistic vectors, empirical CFAR, ROC curves, Pmiss sweeps.

Trial ``t`` of a run draws from ``RngStream(seed, block * 2**32 + t)``.  H0
calibration, H1 evaluation and fresh H0 validation use disjoint blocks, and
chunk boundaries do not depend on the worker count, so every campaign is a
pure function of its configuration.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import _backend
from .array_signal import ArrayConfig, Hypothesis, ScenarioConfig, synth_batch
from .covariance_eig import spectra_from_snapshots
from .detectors import CalibrationTable, DetectorKind, ThresholdPolicy, batch_statistics
from .errors import CampaignError, DomainError

log = logging.getLogger(__name__)

__all__ = [
    "CampaignConfig",
    "CampaignStatistics",
    "DEFAULT_PFA_GRID",
    "RocPoint",
    "StreamBlock",
    "SweepRow",
    "calibrate",
    "binomial_se",
    "calibrate_threshold",
    "detection_rate",
    "empirical_threshold",
    "pmiss_vs_n",
    "roc_curve",
    "roc_from_statistics",
    "run_statistics",
]

STREAM_BLOCK = 1 << 32
MIN_EXCEEDANCES = 20

DEFAULT_PFA_GRID = tuple(
    sorted(set(np.round(np.geomspace(1e-3, 1e-2, 6)[:-1], 6)) | set(np.round(np.linspace(0.01, 1.0, 100), 6)))
)


class StreamBlock(enum.IntEnum):
    H0 = 0
    H1 = 1
    H0_VALIDATION = 2


@dataclass(frozen=True)
class CampaignConfig:
    scenario: ScenarioConfig
    array: ArrayConfig
    trials: int = 10_000
    seed: int = 0
    detectors: Sequence[DetectorKind] = tuple(DetectorKind)
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    workers: int = 1
    chunk_size: int = 256
    backend: Optional[str] = None

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 100:
            raise DomainError(f"trials must be an integer >= 100, got {self.trials!r}")
        dets = tuple(DetectorKind(d) for d in self.detectors)
        if not dets:
            raise DomainError("at least one detector is required")
        object.__setattr__(self, "detectors", dets)
        if self.workers < 1 or self.chunk_size < 1:
            raise DomainError("workers and chunk_size must be >= 1")

    @property
    def n(self) -> int:
        return self.array.n_antennas

    @property
    def l(self) -> int:  # noqa: E743
        return self.scenario.n_snapshots


@dataclass
class CampaignStatistics:
    """Per-detector statistic vectors (NaN marks degenerate trials)."""

    hypothesis: Hypothesis
    trials: int
    values: Dict[DetectorKind, np.ndarray]
    degenerate: Dict[DetectorKind, int]

    def __getitem__(self, kind) -> np.ndarray:
        return self.values[DetectorKind(kind)]

    def finite(self, kind) -> np.ndarray:
        v = self[kind]
        return v[np.isfinite(v)]


@dataclass(frozen=True)
class RocPoint:
    pfa: float
    pd: float
    detector: DetectorKind


@dataclass
class SweepRow:
    """Pmiss per detector at one array size; ``None`` marks a detector unavailable there."""

    n_antennas: int
    pmiss: Dict[DetectorKind, Optional[float]]
    trials_used: Dict[DetectorKind, int]


def _chunk_statistics(cfg: CampaignConfig, scenario, ids, backend):
    y = synth_batch(scenario, cfg.array, cfg.seed, ids)
    values, _ = spectra_from_snapshots(y, backend)
    return batch_statistics(values, backend)


def run_statistics(cfg: CampaignConfig, hypothesis, block: Optional[int] = None) -> CampaignStatistics:
    """Run ``cfg.trials`` independent trials under ``hypothesis``.

    ``block`` selects the stream range (defaults to the hypothesis' own block).
    Raises :class:`CampaignError` if a requested detector is degenerate on
    every trial.
    """
    hypothesis = Hypothesis(hypothesis)
    if block is None:
        block = StreamBlock.H0 if hypothesis is Hypothesis.H0 else StreamBlock.H1
    base = int(block) * STREAM_BLOCK
    scenario = cfg.scenario.with_hypothesis(hypothesis)
    backend = _backend.get_backend(cfg.backend)
    starts = range(0, cfg.trials, cfg.chunk_size)
    chunks = [range(base + s, base + min(s + cfg.chunk_size, cfg.trials)) for s in starts]

    def work(ids):
        return _chunk_statistics(cfg, scenario, ids, backend)

    if cfg.workers == 1 or len(chunks) == 1:
        parts = [work(ids) for ids in chunks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(work, chunks))
    table = np.concatenate(parts, axis=0)

    values, degenerate = {}, {}
    for kind in cfg.detectors:
        col = table[:, kind.column].copy()
        bad = int(np.count_nonzero(~np.isfinite(col)))
        if bad == cfg.trials:
            raise CampaignError(
                f"{kind.label} is degenerate on all {cfg.trials} trials (N={cfg.n}, L={cfg.l})"
            )
        if bad:
            log.info("%s: %d of %d trials degenerate, excluded", kind.label, bad, cfg.trials)
        values[kind] = col
        degenerate[kind] = bad
    return CampaignStatistics(hypothesis, cfg.trials, values, degenerate)


def empirical_threshold(h0_values, pfa: float) -> float:
    """Empirical ``(1 - pfa)``-quantile of finite H0 statistics (linear interpolation)."""
    x = np.asarray(h0_values, dtype=np.float64)
    x = x[np.isfinite(x)]
    if not 0.0 < pfa < 1.0:
        raise DomainError(f"pfa must lie in (0, 1), got {pfa!r}")
    if x.size * pfa < MIN_EXCEEDANCES:
        raise DomainError(
            f"{x.size} usable trials give {x.size * pfa:.1f} expected exceedances at pfa={pfa}; "
            f"need at least {MIN_EXCEEDANCES}"
        )
    return float(np.quantile(x, 1.0 - pfa, method="linear"))


def calibrate_threshold(cfg: CampaignConfig, kind, pfa: float,
                        h0: Optional[CampaignStatistics] = None) -> float:
    kind = DetectorKind(kind)
    if h0 is None:
        h0 = run_statistics(replace(cfg, detectors=(kind,)), Hypothesis.H0)
    return empirical_threshold(h0[kind], pfa)


def calibrate(cfg: CampaignConfig, pfas: Sequence[float],
              h0: Optional[CampaignStatistics] = None) -> CalibrationTable:
    """Empirical thresholds for every detector of ``cfg`` at every target in ``pfas``."""
    if h0 is None:
        h0 = run_statistics(cfg, Hypothesis.H0)
    table = CalibrationTable(cfg.n, cfg.l)
    for kind in cfg.detectors:
        for pfa in pfas:
            table.add(kind, pfa, empirical_threshold(h0[kind], pfa))
    return table


def detection_rate(values, threshold: float) -> float:
    """Fraction of finite entries strictly above ``threshold``."""
    x = np.asarray(values, dtype=np.float64)
    x = x[np.isfinite(x)]
    return float(np.count_nonzero(x > threshold) / x.size)


def roc_from_statistics(h0_values, h1_values, kind, pfa_grid=None) -> List[RocPoint]:
    """ROC points from precomputed H0/H1 statistic vectors.

    ``pfa_grid=None`` uses :data:`DEFAULT_PFA_GRID`; ``"order"`` sweeps the
    threshold over every H0 order statistic.
    """
    kind = DetectorKind(kind)
    x0 = np.asarray(h0_values, dtype=np.float64)
    x0 = np.sort(x0[np.isfinite(x0)])
    x1 = np.asarray(h1_values, dtype=np.float64)
    x1 = np.sort(x1[np.isfinite(x1)])
    if x0.size == 0 or x1.size == 0:
        raise CampaignError(f"{kind.label}: no usable trials for ROC")
    if isinstance(pfa_grid, str) and pfa_grid == "order":
        thresholds = x0[::-1]
        pfa = (x0.size - np.searchsorted(x0, thresholds, side="right")) / x0.size
    else:
        pfa = np.sort(np.asarray(DEFAULT_PFA_GRID if pfa_grid is None else pfa_grid, dtype=float))
        if np.any((pfa <= 0) | (pfa > 1)):
            raise DomainError("pfa grid values must lie in (0, 1]")
        thresholds = np.quantile(x0, 1.0 - pfa, method="linear")
    pd = (x1.size - np.searchsorted(x1, thresholds, side="right")) / x1.size
    pd = np.maximum.accumulate(pd)
    return [RocPoint(float(f), float(d), kind) for f, d in zip(pfa, pd)]


def roc_curve(cfg: CampaignConfig, kind, pfa_grid=None,
              h0: Optional[CampaignStatistics] = None,
              h1: Optional[CampaignStatistics] = None) -> List[RocPoint]:
    """(Pfa, Pd) pairs for one detector; statistic vectors are computed once if not given."""
    kind = DetectorKind(kind)
    sub = replace(cfg, detectors=(kind,))
    h0 = h0 if h0 is not None else run_statistics(sub, Hypothesis.H0)
    h1 = h1 if h1 is not None else run_statistics(sub, Hypothesis.H1)
    return roc_from_statistics(h0[kind], h1[kind], kind, pfa_grid)


def pmiss_vs_n(cfg: CampaignConfig, n_values: Sequence[int], pfa: float) -> List[SweepRow]:
    """False-dismissal probability versus array size at a fixed false-alarm target.

    For each N the empirical threshold is calibrated on H0 and applied to H1
    trials drawn from a disjoint stream block.  Detectors that need
    ``lambda_min > 0`` are reported as absent when N > L.
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise DomainError("n_values must be strictly ascending")
    rows = []
    for n in n_values:
        active = tuple(k for k in cfg.detectors if not (k.needs_full_rank and n > cfg.l))
        pmiss: Dict[DetectorKind, Optional[float]] = {k: None for k in cfg.detectors}
        used = {k: 0 for k in cfg.detectors}
        if active:
            sub = replace(cfg, array=ArrayConfig(n, cfg.array.spacing_wavelengths), detectors=active)
            h0 = run_statistics(sub, Hypothesis.H0)
            h1 = run_statistics(sub, Hypothesis.H1)
            for kind in active:
                thr = empirical_threshold(h0[kind], pfa)
                pmiss[kind] = 1.0 - detection_rate(h1[kind], thr)
                used[kind] = int(np.count_nonzero(np.isfinite(h1[kind])))
        log.info("N=%d: %s", n, {k.value: v for k, v in pmiss.items()})
        rows.append(SweepRow(n, pmiss, used))
    return rows


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)
