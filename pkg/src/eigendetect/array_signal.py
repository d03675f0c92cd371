"""Uniform linear array model and synthetic snapshot generation.

Snapshots follow the single-emitter narrowband model

    y[k] = sqrt(SNR) * a(theta) * s[k] + v[k],    v[k] ~ CN(0, I_N)

with the first antenna as phase reference, so ``a[0] == 1``.  Under H0 the
signal term is absent.  Each trial owns an :class:`RngStream`, which makes
every draw a pure function of ``(seed, stream_id)``.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError, SnapshotFormatError

__all__ = [
    "ArrayConfig",
    "Hypothesis",
    "RngStream",
    "ScenarioConfig",
    "SnapshotMatrix",
    "SNAPSHOT_MAGIC",
    "read_snapshots",
    "steering_vector",
    "synth_batch",
    "synth_snapshots",
    "write_snapshots",
]

SNAPSHOT_MAGIC = b"EMSNAP01"
_HEADER = struct.Struct("<8sII")
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_U64_MAX = 2**64 - 1


class Hypothesis(str, enum.Enum):
    H0 = "h0"  # noise only
    H1 = "h1"  # single emitter plus noise


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of an N-element ULA; spacing is given in wavelengths."""

    n_antennas: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise DomainError(f"n_antennas must be an integer >= 2, got {self.n_antennas!r}")
        if not (math.isfinite(self.spacing_wavelengths) and self.spacing_wavelengths > 0):
            raise DomainError(
                f"spacing_wavelengths must be finite and > 0, got {self.spacing_wavelengths!r}"
            )


@dataclass(frozen=True)
class ScenarioConfig:
    """Operating point of one experiment.

    ``signal`` selects the emitter waveform: ``"gaussian"`` draws unit-power
    circular complex Gaussian symbols, ``"qpsk"`` draws unit-modulus symbols.
    """

    snr_db: float
    theta_rad: float
    n_snapshots: int
    hypothesis: Hypothesis = Hypothesis.H1
    signal: str = "gaussian"

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise DomainError(f"snr_db must be finite, got {self.snr_db!r}")
        if not (math.isfinite(self.theta_rad) and abs(self.theta_rad) < math.pi / 2):
            raise DomainError(f"theta_rad must lie in (-pi/2, pi/2), got {self.theta_rad!r}")
        if int(self.n_snapshots) != self.n_snapshots or self.n_snapshots < 1:
            raise DomainError(f"n_snapshots must be an integer >= 1, got {self.n_snapshots!r}")
        if self.signal not in ("gaussian", "qpsk"):
            raise DomainError(f"unknown signal model {self.signal!r}")
        object.__setattr__(self, "hypothesis", Hypothesis(self.hypothesis))

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def with_hypothesis(self, hypothesis) -> "ScenarioConfig":
        return ScenarioConfig(self.snr_db, self.theta_rad, self.n_snapshots, hypothesis, self.signal)


@dataclass(frozen=True)
class RngStream:
    """Independent random stream identified by a campaign seed and a trial index."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value <= _U64_MAX:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """N x L complex receive samples, one column per snapshot."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise DomainError(f"snapshot data must be 2-D, got shape {data.shape}")
        data = np.ascontiguousarray(data, dtype=np.complex128)
        if not np.all(np.isfinite(data)):
            raise DomainError("snapshot data contains non-finite samples")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.data.shape[1]


def steering_vector(theta_rad: float, cfg: ArrayConfig) -> np.ndarray:
    """Array manifold ``exp(j 2 pi (d/lambda) m sin(theta))`` for m = 0..N-1."""
    theta_rad = float(theta_rad)
    if not math.isfinite(theta_rad):
        raise DomainError(f"theta must be finite, got {theta_rad!r}")
    if abs(theta_rad) >= math.pi / 2:
        raise DomainError(f"theta must lie in (-pi/2, pi/2), got {theta_rad!r}")
    m = np.arange(cfg.n_antennas, dtype=np.float64)
    return np.exp(1j * (2.0 * math.pi * cfg.spacing_wavelengths * math.sin(theta_rad)) * m)


def _draw_into(out, scenario, cfg, rng, steering):
    # Draw order is part of the reproducibility contract: noise (N, L, re/im)
    # first, then the L emitter symbols.
    n, l = cfg.n_antennas, scenario.n_snapshots
    noise = rng.standard_normal((n, l, 2)).view(np.complex128)[..., 0]
    np.multiply(noise, _INV_SQRT2, out=out)
    if scenario.hypothesis is Hypothesis.H0:
        return out
    if scenario.signal == "gaussian":
        s = rng.standard_normal((l, 2)).view(np.complex128)[:, 0] * _INV_SQRT2
    else:
        s = np.exp(1j * (math.pi / 4 + (math.pi / 2) * rng.integers(0, 4, size=l)))
    out += np.outer(math.sqrt(scenario.snr) * steering, s)
    return out


def synth_snapshots(scenario: ScenarioConfig, cfg: ArrayConfig, rng: RngStream) -> SnapshotMatrix:
    """Draw one N x L snapshot matrix under ``scenario.hypothesis``."""
    out = np.empty((cfg.n_antennas, scenario.n_snapshots), dtype=np.complex128)
    a = steering_vector(scenario.theta_rad, cfg)
    _draw_into(out, scenario, cfg, rng.generator(), a)
    return SnapshotMatrix(out)


def synth_batch(scenario: ScenarioConfig, cfg: ArrayConfig, seed: int, stream_ids) -> np.ndarray:
    """Stack of snapshot matrices, shape (len(stream_ids), N, L).

    Slice ``t`` is bit-identical to ``synth_snapshots(..., RngStream(seed, stream_ids[t])).data``.
    """
    stream_ids = list(stream_ids)
    out = np.empty((len(stream_ids), cfg.n_antennas, scenario.n_snapshots), dtype=np.complex128)
    a = steering_vector(scenario.theta_rad, cfg)
    for t, sid in enumerate(stream_ids):
        _draw_into(out[t], scenario, cfg, RngStream(seed, sid).generator(), a)
    return out


PathLike = Union[str, Path]


def write_snapshots(path: PathLike, snapshots: SnapshotMatrix) -> int:
    """Write an EMSNAP01 file and return the number of bytes written.

    Layout: magic, u32 N, u32 L, then L columns of N (float64 re, float64 im),
    all little-endian.
    """
    header = _HEADER.pack(SNAPSHOT_MAGIC, snapshots.n, snapshots.l)
    body = np.ascontiguousarray(snapshots.data.T, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
    return len(header) + len(body)


def read_snapshots(path: PathLike) -> SnapshotMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n, l = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * n * l
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: expected {expected} bytes for N={n}, L={l}, found {len(raw)}"
        )
    cols = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(l, n)
    try:
        return SnapshotMatrix(cols.T.astype(np.complex128))
    except DomainError as exc:
        raise SnapshotFormatError(f"{path}: {exc}") from None
