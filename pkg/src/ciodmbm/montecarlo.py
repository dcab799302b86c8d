"""Frame-level BER simulation with reproducible counter-based streams.

Frames are processed in fixed-size batches. Every random draw of frame f at
grid point i comes from the counter window of a Philox stream keyed by
(seed, i, stream role), so results depend only on (plan, seed): batching and
worker scheduling cannot change them. Early stopping is checked after each
batch, in batch order, which keeps the accepted frame prefix deterministic
under any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .baselines import (
    MBM,
    BaselineConfig,
    ciod_encode_batch,
    ciod_detect_batch,
    mbm_encode_batch,
    mbm_detect_batch,
)
from .channel import CounterStream, n0_from_ebn0
from .detector import brute_force_ml_batch, fast_ml_scheme1_batch
from .encoder import Scheme, SchemeConfig, encode_batch

FRAMES_PER_BATCH = 4096
_STREAM_DATA, _STREAM_CHANNEL, _STREAM_NOISE = 0, 1, 2


@dataclass(frozen=True)
class SimPlan:
    """One BER experiment: scheme or baseline, an SNR grid and stopping rules."""

    config: object
    ebn0_db: tuple[float, ...]
    max_frames: int = 1_000_000
    min_bit_errors: int = 200
    seed: int = 0
    workers: int = 1
    zero_noise: bool = False  # debug: disable the noise term entirely

    def __post_init__(self):
        grid = np.asarray(self.ebn0_db, dtype=float)
        if grid.ndim != 1 or len(grid) == 0:
            raise ValueError("ebn0_db grid must be a non-empty 1-D sequence")
        if len(grid) > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("ebn0_db grid must be strictly increasing")
        if self.max_frames < 1:
            raise ValueError("max_frames must be at least 1")
        if self.min_bit_errors < 1:
            raise ValueError("min_bit_errors must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class BerPoint:
    """Simulation outcome at one grid point."""

    ebn0_db: float
    frames: int
    bits: int
    bit_errors: int
    ber: float
    ci95_halfwidth: float
    elapsed_s: float
    undersampled: bool


@dataclass
class BerCurve:
    points: list[BerPoint] = field(default_factory=list)

    @property
    def ebn0_db(self) -> np.ndarray:
        return np.array([p.ebn0_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


@dataclass(frozen=True)
class _Adapter:
    bits_per_frame: int
    num_realizations: int
    slots: int
    encode: Callable
    detect: Callable


def _make_adapter(config) -> _Adapter:
    if isinstance(config, SchemeConfig):
        detect = (
            fast_ml_scheme1_batch
            if config.scheme is Scheme.CIOD_MBM_1
            else brute_force_ml_batch
        )
        return _Adapter(
            bits_per_frame=config.bits_per_codeword,
            num_realizations=config.num_realizations,
            slots=2,
            encode=encode_batch,
            detect=detect,
        )
    if isinstance(config, BaselineConfig):
        if config.kind == MBM:
            return _Adapter(
                bits_per_frame=config.bits_per_frame,
                num_realizations=config.num_realizations,
                slots=1,
                encode=mbm_encode_batch,
                detect=mbm_detect_batch,
            )
        return _Adapter(
            bits_per_frame=config.bits_per_frame,
            num_realizations=2,
            slots=2,
            encode=ciod_encode_batch,
            detect=ciod_detect_batch,
        )
    raise TypeError(f"unsupported config type {type(config).__name__}")


@dataclass(frozen=True)
class _PointStreams:
    data: CounterStream
    channel: CounterStream
    noise: CounterStream


def _point_streams(plan: SimPlan, adapter: _Adapter, snr_index: int) -> _PointStreams:
    nr = plan.config.nr
    return _PointStreams(
        data=CounterStream(plan.seed, (snr_index, _STREAM_DATA), adapter.bits_per_frame),
        channel=CounterStream(
            plan.seed, (snr_index, _STREAM_CHANNEL), 2 * nr * adapter.num_realizations
        ),
        noise=CounterStream(plan.seed, (snr_index, _STREAM_NOISE), 2 * nr * adapter.slots),
    )


def _run_batch(
    config, adapter: _Adapter, streams: _PointStreams, n0: float, first: int, count: int
) -> int:
    """Simulate frames [first, first + count) and return the bit error count."""
    nr = config.nr
    nm = adapter.num_realizations
    slots = adapter.slots

    bits = (streams.data.uniforms(first, count)[:, : adapter.bits_per_frame] < 0.5).astype(
        np.int8
    )
    zc = streams.channel.normals(first, count)
    h = np.sqrt(0.5) * (
        zc[:, : nr * nm] + 1j * zc[:, nr * nm : 2 * nr * nm]
    ).reshape(count, nr, nm)

    placed = adapter.encode(config, bits)
    rows = np.arange(count)[:, None]
    ha = h[rows, :, placed.m_a]  # (count, slots, nr)
    hb = h[rows, :, placed.m_b]
    y = (ha * placed.v_a[:, :, None] + hb * placed.v_b[:, :, None]).transpose(0, 2, 1)
    if n0 > 0:
        zn = streams.noise.normals(first, count)
        noise = (
            zn[:, : nr * slots] + 1j * zn[:, nr * slots : 2 * nr * slots]
        ).reshape(count, nr, slots)
        y = y + np.sqrt(n0 / 2.0) * noise

    decided, _, _ = adapter.detect(config, y, h)
    return int(np.sum(decided != bits))


def run(plan: SimPlan) -> BerCurve:
    """Simulate the BER curve for `plan`.

    Each grid point accumulates whole batches until `min_bit_errors` is
    reached or `max_frames` is exhausted; points stopping on the frame cap
    with fewer errors are flagged `undersampled`.
    """
    adapter = _make_adapter(plan.config)
    curve = BerCurve()
    starts = list(range(0, plan.max_frames, FRAMES_PER_BATCH))

    for si, db in enumerate(plan.ebn0_db):
        n0 = 0.0 if plan.zero_noise else n0_from_ebn0(plan.config, db)
        streams = _point_streams(plan, adapter, si)
        t0 = time.perf_counter()
        errors = 0
        frames = 0

        def batch_job(first: int) -> int:
            count = min(FRAMES_PER_BATCH, plan.max_frames - first)
            return _run_batch(plan.config, adapter, streams, n0, first, count)

        if plan.workers == 1:
            for first in starts:
                errors += batch_job(first)
                frames += min(FRAMES_PER_BATCH, plan.max_frames - first)
                if errors >= plan.min_bit_errors:
                    break
        else:
            with ThreadPoolExecutor(max_workers=plan.workers) as pool:
                stop = False
                for wave_start in range(0, len(starts), plan.workers):
                    wave = starts[wave_start : wave_start + plan.workers]
                    # consume results strictly in batch order so the accepted
                    # prefix is identical for any worker count
                    for first, got in zip(wave, pool.map(batch_job, wave)):
                        errors += got
                        frames += min(FRAMES_PER_BATCH, plan.max_frames - first)
                        if errors >= plan.min_bit_errors:
                            stop = True
                            break
                    if stop:
                        break

        nbits = frames * adapter.bits_per_frame
        ber = errors / nbits if nbits else 0.0
        ci = 1.96 * np.sqrt(max(ber * (1.0 - ber), 0.0) / nbits) if nbits else 0.0
        curve.points.append(
            BerPoint(
                ebn0_db=float(db),
                frames=frames,
                bits=nbits,
                bit_errors=errors,
                ber=ber,
                ci95_halfwidth=float(ci),
                elapsed_s=time.perf_counter() - t0,
                undersampled=errors < plan.min_bit_errors,
            )
        )
    return curve


def diversity_slope(curve: BerCurve, window_db: tuple[float, float]) -> float:
    """Fitted decay order of the curve inside an SNR window.

    Least-squares slope of log10(BER) against Eb/N0 (in decades, i.e. dB/10)
    over resolved points with BER below 1e-2, returned as a positive decay
    order for falling curves.
    """
    lo, hi = window_db
    pts = [
        p
        for p in curve.points
        if lo <= p.ebn0_db <= hi and 0.0 < p.ber < 1e-2
    ]
    if len(pts) < 3:
        raise ValueError(
            f"need at least 3 resolved points with BER < 1e-2 in [{lo}, {hi}] dB, "
            f"found {len(pts)}"
        )
    x = np.array([p.ebn0_db / 10.0 for p in pts])
    y = np.log10([p.ber for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)
