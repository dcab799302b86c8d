"""Matched-rate reference schemes: single-antenna MBM and two-antenna interleaved coding.

The MBM reference sends one symbol per slot through a mirror-selected
channel state of a single antenna. The two-antenna reference sends the
interleaved symbol pair diag(s0~, s1~) without any mirror states; its
detection reuses the orthogonal equivalent-channel split with the two
antennas as the fixed realization pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import RotatedConstellation, int_to_bits
from .detector import _as_batch, _component_minima, _ints_to_bits
from .encoder import PlacedBatch, SparseCodeword, _bit_fields

MBM = "mbm"
CIOD = "ciod"


@dataclass(frozen=True)
class BaselineConfig:
    """Reference-scheme parameters; `nrf` is meaningful for MBM only."""

    kind: str
    nrf: int
    nr: int
    constellation: RotatedConstellation

    def __post_init__(self):
        if self.kind not in (MBM, CIOD):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == MBM and self.nrf < 1:
            raise ValueError("the MBM baseline needs nrf >= 1")
        if self.kind == CIOD and self.nrf != 0:
            raise ValueError("the two-antenna baseline has no RF mirrors; use nrf=0")
        if self.nr < 1:
            raise ValueError(f"nr must be positive, got {self.nr}")

    @property
    def nt(self) -> int:
        return 1 if self.kind == MBM else 2

    @property
    def slots(self) -> int:
        return 1 if self.kind == MBM else 2

    @property
    def num_realizations(self) -> int:
        return (1 << self.nrf) if self.kind == MBM else 2

    @property
    def bits_per_frame(self) -> int:
        nbps = self.constellation.bits_per_symbol
        return self.nrf + nbps if self.kind == MBM else 2 * nbps

    @property
    def bits_per_codeword(self) -> int:
        return self.bits_per_frame

    @property
    def spectral_efficiency(self) -> float:
        """Information bits per channel use (slot)."""
        return self.bits_per_frame / self.slots


def mbm_encode_batch(cfg: BaselineConfig, bits: np.ndarray) -> PlacedBatch:
    bits = np.asarray(bits, dtype=np.int64)
    m, i = _bit_fields(bits, [cfg.nrf, cfg.constellation.bits_per_symbol])
    x = cfg.constellation.points[i]
    zero = np.zeros_like(x)
    return PlacedBatch(m_a=m[:, None], v_a=x[:, None], m_b=m[:, None], v_b=zero[:, None])


def mbm_encode(cfg: BaselineConfig, bits) -> SparseCodeword:
    """State index from the first nrf bits, symbol from the rest; one slot."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (cfg.bits_per_frame,):
        raise ValueError(f"expected {cfg.bits_per_frame} bits, got shape {bits.shape}")
    placed = mbm_encode_batch(cfg, bits[None, :])
    return SparseCodeword(
        num_realizations=cfg.num_realizations,
        entries=((int(placed.m_a[0, 0]) + 1, 1, complex(placed.v_a[0, 0])),),
        num_slots=1,
    )


def mbm_detect_batch(
    cfg: BaselineConfig, y: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """ML over all (state, symbol) hypotheses for a batch of one-slot frames."""
    y, h = _as_batch(y, h)
    pts = cfg.constellation.points
    z = np.einsum("brm,br->bm", h.conj(), y[:, :, 0])
    gains = np.sum(h.real**2 + h.imag**2, axis=1)
    d = gains[:, :, None] * np.abs(pts) ** 2 - 2.0 * (z[:, :, None] * pts.conj()).real
    flat = d.reshape(len(y), -1)
    best = np.argmin(flat, axis=1)
    metrics = flat[np.arange(len(y)), best] + np.sum(y.real**2 + y.imag**2, axis=(1, 2))
    m_idx, s_idx = np.divmod(best, len(pts))
    bits = np.concatenate(
        [
            _ints_to_bits(m_idx, cfg.nrf),
            _ints_to_bits(s_idx, cfg.constellation.bits_per_symbol),
        ],
        axis=1,
    )
    return bits, metrics, cfg.num_realizations * len(pts)


def mbm_detect(cfg: BaselineConfig, y: np.ndarray, h: np.ndarray) -> np.ndarray:
    bits, _, _ = mbm_detect_batch(cfg, y, h)
    return bits[0]


def ciod_encode_batch(cfg: BaselineConfig, bits: np.ndarray) -> PlacedBatch:
    bits = np.asarray(bits, dtype=np.int64)
    nbps = cfg.constellation.bits_per_symbol
    i0, i1 = _bit_fields(bits, [nbps, nbps])
    pts = cfg.constellation.points
    x0, x1 = pts[i0], pts[i1]
    s0 = x0.real + 1j * x1.imag
    s1 = x1.real + 1j * x0.imag
    m = np.zeros(len(bits), dtype=np.int64)
    zero = np.zeros_like(s0)
    return PlacedBatch(
        m_a=np.stack([m, m + 1], axis=1),
        v_a=np.stack([s0, s1], axis=1),
        m_b=np.stack([m, m + 1], axis=1),
        v_b=np.stack([zero, zero], axis=1),
    )


def ciod_encode(cfg: BaselineConfig, bits) -> SparseCodeword:
    """Interleaved symbol pair on the diagonal of a 2x2 two-slot matrix."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (cfg.bits_per_frame,):
        raise ValueError(f"expected {cfg.bits_per_frame} bits, got shape {bits.shape}")
    placed = ciod_encode_batch(cfg, bits[None, :])
    return SparseCodeword(
        num_realizations=2,
        entries=(
            (1, 1, complex(placed.v_a[0, 0])),
            (2, 2, complex(placed.v_a[0, 1])),
        ),
    )


def ciod_detect_batch(
    cfg: BaselineConfig, y: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Symbol-by-symbol ML through the orthogonal equivalent-channel halves."""
    y, h = _as_batch(y, h)
    pts = cfg.constellation.points
    z1 = np.einsum("brm,br->bm", h.conj(), y[:, :, 0])
    z2 = np.einsum("brm,br->bm", h.conj(), y[:, :, 1])
    gains = np.sum(h.real**2 + h.imag**2, axis=1)
    g1, g2 = gains[:, :1], gains[:, 1:]
    d0, i0 = _component_minima(z1[:, :1].real, z2[:, 1:].imag, g1, g2, pts)
    d1, i1 = _component_minima(z2[:, 1:].real, z1[:, :1].imag, g2, g1, pts)
    metrics = (d0 + d1)[:, 0] + np.sum(y.real**2 + y.imag**2, axis=(1, 2))
    nbps = cfg.constellation.bits_per_symbol
    bits = np.concatenate(
        [_ints_to_bits(i0[:, 0], nbps), _ints_to_bits(i1[:, 0], nbps)], axis=1
    )
    return bits, metrics, 2 * len(pts)


def ciod_detect(cfg: BaselineConfig, y: np.ndarray, h: np.ndarray) -> np.ndarray:
    bits, _, _ = ciod_detect_batch(cfg, y, h)
    return bits[0]


def mbm_codebook(cfg: BaselineConfig) -> list[tuple[np.ndarray, SparseCodeword]]:
    """All (bits, codeword) pairs in natural binary order."""
    n = cfg.bits_per_frame
    return [(int_to_bits(v, n), mbm_encode(cfg, int_to_bits(v, n))) for v in range(1 << n)]


def ciod_codebook(cfg: BaselineConfig) -> list[tuple[np.ndarray, SparseCodeword]]:
    """All (bits, codeword) pairs in natural binary order."""
    n = cfg.bits_per_frame
    return [(int_to_bits(v, n), ciod_encode(cfg, int_to_bits(v, n))) for v in range(1 << n)]


def baseline_codebook(cfg: BaselineConfig) -> list[tuple[np.ndarray, SparseCodeword]]:
    return mbm_codebook(cfg) if cfg.kind == MBM else ciod_codebook(cfg)
