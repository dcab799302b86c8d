"""Bit-block encoding into two-slot sparse transmission matrices.

Both schemes spread a pair of rotated symbols over two time slots through
selected channel realizations. Realizations are flattened antenna-major:
realization m = (k - 1) * 2**nrf + l for antenna k and mirror state l
(1-based). Scheme 1 activates one realization per slot; scheme 2 splits the
real and imaginary symbol coordinates across two antennas per slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .constellation import RotatedConstellation, int_to_bits, nearest_symbol

CODEBOOK_GUARD_BITS = 20


class Scheme(str, Enum):
    CIOD_MBM_1 = "ciod_mbm_1"
    CIOD_MBM_2 = "ciod_mbm_2"


def _log2_int(value: int, what: str) -> int:
    if value < 1 or value & (value - 1):
        raise ValueError(f"{what} must be a power of two, got {value}")
    return value.bit_length() - 1


@dataclass(frozen=True)
class SchemeConfig:
    """Transmission parameters shared by encoder, detector and simulator."""

    scheme: Scheme
    nt: int
    nrf: int
    nr: int
    constellation: RotatedConstellation

    def __post_init__(self):
        _log2_int(self.nt, "nt")
        if self.scheme is Scheme.CIOD_MBM_1 and self.nt < 2:
            raise ValueError("scheme 1 needs nt >= 2 to form two antenna groups")
        if self.scheme is Scheme.CIOD_MBM_2 and self.nrf < 1:
            raise ValueError("scheme 2 needs nrf >= 1")
        if self.nrf < 0:
            raise ValueError(f"nrf must be non-negative, got {self.nrf}")
        if self.nr < 1:
            raise ValueError(f"nr must be positive, got {self.nr}")

    @property
    def num_states(self) -> int:
        return 1 << self.nrf

    @property
    def num_realizations(self) -> int:
        return self.nt << self.nrf

    @property
    def index_bits(self) -> int:
        if self.scheme is Scheme.CIOD_MBM_1:
            return _log2_int(self.nt // 2, "nt/2") + self.nrf
        return self.nrf - 1 + 2 * _log2_int(self.nt, "nt")

    @property
    def symbol_bits(self) -> int:
        return 2 * self.constellation.bits_per_symbol

    @property
    def bits_per_codeword(self) -> int:
        return self.index_bits + self.symbol_bits

    @property
    def spectral_efficiency(self) -> float:
        """Information bits per channel use (codewords span two slots)."""
        return self.bits_per_codeword / 2.0


@dataclass(frozen=True)
class CodewordSelection:
    """Decoded index state: antennas, channel states and the two data symbols.

    Antenna and state indices are 1-based. Scheme 1 uses a single state
    (l1 == l2); scheme 2 pairs states as l2 = 2**(nrf-1) + l1.
    """

    k1: int
    k2: int
    l1: int
    l2: int
    x0: complex
    x1: complex

    @property
    def l(self) -> int:
        return self.l1

    @property
    def s0_tilde(self) -> complex:
        return complex(self.x0.real, self.x1.imag)

    @property
    def s1_tilde(self) -> complex:
        return complex(self.x1.real, self.x0.imag)


@dataclass(frozen=True)
class SparseCodeword:
    """Transmission matrix as (realization m, slot t, value) entries, 1-based."""

    num_realizations: int
    entries: tuple[tuple[int, int, complex], ...]
    num_slots: int = 2

    def dense(self) -> np.ndarray:
        """Dense (num_realizations, num_slots) complex matrix."""
        x = np.zeros((self.num_realizations, self.num_slots), dtype=complex)
        for m, slot, value in self.entries:
            x[m - 1, slot - 1] += value
        return x

    @property
    def frobenius_energy(self) -> float:
        return float(np.sum(np.abs(self.dense()) ** 2))


@dataclass(frozen=True)
class PlacedBatch:
    """Per-frame sparse columns for a batch of codewords.

    Slot t of frame b is h[:, m_a[b, t]] * v_a[b, t] + h[:, m_b[b, t]] * v_b[b, t]
    with 0-based realization indices; coincident positions simply add.
    """

    m_a: np.ndarray
    v_a: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray

    @property
    def slots(self) -> int:
        return self.m_a.shape[1]


def _bit_fields(bits: np.ndarray, widths: list[int]) -> list[np.ndarray]:
    """Split (B, n) bit rows into integer fields of the given widths, MSB first."""
    fields = []
    start = 0
    for w in widths:
        if w == 0:
            fields.append(np.zeros(len(bits), dtype=np.int64))
            continue
        weights = 1 << np.arange(w - 1, -1, -1)
        fields.append(bits[:, start:start + w] @ weights)
        start += w
    return fields


def encode_batch(cfg: SchemeConfig, bits: np.ndarray) -> PlacedBatch:
    """Vectorized encoding of (B, 2*eta) bit rows into sparse slot entries."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 2 or bits.shape[1] != cfg.bits_per_codeword:
        raise ValueError(
            f"expected bit blocks of shape (B, {cfg.bits_per_codeword}), got {bits.shape}"
        )
    pts = cfg.constellation.points
    nbps = cfg.constellation.bits_per_symbol
    nstates = cfg.num_states

    if cfg.scheme is Scheme.CIOD_MBM_1:
        na = _log2_int(cfg.nt // 2, "nt/2")
        a, s, i0, i1 = _bit_fields(bits, [na, cfg.nrf, nbps, nbps])
        x0, x1 = pts[i0], pts[i1]
        m1 = a * nstates + s
        m2 = m1 + (cfg.nt // 2) * nstates
        s0 = x0.real + 1j * x1.imag
        s1 = x1.real + 1j * x0.imag
        zero = np.zeros_like(s0)
        return PlacedBatch(
            m_a=np.stack([m1, m2], axis=1),
            v_a=np.stack([s0, s1], axis=1),
            m_b=np.stack([m1, m2], axis=1),
            v_b=np.stack([zero, zero], axis=1),
        )

    nk = _log2_int(cfg.nt, "nt")
    half = nstates // 2
    l1, k1, k2, i0, i1 = _bit_fields(bits, [cfg.nrf - 1, nk, nk, nbps, nbps])
    x0, x1 = pts[i0], pts[i1]
    l2 = l1 + half
    return PlacedBatch(
        m_a=np.stack([k1 * nstates + l1, k1 * nstates + l2], axis=1),
        v_a=np.stack([x0.real + 0j, x1.real + 0j], axis=1),
        m_b=np.stack([k2 * nstates + l1, k2 * nstates + l2], axis=1),
        v_b=np.stack([1j * x1.imag, 1j * x0.imag], axis=1),
    )


def selection_from_bits(cfg: SchemeConfig, bits: np.ndarray) -> CodewordSelection:
    """Index state encoded by a bit block, without building the matrix."""
    pts = cfg.constellation.points
    nbps = cfg.constellation.bits_per_symbol
    if cfg.scheme is Scheme.CIOD_MBM_1:
        na = _log2_int(cfg.nt // 2, "nt/2")
        a, s, i0, i1 = (int(f[0]) for f in _bit_fields(bits[None, :], [na, cfg.nrf, nbps, nbps]))
        return CodewordSelection(
            k1=a + 1, k2=cfg.nt // 2 + a + 1, l1=s + 1, l2=s + 1,
            x0=complex(pts[i0]), x1=complex(pts[i1]),
        )
    nk = _log2_int(cfg.nt, "nt")
    l1, k1, k2, i0, i1 = (
        int(f[0]) for f in _bit_fields(bits[None, :], [cfg.nrf - 1, nk, nk, nbps, nbps])
    )
    return CodewordSelection(
        k1=k1 + 1, k2=k2 + 1, l1=l1 + 1, l2=l1 + 1 + cfg.num_states // 2,
        x0=complex(pts[i0]), x1=complex(pts[i1]),
    )


def _sparse_from_placed(cfg: SchemeConfig, placed: PlacedBatch, row: int) -> SparseCodeword:
    entries: dict[tuple[int, int], complex] = {}
    for t in range(placed.slots):
        pos_a = (int(placed.m_a[row, t]) + 1, t + 1)
        entries[pos_a] = entries.get(pos_a, 0j) + complex(placed.v_a[row, t])
        if placed.m_b[row, t] != placed.m_a[row, t]:
            pos_b = (int(placed.m_b[row, t]) + 1, t + 1)
            entries[pos_b] = entries.get(pos_b, 0j) + complex(placed.v_b[row, t])
        else:
            entries[pos_a] += complex(placed.v_b[row, t])
    ordered = tuple(
        (m, t, v) for (m, t), v in sorted(entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    )
    return SparseCodeword(num_realizations=cfg.num_realizations, entries=ordered)


def encode(cfg: SchemeConfig, bits) -> tuple[CodewordSelection, SparseCodeword]:
    """Map one block of 2*eta information bits to its codeword.

    Returns the decoded index state and the sparse transmission matrix.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (cfg.bits_per_codeword,):
        raise ValueError(f"expected {cfg.bits_per_codeword} bits, got shape {bits.shape}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bit block must contain only 0/1 values")
    placed = encode_batch(cfg, bits[None, :])
    return selection_from_bits(cfg, bits), _sparse_from_placed(cfg, placed, 0)


def decode_bits(cfg: SchemeConfig, sel: CodewordSelection) -> np.ndarray:
    """Inverse index/symbol demapping; exact inverse of `encode`."""
    nbps = cfg.constellation.bits_per_symbol
    i0, p0 = nearest_symbol(cfg.constellation, sel.x0)
    i1, p1 = nearest_symbol(cfg.constellation, sel.x1)
    if abs(p0 - sel.x0) > 1e-9 or abs(p1 - sel.x1) > 1e-9:
        raise ValueError("symbols are not constellation points")
    if cfg.scheme is Scheme.CIOD_MBM_1:
        na = _log2_int(cfg.nt // 2, "nt/2")
        if not (1 <= sel.k1 <= cfg.nt // 2) or sel.k2 != cfg.nt // 2 + sel.k1:
            raise ValueError(f"antenna indices ({sel.k1}, {sel.k2}) invalid for scheme 1")
        if not (1 <= sel.l1 <= cfg.num_states) or sel.l2 != sel.l1:
            raise ValueError(f"state indices ({sel.l1}, {sel.l2}) invalid for scheme 1")
        parts = [int_to_bits(sel.k1 - 1, na), int_to_bits(sel.l1 - 1, cfg.nrf)]
    else:
        nk = _log2_int(cfg.nt, "nt")
        half = cfg.num_states // 2
        if not (1 <= sel.l1 <= half) or sel.l2 != half + sel.l1:
            raise ValueError(f"state indices ({sel.l1}, {sel.l2}) invalid for scheme 2")
        if not (1 <= sel.k1 <= cfg.nt and 1 <= sel.k2 <= cfg.nt):
            raise ValueError(f"antenna indices ({sel.k1}, {sel.k2}) invalid for scheme 2")
        parts = [
            int_to_bits(sel.l1 - 1, cfg.nrf - 1),
            int_to_bits(sel.k1 - 1, nk),
            int_to_bits(sel.k2 - 1, nk),
        ]
    parts += [int_to_bits(i0, nbps), int_to_bits(i1, nbps)]
    return np.concatenate(parts)


def all_bit_blocks(cfg: SchemeConfig) -> np.ndarray:
    """All 2**(2*eta) bit blocks in ascending natural binary order, (K, 2*eta)."""
    n = cfg.bits_per_codeword
    if n > CODEBOOK_GUARD_BITS:
        raise ValueError(
            f"codebook of 2^{n} codewords exceeds the enumeration guard 2^{CODEBOOK_GUARD_BITS}"
        )
    values = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.int8)


def enumerate_codebook(cfg: SchemeConfig) -> list[tuple[np.ndarray, SparseCodeword]]:
    """Exhaustive (bit block, codeword) list in natural binary order."""
    bits = all_bit_blocks(cfg)
    placed = encode_batch(cfg, bits)
    return [(bits[i], _sparse_from_placed(cfg, placed, i)) for i in range(len(bits))]


def spectral_efficiency(cfg: SchemeConfig) -> float:
    """Information bits per channel use for the configured scheme."""
    return cfg.spectral_efficiency


@dataclass(frozen=True)
class PackedCodebook:
    """Array-packed exhaustive codebook used by vectorized detectors/analysis."""

    bits: np.ndarray
    placed: PlacedBatch
    num_realizations: int

    def __len__(self) -> int:
        return len(self.bits)

    def dense_columns(self) -> list[np.ndarray]:
        """Dense per-slot columns, one (K, num_realizations) array per slot."""
        k = len(self.bits)
        rows = np.arange(k)
        cols = []
        for t in range(self.placed.slots):
            c = np.zeros((k, self.num_realizations), dtype=complex)
            np.add.at(c, (rows, self.placed.m_a[:, t]), self.placed.v_a[:, t])
            np.add.at(c, (rows, self.placed.m_b[:, t]), self.placed.v_b[:, t])
            cols.append(c)
        return cols


@lru_cache(maxsize=16)
def packed_codebook(cfg: SchemeConfig) -> PackedCodebook:
    bits = all_bit_blocks(cfg)
    return PackedCodebook(
        bits=bits, placed=encode_batch(cfg, bits), num_realizations=cfg.num_realizations
    )
