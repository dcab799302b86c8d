"""Rotated PSK/QAM alphabets and bit-group <-> symbol mapping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PSK = "psk"
QAM = "qam"

MAX_ORDER = 1 << 16


def bits_to_int(bits) -> int:
    """Natural binary value of a bit group, MSB first."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Natural binary representation of `value`, MSB first."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.int8)


@dataclass(frozen=True)
class RotatedConstellation:
    """M-ary alphabet rotated by a fixed angle, normalized to unit average energy.

    Point i carries the natural binary value of its bit group, i.e.
    ``points[0b11]`` is the symbol for bits ``[1, 1]``. Instances are
    immutable and safe to share between workers.
    """

    kind: str
    order: int
    rotation_deg: float
    points: np.ndarray = field(compare=False, repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1


def _base_points(kind: str, order: int) -> np.ndarray:
    if kind == PSK:
        return np.exp(2j * np.pi * np.arange(order) / order)
    if kind == QAM:
        # Square grid for even bit counts, 2:1 rectangular grid otherwise.
        # Index runs over imaginary levels fastest within each real column.
        nbits = order.bit_length() - 1
        side_re = 1 << ((nbits + 1) // 2)
        side_im = 1 << (nbits // 2)
        re_levels = 2.0 * np.arange(side_re) - (side_re - 1)
        im_levels = 2.0 * np.arange(side_im) - (side_im - 1)
        idx = np.arange(order)
        pts = re_levels[idx // side_im] + 1j * im_levels[idx % side_im]
        return pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    raise ValueError(f"unknown constellation kind {kind!r}")


def build_rotated(kind: str, order: int, rotation_deg: float) -> RotatedConstellation:
    """Build a rotated M-ary alphabet.

    Args:
        kind: ``"psk"`` or ``"qam"``.
        order: constellation size M, a power of two with 2 <= M <= 2**16.
        rotation_deg: rotation angle applied to every point, in degrees.
    """
    if order < 2 or order & (order - 1):
        raise ValueError(f"constellation order must be a power of two >= 2, got {order}")
    if order > MAX_ORDER:
        raise ValueError(f"constellation order {order} exceeds the supported maximum {MAX_ORDER}")
    points = _base_points(kind, order)
    if rotation_deg != 0.0:
        points = points * np.exp(1j * np.deg2rad(rotation_deg))
    points.setflags(write=False)
    return RotatedConstellation(kind=kind, order=order, rotation_deg=float(rotation_deg), points=points)


def symbol_from_bits(constellation: RotatedConstellation, bits) -> complex:
    """Map a bit group to its symbol via the natural binary index."""
    bits = np.asarray(bits)
    if bits.shape != (constellation.bits_per_symbol,):
        raise ValueError(
            f"expected {constellation.bits_per_symbol} bits, got shape {bits.shape}"
        )
    return complex(constellation.points[bits_to_int(bits)])


def nearest_symbol(constellation: RotatedConstellation, value: complex) -> tuple[int, complex]:
    """Closest point by squared Euclidean distance; ties go to the lowest index."""
    d2 = np.abs(constellation.points - value) ** 2
    index = int(np.argmin(d2))
    return index, complex(constellation.points[index])
