"""Maximum-likelihood detection: exhaustive search and the reduced path.

The reduced path rewrites the two-slot model over the reals. With the
received matrix stacked as [Re slot1 | Im slot1 | Re slot2 | Im slot2] and
the symbol coordinates stacked as [x0_re, x0_im, x1_re, x1_im], the
equivalent channel splits into two mutually orthogonal 2-column blocks, so
the two symbols decouple and each candidate realization pair costs 2M
metrics instead of M^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import (
    CodewordSelection,
    Scheme,
    SchemeConfig,
    packed_codebook,
    selection_from_bits,
)

_BRUTE_CHUNK = 512


@dataclass(frozen=True)
class DetectionResult:
    """Decision for one received frame, with complexity accounting."""

    selection: CodewordSelection
    bits: np.ndarray
    metric: float
    metric_evals: int


@dataclass(frozen=True)
class EquivalentChannel:
    """Real-valued equivalent channel for one realization pair (1-based)."""

    heq: np.ndarray
    m1: int
    m2: int

    @property
    def h1(self) -> np.ndarray:
        """Columns multiplying [x0_re, x0_im]."""
        return self.heq[:, :2]

    @property
    def h2(self) -> np.ndarray:
        """Columns multiplying [x1_re, x1_im]."""
        return self.heq[:, 2:]


def stack_real_observation(y: np.ndarray) -> np.ndarray:
    """Stack an (nr, 2) complex observation into the 4*nr real vector."""
    return np.concatenate([y[:, 0].real, y[:, 0].imag, y[:, 1].real, y[:, 1].imag])


def equivalent_symbol_vector(x0: complex, x1: complex) -> np.ndarray:
    """Real coordinate stack [x0_re, x0_im, x1_re, x1_im]."""
    return np.array([x0.real, x0.imag, x1.real, x1.imag])


def build_equivalent(h: np.ndarray, m1: int, m2: int) -> EquivalentChannel:
    """Equivalent (4*nr, 4) real channel for realizations m1 (slot 1) and m2 (slot 2)."""
    nr, nm = h.shape
    for m in (m1, m2):
        if not 1 <= m <= nm:
            raise ValueError(f"realization index {m} out of range 1..{nm}")
    hm1 = h[:, m1 - 1]
    hm2 = h[:, m2 - 1]
    heq = np.zeros((4 * nr, 4))
    rows = np.arange(nr)
    # x0_re rides slot 1 through m1; x0_im rides slot 2 through m2
    heq[rows, 0] = hm1.real
    heq[nr + rows, 0] = hm1.imag
    heq[2 * nr + rows, 1] = -hm2.imag
    heq[3 * nr + rows, 1] = hm2.real
    # x1_re rides slot 2 through m2; x1_im rides slot 1 through m1
    heq[2 * nr + rows, 2] = hm2.real
    heq[3 * nr + rows, 2] = hm2.imag
    heq[rows, 3] = -hm1.imag
    heq[nr + rows, 3] = hm1.real
    heq.setflags(write=False)
    return EquivalentChannel(heq=heq, m1=m1, m2=m2)


def _ints_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.int8)


def _as_batch(y: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if y.ndim == 2:
        y = y[None]
    if h.ndim == 2:
        h = h[None]
    if y.shape[0] != h.shape[0] or y.shape[1] != h.shape[1]:
        raise ValueError(f"observation batch {y.shape} does not match channel batch {h.shape}")
    return y, h


def brute_force_ml_batch(
    cfg: SchemeConfig, y: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Exhaustive ML over the full codebook for a batch of frames.

    Args:
        y: received frames, (B, nr, 2) complex.
        h: channel matrices, (B, nr, num_realizations) complex.

    Returns:
        (decided bit blocks (B, 2*eta), residual metrics (B,), metric
        evaluations per frame). Metric ties resolve to the lowest bit block.
    """
    y, h = _as_batch(y, h)
    pk = packed_codebook(cfg)
    placed = pk.placed
    nframes = len(y)
    best = np.full(nframes, np.inf)
    best_idx = np.zeros(nframes, dtype=np.int64)
    for start in range(0, len(pk), _BRUTE_CHUNK):
        end = min(start + _BRUTE_CHUNK, len(pk))
        d = np.zeros((nframes, end - start))
        for t in range(placed.slots):
            hx = (
                h[:, :, placed.m_a[start:end, t]] * placed.v_a[start:end, t]
                + h[:, :, placed.m_b[start:end, t]] * placed.v_b[start:end, t]
            )
            diff = y[:, :, t, None] - hx
            d += np.sum(diff.real**2 + diff.imag**2, axis=1)
        local = np.argmin(d, axis=1)
        local_val = d[np.arange(nframes), local]
        better = local_val < best
        best_idx[better] = local[better] + start
        best[better] = local_val[better]
    return pk.bits[best_idx].copy(), best, len(pk)


def brute_force_ml(cfg: SchemeConfig, y: np.ndarray, h: np.ndarray) -> DetectionResult:
    """Exhaustive ML detection of a single frame."""
    bits, metrics, evals = brute_force_ml_batch(cfg, y, h)
    return DetectionResult(
        selection=selection_from_bits(cfg, bits[0]),
        bits=bits[0],
        metric=float(metrics[0]),
        metric_evals=evals,
    )


def _component_minima(a_re, b_im, g_re, g_im, points):
    """Minimum of g_re*p_re^2 + g_im*p_im^2 - 2(a_re*p_re + b_im*p_im) over points.

    All candidate arrays are (B, C); returns ((B, C) minima, (B, C) argmin).
    """
    p_re = points.real
    p_im = points.imag
    d = (
        g_re[..., None] * p_re**2
        + g_im[..., None] * p_im**2
        - 2.0 * (a_re[..., None] * p_re + b_im[..., None] * p_im)
    )
    idx = np.argmin(d, axis=-1)
    return np.take_along_axis(d, idx[..., None], axis=-1)[..., 0], idx


def fast_ml_scheme1_batch(
    cfg: SchemeConfig, y: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Reduced-complexity ML for scheme 1 frames; decisions match brute force.

    Per candidate (antenna, state) pair the two symbols are detected
    independently through the orthogonal halves of the equivalent channel,
    for 2M metric evaluations per candidate instead of M^2.
    """
    if cfg.scheme is not Scheme.CIOD_MBM_1:
        raise ValueError("the reduced detector supports scheme 1 only")
    y, h = _as_batch(y, h)
    pts = cfg.constellation.points
    m = cfg.constellation.order
    ncand = (cfg.nt // 2) * cfg.num_states  # slot-1 realizations, bit order

    z1 = np.einsum("brm,br->bm", h.conj(), y[:, :, 0])
    z2 = np.einsum("brm,br->bm", h.conj(), y[:, :, 1])
    gains = np.sum(h.real**2 + h.imag**2, axis=1)
    g1, g2 = gains[:, :ncand], gains[:, ncand:]

    # x0 couples (slot 1, m1) on its real part and (slot 2, m2) on its imaginary part
    d0, i0 = _component_minima(z1[:, :ncand].real, z2[:, ncand:].imag, g1, g2, pts)
    # x1 couples (slot 2, m2) on its real part and (slot 1, m1) on its imaginary part
    d1, i1 = _component_minima(z2[:, ncand:].real, z1[:, :ncand].imag, g2, g1, pts)

    total = d0 + d1
    cand = np.argmin(total, axis=1)
    rows = np.arange(len(y))
    energy = np.sum(y.real**2 + y.imag**2, axis=(1, 2))
    metrics = total[rows, cand] + energy

    nbps = cfg.constellation.bits_per_symbol
    bits = np.concatenate(
        [
            _ints_to_bits(cand, cfg.index_bits),
            _ints_to_bits(i0[rows, cand], nbps),
            _ints_to_bits(i1[rows, cand], nbps),
        ],
        axis=1,
    )
    return bits, metrics, ncand * 2 * m


def fast_ml_scheme1(cfg: SchemeConfig, y: np.ndarray, h: np.ndarray) -> DetectionResult:
    """Reduced-complexity ML detection of a single scheme 1 frame."""
    bits, metrics, evals = fast_ml_scheme1_batch(cfg, y, h)
    return DetectionResult(
        selection=selection_from_bits(cfg, bits[0]),
        bits=bits[0],
        metric=float(metrics[0]),
        metric_evals=evals,
    )
