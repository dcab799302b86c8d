"""Rayleigh channel realizations, noise calibration and reproducible streams.

Randomness is counter-based: a Philox generator keyed by (seed, labels...)
exposes fixed-size per-frame windows of uniforms, so any frame's draws are a
pure function of (seed, labels, frame index) regardless of batching or
worker scheduling. Gaussians are produced by inverse-CDF transformation to
keep the per-frame consumption fixed.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import ndtri

from .encoder import SchemeConfig, SparseCodeword

_TINY_UNIFORM = 2.0 ** -54


def stream(seed: int, *labels: int) -> Generator:
    """Independent generator for a (seed, labels...) identifier path."""
    return Generator(Philox(SeedSequence((seed,) + labels)))


def _philox_key(seed: int, labels: tuple[int, ...]) -> int:
    words = SeedSequence((seed,) + labels).generate_state(2, np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


class CounterStream:
    """Frame-addressable uniform/normal source backed by a keyed Philox counter.

    Each frame owns `values_per_frame` uniforms (rounded up to a multiple of
    four so frames align with Philox counter blocks).
    """

    def __init__(self, seed: int, labels: tuple[int, ...], values_per_frame: int):
        self._key = _philox_key(seed, labels)
        self._vpf = -(-values_per_frame // 4) * 4

    @property
    def values_per_frame(self) -> int:
        return self._vpf

    def uniforms(self, first_frame: int, n_frames: int) -> np.ndarray:
        """Uniform(0, 1) draws for frames [first_frame, first_frame + n_frames)."""
        bg = Philox(key=self._key, counter=first_frame * self._vpf // 4)
        u = Generator(bg).random(n_frames * self._vpf)
        # random() can emit exactly 0, which the inverse normal CDF rejects
        np.maximum(u, _TINY_UNIFORM, out=u)
        return u.reshape(n_frames, self._vpf)

    def normals(self, first_frame: int, n_frames: int) -> np.ndarray:
        """Standard normal draws, same addressing as `uniforms`."""
        return ndtri(self.uniforms(first_frame, n_frames))


def draw_channel(cfg: SchemeConfig, rng: Generator) -> np.ndarray:
    """One quasi-static channel matrix, entries i.i.d. CN(0, 1).

    Shape (nr, nt * 2**nrf); column m is the fade vector of realization m.
    """
    shape = (cfg.nr, cfg.num_realizations)
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit(h: np.ndarray, x, n0: float, rng: Generator) -> np.ndarray:
    """Propagate a codeword: Y = H X + N with N entries i.i.d. CN(0, n0)."""
    if isinstance(x, SparseCodeword):
        x = x.dense()
    x = np.asarray(x)
    if h.shape[1] != x.shape[0]:
        raise ValueError(f"channel has {h.shape[1]} realizations but codeword has {x.shape[0]}")
    y = h @ x
    if n0 > 0:
        y = y + np.sqrt(n0 / 2) * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        )
    return y


def n0_from_ebn0(cfg, ebn0_db: float) -> float:
    """Noise spectral density for a target Eb/N0 in dB.

    The mean codeword energy is one unit per slot, so Eb = 1 / eta with eta
    the spectral efficiency of `cfg` (scheme or baseline config).
    """
    eta = cfg.spectral_efficiency
    if eta <= 0:
        raise ValueError(f"spectral efficiency must be positive, got {eta}")
    eb = 1.0 / eta
    return eb * 10.0 ** (-ebn0_db / 10.0)


def ebn0_from_n0(cfg, n0: float) -> float:
    """Inverse of `n0_from_ebn0`."""
    if n0 <= 0:
        raise ValueError(f"n0 must be positive, got {n0}")
    return -10.0 * np.log10(n0 * cfg.spectral_efficiency)
