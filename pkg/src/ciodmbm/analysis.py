"""Distance spectra, rotation-angle optimization and union-bound error rates.

For two-slot codewords the difference matrix D = X - X' has rank at most
two, so its nonzero eigenvalue spectrum equals that of the 2x2 Gram D^H D.
All pairwise computations work on that Gram, never on the large outer
product.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constellation import build_rotated
from .encoder import (
    SchemeConfig,
    SparseCodeword,
    all_bit_blocks,
    encode_batch,
)

RANK_TOL = 1e-9
_DUP_TOL = 1e-12
_ABEP_WARN_BITS = 14
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PairDistance:
    """Nonzero spectrum of one codeword-pair difference."""

    eigenvalues: tuple[float, float]
    determinant: float
    rank: int


@dataclass(frozen=True)
class RotationSearch:
    """Result of a rotation-angle sweep."""

    theta_deg: float
    delta_min: float
    grid_theta: np.ndarray
    grid_delta: np.ndarray


def _dense_pair_columns(codebook) -> list[np.ndarray]:
    """Stack a codebook into per-slot dense columns, one (K, num_realizations) per slot."""
    codewords = [cw[1] if isinstance(cw, tuple) else cw for cw in codebook]
    if not codewords:
        raise ValueError("empty codebook")
    nm = codewords[0].num_realizations
    slots = codewords[0].num_slots
    k = len(codewords)
    cols = [np.zeros((k, nm), dtype=complex) for _ in range(slots)]
    for i, cw in enumerate(codewords):
        dense = cw.dense()
        for t in range(slots):
            cols[t][i] = dense[:, t]
    return cols


def _gram_eigenvalues(g11, g22, g12_abs2):
    """Eigenvalues of [[g11, g12], [conj(g12), g22]], largest first."""
    tr = g11 + g22
    disc = np.sqrt(np.maximum((g11 - g22) ** 2 + 4.0 * g12_abs2, 0.0))
    lam1 = 0.5 * (tr + disc)
    lam2 = np.maximum(0.5 * (tr - disc), 0.0)
    return lam1, lam2


def pair_distance(x, x_hat, rank_tol: float = RANK_TOL) -> PairDistance:
    """Distance spectrum of a single codeword pair."""
    if isinstance(x, SparseCodeword):
        x = x.dense()
    if isinstance(x_hat, SparseCodeword):
        x_hat = x_hat.dense()
    d = np.asarray(x, dtype=complex) - np.asarray(x_hat, dtype=complex)
    if d.ndim == 1:
        d = d[:, None]
    g11 = float(np.sum(np.abs(d[:, 0]) ** 2))
    if d.shape[1] == 1:
        lam1, lam2 = g11, 0.0
    else:
        g22 = float(np.sum(np.abs(d[:, 1]) ** 2))
        g12 = complex(np.vdot(d[:, 0], d[:, 1]))
        lam1, lam2 = _gram_eigenvalues(g11, g22, abs(g12) ** 2)
        lam1, lam2 = float(lam1), float(lam2)
    rank = int(lam1 > rank_tol) + int(lam2 > rank_tol)
    return PairDistance(eigenvalues=(lam1, lam2), determinant=lam1 * lam2, rank=rank)


def _pairwise_dist2(ra: np.ndarray, rb: np.ndarray, na: np.ndarray, nb: np.ndarray) -> np.ndarray:
    d = na[:, None] + nb[None, :] - 2.0 * (ra @ rb.T)
    np.maximum(d, 0.0, out=d)
    return d


def _slot_supports_disjoint(c1: np.ndarray, c2: np.ndarray) -> bool:
    used1 = np.any(c1 != 0, axis=0)
    used2 = np.any(c2 != 0, axis=0)
    return not np.any(used1 & used2)


def coding_gain_distance(codebook) -> float:
    """Minimum pairwise Gram determinant over the codebook.

    Zero whenever some pair is rank deficient (a shared real or imaginary
    coordinate). Value-identical codewords under distinct labels contribute
    zero as well; a codebook with fewer than two distinct codewords is
    rejected.
    """
    cols = _dense_pair_columns(codebook)
    if len(cols) != 2:
        raise ValueError("coding gain distance is defined for two-slot codebooks")
    c1, c2 = cols
    if len(c1) < 2:
        raise ValueError("coding gain distance needs at least two codewords")
    r1 = np.hstack([c1.real, c1.imag])
    r2 = np.hstack([c2.real, c2.imag])
    n1 = np.einsum("ij,ij->i", r1, r1)
    n2 = np.einsum("ij,ij->i", r2, r2)
    cross = None if _slot_supports_disjoint(c1, c2) else np.conj(c1) @ c2.T

    k = len(c1)
    diag = np.einsum("ii->i", cross) if cross is not None else None
    best = np.inf
    any_duplicate = False
    block = 256
    for s in range(0, k, block):
        e = min(s + block, k)
        d1 = _pairwise_dist2(r1[s:e], r1, n1[s:e], n1)
        d2 = _pairwise_dist2(r2[s:e], r2, n2[s:e], n2)
        det = d1 * d2
        if cross is not None:
            g12 = diag[s:e, None] - cross[s:e, :] - cross[:, s:e].T + diag[None, :]
            det -= np.abs(g12) ** 2
            np.maximum(det, 0.0, out=det)
        self_pair = np.zeros((e - s, k), dtype=bool)
        self_pair[np.arange(e - s), np.arange(s, e)] = True
        same_value = (d1 < _DUP_TOL) & (d2 < _DUP_TOL)
        any_duplicate |= bool(np.any(same_value & ~self_pair))
        det[same_value | self_pair] = np.inf
        best = min(best, float(det.min()))
    if not np.isfinite(best):
        raise ValueError("codebook has fewer than two distinct codewords")
    if any_duplicate or best < RANK_TOL:
        return 0.0
    return best


def _min_cross_det(ra1, ra2, rb1, rb2, na1, na2, nb1, nb2, self_index) -> float:
    """Minimum product distance between row sets A and B, skipping A's own copies."""
    best = np.inf
    block = 256
    for s in range(0, len(ra1), block):
        e = min(s + block, len(ra1))
        d1 = _pairwise_dist2(ra1[s:e], rb1, na1[s:e], nb1)
        d2 = _pairwise_dist2(ra2[s:e], rb2, na2[s:e], nb2)
        det = d1 * d2
        det[np.arange(e - s), self_index[s:e]] = np.inf
        best = min(best, float(det.min()))
    return best


def _codebook_real_rows(cfg: SchemeConfig, blocks: np.ndarray):
    """Dense per-slot rows of the codewords selected by `blocks` bit rows."""
    placed = encode_batch(cfg, blocks)
    k = len(blocks)
    rows = np.arange(k)
    out = []
    for t in range(2):
        c = np.zeros((k, cfg.num_realizations), dtype=complex)
        np.add.at(c, (rows, placed.m_a[:, t]), placed.v_a[:, t])
        np.add.at(c, (rows, placed.m_b[:, t]), placed.v_b[:, t])
        out.append(np.hstack([c.real, c.imag]))
    return out[0], out[1]


def _scheme_delta_evaluator(cfg: SchemeConfig):
    """Exact delta_min evaluator exploiting index-relabeling symmetry.

    Permuting antenna labels (jointly with their paired group or partner
    antenna) and permuting mirror states (jointly with the paired state
    group) maps the codebook onto itself and leaves every pairwise Gram
    unchanged, so one codeword of each pair can be pinned to canonical
    index fields.
    """
    from .encoder import Scheme

    m2 = cfg.constellation.order ** 2
    if cfg.scheme is Scheme.CIOD_MBM_1:
        rep_index_fields = [0]
    else:
        rep_index_fields = [0, 1] if cfg.nt > 1 else [0]
    rep_values = np.concatenate([f * m2 + np.arange(m2) for f in rep_index_fields])

    nbits = cfg.bits_per_codeword
    shifts = np.arange(nbits - 1, -1, -1)
    rep_blocks = ((rep_values[:, None] >> shifts) & 1).astype(np.int8)
    full_blocks = all_bit_blocks(cfg)

    def evaluate(theta_deg: float) -> float:
        const = build_rotated(cfg.constellation.kind, cfg.constellation.order, theta_deg)
        rotated = dataclasses.replace(cfg, constellation=const)
        ra1, ra2 = _codebook_real_rows(rotated, rep_blocks)
        rb1, rb2 = _codebook_real_rows(rotated, full_blocks)
        na1 = np.einsum("ij,ij->i", ra1, ra1)
        na2 = np.einsum("ij,ij->i", ra2, ra2)
        nb1 = np.einsum("ij,ij->i", rb1, rb1)
        nb2 = np.einsum("ij,ij->i", rb2, rb2)
        value = _min_cross_det(ra1, ra2, rb1, rb2, na1, na2, nb1, nb2, rep_values)
        return 0.0 if value < RANK_TOL else value

    return evaluate


def _baseline_delta_evaluator(cfg):
    from .baselines import CIOD, ciod_codebook

    if cfg.kind != CIOD:
        raise ValueError("rotation optimization applies to two-slot codebooks only")

    def evaluate(theta_deg: float) -> float:
        const = build_rotated(cfg.constellation.kind, cfg.constellation.order, theta_deg)
        rotated = dataclasses.replace(cfg, constellation=const)
        try:
            return coding_gain_distance([cw for _, cw in ciod_codebook(rotated)])
        except ValueError:
            return 0.0

    return evaluate


def _golden_max(fn, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_rotation(cfg, grid=None, tol_deg: float = 1e-3) -> RotationSearch:
    """Rotation angle maximizing the codebook's coding gain distance.

    Sweeps a coarse grid over (0, 90) degrees, then refines every
    competitive local maximum by golden-section search. Mirror-symmetric
    optima are resolved to the smallest angle.
    """
    if grid is None:
        grid = np.arange(0.1, 90.0, 0.1)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("rotation grid must contain at least three angles")

    if isinstance(cfg, SchemeConfig):
        evaluate = _scheme_delta_evaluator(cfg)
    else:
        evaluate = _baseline_delta_evaluator(cfg)

    values = np.array([evaluate(t) for t in grid])
    vmax = float(values.max())
    if vmax <= 0.0:
        raise ValueError("no rotation on the grid achieves full diversity")

    # refine every local maximum close to the best; ties resolve to the smallest angle
    interior = (values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:])
    candidates = np.flatnonzero(interior) + 1
    candidates = [i for i in candidates if values[i] >= 0.9 * vmax]
    if not candidates:
        candidates = [int(values.argmax())]

    refined: list[tuple[float, float]] = []
    for i in candidates:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        theta, delta = _golden_max(evaluate, lo, hi, tol_deg)
        refined.append((theta, delta))

    best_delta = max(d for _, d in refined)
    theta_star = min(t for t, d in refined if d >= best_delta * (1.0 - 1e-9))
    return RotationSearch(
        theta_deg=float(theta_star),
        delta_min=float(evaluate(theta_star)),
        grid_theta=grid,
        grid_delta=values,
    )


@lru_cache(maxsize=8)
def _quadrature_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    theta = (x + 1.0) * (np.pi / 4.0)
    return np.sin(theta) ** 2, w * (np.pi / 4.0)


def pep_from_eigenvalues(lams, n0: float, nr: int, order: int = 64) -> np.ndarray:
    """Channel-averaged pairwise error probability from difference eigenvalues.

    Evaluates (1/pi) * int_0^{pi/2} prod_d (sin^2 t / (sin^2 t + lam_d/(4 n0)))^nr dt
    by fixed-order Gauss-Legendre quadrature; zero eigenvalues contribute
    factors of one.
    """
    lams = np.maximum(np.asarray(lams, dtype=float), 0.0)
    if lams.shape[-1] != 2:
        raise ValueError("expected eigenvalue pairs in the last axis")
    s2, w = _quadrature_nodes(order)
    c = lams / (4.0 * n0)
    integrand = (s2 / (s2 + c[..., 0, None])) ** nr * (s2 / (s2 + c[..., 1, None])) ** nr
    return integrand @ w / np.pi


def pep(x, x_hat, n0: float, nr: int, order: int = 64) -> float:
    """Unconditional pairwise error probability of mistaking x for x_hat."""
    dist = pair_distance(x, x_hat)
    if dist.rank == 0:
        raise ValueError("pairwise error probability is undefined for identical codewords")
    return float(pep_from_eigenvalues(np.array(dist.eigenvalues), n0, nr, order))


def _pair_spectrum(codebook) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue pairs and bit-error weights for all unordered codeword pairs."""
    bits = np.stack([b for b, _ in codebook]).astype(np.int8)
    cols = _dense_pair_columns(codebook)
    c1 = cols[0]
    c2 = cols[1] if len(cols) == 2 else None
    r1 = np.hstack([c1.real, c1.imag])
    n1 = np.einsum("ij,ij->i", r1, r1)
    if c2 is not None:
        r2 = np.hstack([c2.real, c2.imag])
        n2 = np.einsum("ij,ij->i", r2, r2)
        cross = None if _slot_supports_disjoint(c1, c2) else np.conj(c1) @ c2.T
        diag = np.einsum("ii->i", cross) if cross is not None else None

    k = len(c1)
    lam_parts = []
    err_parts = []
    block = 256
    for s in range(0, k - 1, block):
        e = min(s + block, k - 1)
        g11 = _pairwise_dist2(r1[s:e], r1, n1[s:e], n1)
        if c2 is None:
            g22 = np.zeros_like(g11)
            g12_abs2 = np.zeros_like(g11)
        else:
            g22 = _pairwise_dist2(r2[s:e], r2, n2[s:e], n2)
            if cross is None:
                g12_abs2 = np.zeros_like(g11)
            else:
                g12 = diag[s:e, None] - cross[s:e, :] - cross[:, s:e].T + diag[None, :]
                g12_abs2 = np.abs(g12) ** 2
        ham = np.sum(bits[s:e, None, :] != bits[None, :, :], axis=2).astype(float)
        upper = np.arange(s, e)[:, None] < np.arange(k)[None, :]
        lam1, lam2 = _gram_eigenvalues(g11[upper], g22[upper], g12_abs2[upper])
        lam_parts.append(np.stack([lam1, lam2], axis=1))
        err_parts.append(ham[upper])
    return np.concatenate(lam_parts), np.concatenate(err_parts)


def abep(cfg, codebook, n0: float, nr: int) -> float:
    """Union-bound average bit error probability, clamped to 0.5."""
    return float(abep_curve(cfg, codebook, np.array([n0]), nr)[0])


def abep_curve(cfg, codebook, n0s, nr: int) -> np.ndarray:
    """Union-bound ABEP for several noise levels, reusing the pair spectrum.

    `codebook` is a list of (bits, codeword) pairs as produced by
    `enumerate_codebook`; pass None to enumerate from `cfg`.
    """
    if codebook is None:
        from .encoder import enumerate_codebook

        codebook = enumerate_codebook(cfg)
    nbits = len(codebook[0][0])
    if nbits > _ABEP_WARN_BITS:
        warnings.warn(
            f"union bound over 2^{nbits} codewords is expensive", RuntimeWarning, stacklevel=2
        )
    lams, errs = _pair_spectrum(codebook)
    k = len(codebook)
    n0s = np.asarray(n0s, dtype=float)
    out = np.empty(len(n0s))
    scale = 2.0 / (nbits * k)  # unordered pairs counted twice
    chunk = 1 << 16
    for i, n0 in enumerate(n0s):
        total = 0.0
        for s in range(0, len(lams), chunk):
            e = min(s + chunk, len(lams))
            total += float(pep_from_eigenvalues(lams[s:e], n0, nr) @ errs[s:e])
        out[i] = min(scale * total, 0.5)
    return out
