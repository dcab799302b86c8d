import numpy as np
import pytest

from ciodmbm import build_rotated, stream
from ciodmbm.baselines import (
    BaselineConfig,
    baseline_codebook,
    ciod_detect,
    ciod_detect_batch,
    ciod_encode,
    mbm_detect,
    mbm_detect_batch,
    mbm_encode,
)
from ciodmbm.constellation import int_to_bits


def mbm_cfg(nrf=2, m=4, nr=2):
    return BaselineConfig("mbm", nrf, nr, build_rotated("psk", m, 0.0))


def ciod_cfg(m=16, theta=8.5, nr=2, kind="qam"):
    return BaselineConfig("ciod", 0, nr, build_rotated(kind, m, theta))


def test_rates():
    assert mbm_cfg(nrf=2, m=4).spectral_efficiency == 4.0
    assert ciod_cfg(m=16).spectral_efficiency == 4.0
    assert mbm_cfg(nrf=3, m=2).bits_per_frame == 4


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig("mbm", 0, 2, build_rotated("psk", 4, 0.0))
    with pytest.raises(ValueError):
        BaselineConfig("ciod", 1, 2, build_rotated("psk", 4, 0.0))
    with pytest.raises(ValueError):
        BaselineConfig("other", 1, 2, build_rotated("psk", 4, 0.0))


def test_mbm_noiseless_round_trip_all_blocks():
    cfg = mbm_cfg()
    rng = stream(31, 0)
    h = np.sqrt(0.5) * (
        rng.standard_normal((cfg.nr, cfg.num_realizations))
        + 1j * rng.standard_normal((cfg.nr, cfg.num_realizations))
    )
    for v in range(1 << cfg.bits_per_frame):
        bits = int_to_bits(v, cfg.bits_per_frame)
        cw = mbm_encode(cfg, bits)
        y = h @ cw.dense()
        assert mbm_detect(cfg, y, h).tolist() == bits.tolist()


def test_mbm_hypothesis_count():
    cfg = mbm_cfg()
    _, _, evals = mbm_detect_batch(
        cfg, np.zeros((1, 2, 1), complex), np.ones((1, 2, 4), complex)
    )
    assert evals == cfg.num_realizations * 4 == 16


def test_mbm_detect_matches_direct_residual_oracle():
    cfg = mbm_cfg()
    rng = stream(32, 0)
    book = baseline_codebook(cfg)
    for _ in range(300):
        h = np.sqrt(0.5) * (
            rng.standard_normal((cfg.nr, cfg.num_realizations))
            + 1j * rng.standard_normal((cfg.nr, cfg.num_realizations))
        )
        v = int(rng.integers(0, len(book)))
        y = h @ book[v][1].dense()
        y = y + 0.2 * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        metrics = [np.sum(np.abs(y - h @ cw.dense()) ** 2) for _, cw in book]
        expected = book[int(np.argmin(metrics))][0]
        assert mbm_detect(cfg, y, h).tolist() == expected.tolist()


def test_ciod_noiseless_round_trip_all_blocks():
    cfg = ciod_cfg()
    rng = stream(33, 0)
    h = np.sqrt(0.5) * (
        rng.standard_normal((cfg.nr, 2)) + 1j * rng.standard_normal((cfg.nr, 2))
    )
    for v in range(1 << cfg.bits_per_frame):
        bits = int_to_bits(v, cfg.bits_per_frame)
        cw = ciod_encode(cfg, bits)
        y = h @ cw.dense()
        assert ciod_detect(cfg, y, h).tolist() == bits.tolist()


def test_ciod_codeword_is_interleaved_diagonal():
    cfg = ciod_cfg(m=4, theta=30.0, kind="psk")
    cw = ciod_encode(cfg, [0, 1, 1, 1])
    x0 = cfg.constellation.points[1]
    x1 = cfg.constellation.points[3]
    dense = cw.dense()
    assert dense[0, 0] == pytest.approx(complex(x0.real, x1.imag))
    assert dense[1, 1] == pytest.approx(complex(x1.real, x0.imag))
    assert dense[0, 1] == dense[1, 0] == 0


def test_ciod_detect_matches_brute_force_oracle():
    cfg = ciod_cfg(m=4, theta=13.2885, kind="psk")
    rng = stream(34, 0)
    book = baseline_codebook(cfg)
    mismatches = 0
    for _ in range(500):
        h = np.sqrt(0.5) * (
            rng.standard_normal((cfg.nr, 2)) + 1j * rng.standard_normal((cfg.nr, 2))
        )
        v = int(rng.integers(0, len(book)))
        y = h @ book[v][1].dense()
        y = y + 0.3 * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        metrics = [np.sum(np.abs(y - h @ cw.dense()) ** 2) for _, cw in book]
        expected = book[int(np.argmin(metrics))][0]
        mismatches += ciod_detect(cfg, y, h).tolist() != expected.tolist()
    assert mismatches == 0


def test_ciod_hypothesis_count():
    cfg = ciod_cfg(m=16)
    _, _, evals = ciod_detect_batch(
        cfg, np.zeros((1, 2, 2), complex), np.ones((1, 2, 2), complex)
    )
    assert evals == 32  # 2M, symbol-by-symbol


def test_codebook_sizes():
    assert len(baseline_codebook(mbm_cfg())) == 16
    assert len(baseline_codebook(ciod_cfg())) == 256
