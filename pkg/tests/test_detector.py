import numpy as np
import pytest

from ciodmbm import (
    Scheme,
    SchemeConfig,
    brute_force_ml,
    build_equivalent,
    build_rotated,
    draw_channel,
    encode,
    fast_ml_scheme1,
    n0_from_ebn0,
    stack_real_observation,
    stream,
    transmit,
)
from ciodmbm.constellation import int_to_bits
from ciodmbm.detector import (
    brute_force_ml_batch,
    equivalent_symbol_vector,
    fast_ml_scheme1_batch,
)
from ciodmbm.encoder import all_bit_blocks, encode_batch


def cfg1(nt=4, nrf=1, m=4, theta=13.2885, nr=2):
    return SchemeConfig(Scheme.CIOD_MBM_1, nt, nrf, nr, build_rotated("psk", m, theta))


def cfg2(nt=2, nrf=2, m=4, theta=30.0, nr=2):
    return SchemeConfig(Scheme.CIOD_MBM_2, nt, nrf, nr, build_rotated("psk", m, theta))


def scheme1_matrix(x0, x1, m1, m2, nm):
    x = np.zeros((nm, 2), dtype=complex)
    x[m1 - 1, 0] = complex(x0.real, x1.imag)
    x[m2 - 1, 1] = complex(x1.real, x0.imag)
    return x


def test_equivalent_channel_hand_example():
    h = np.array([[1.0 + 0j, 1j]])
    eq = build_equivalent(h, 1, 2)
    expected = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    assert np.array_equal(eq.heq, expected)


def test_equivalent_channel_orthogonality_random():
    rng = stream(3, 0)
    cfg = cfg1(nr=3)
    worst = 0.0
    for _ in range(200):
        h = draw_channel(cfg, rng)
        m1, m2 = rng.integers(1, cfg.num_realizations + 1, size=2)
        eq = build_equivalent(h, int(m1), int(m2))
        worst = max(worst, float(np.max(np.abs(eq.h1.T @ eq.h2))))
    assert worst < 1e-12


def test_equivalent_channel_consistency_with_full_model():
    rng = stream(4, 0)
    cfg = cfg1(nr=2)
    pts = cfg.constellation.points
    for _ in range(200):
        h = draw_channel(cfg, rng)
        m1 = int(rng.integers(1, 5))
        m2 = int(rng.integers(5, 9))
        x0, x1 = rng.choice(pts), rng.choice(pts)
        eq = build_equivalent(h, m1, m2)
        x = scheme1_matrix(x0, x1, m1, m2, cfg.num_realizations)
        lhs = eq.heq @ equivalent_symbol_vector(x0, x1)
        rhs = stack_real_observation(h @ x)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_stacking_isometry():
    rng = stream(5, 0)
    cfg = cfg1()
    for _ in range(50):
        h = draw_channel(cfg, rng)
        _, cw = encode(cfg, (rng.random(6) < 0.5).astype(int))
        y = transmit(h, cw, 0.3, rng)
        yeq = stack_real_observation(y)
        assert np.sum(yeq**2) == pytest.approx(np.sum(np.abs(y) ** 2), rel=1e-12)


def test_build_equivalent_rejects_bad_indices():
    h = np.zeros((2, 8), dtype=complex)
    with pytest.raises(ValueError):
        build_equivalent(h, 0, 3)
    with pytest.raises(ValueError):
        build_equivalent(h, 1, 9)


@pytest.mark.parametrize("make_cfg", [cfg1, cfg2])
def test_noiseless_round_trip_brute_force(make_cfg):
    cfg = make_cfg()
    rng = stream(6, 0)
    for value in range(0, 1 << cfg.bits_per_codeword, 7):
        bits = int_to_bits(value, cfg.bits_per_codeword)
        _, cw = encode(cfg, bits)
        h = draw_channel(cfg, rng)
        y = transmit(h, cw, 0.0, rng)
        res = brute_force_ml(cfg, y, h)
        assert res.bits.tolist() == bits.tolist()
        assert res.metric == pytest.approx(0.0, abs=1e-18)


def test_noiseless_round_trip_fast_path():
    cfg = cfg1()
    rng = stream(7, 0)
    for value in range(64):
        bits = int_to_bits(value, 6)
        _, cw = encode(cfg, bits)
        h = draw_channel(cfg, rng)
        y = transmit(h, cw, 0.0, rng)
        res = fast_ml_scheme1(cfg, y, h)
        assert res.bits.tolist() == bits.tolist()
        assert res.metric == pytest.approx(0.0, abs=1e-10)


def test_fast_path_rejects_scheme2():
    cfg = cfg2()
    with pytest.raises(ValueError):
        fast_ml_scheme1(cfg, np.zeros((2, 2), complex), np.zeros((2, 8), complex))


def test_metric_counts():
    cfg_a = cfg1()  # index bits 2, M=4
    res = brute_force_ml(cfg_a, np.zeros((2, 2), complex), np.ones((2, 8), complex))
    assert res.metric_evals == (1 << cfg_a.index_bits) * 16
    res = fast_ml_scheme1(cfg_a, np.zeros((2, 2), complex), np.ones((2, 8), complex))
    assert res.metric_evals == (1 << cfg_a.index_bits) * 8

    cfg_b = cfg2()  # index bits 3, M=4
    res = brute_force_ml(cfg_b, np.zeros((2, 2), complex), np.ones((2, 8), complex))
    assert res.metric_evals == (1 << cfg_b.index_bits) * 16 == 128


def _random_frames(cfg, n, seed, ebn0_db=10.0):
    """Batch of (bits, Y, H) with noise, drawn from independent streams."""
    rng = stream(seed, 0)
    bits = (rng.random((n, cfg.bits_per_codeword)) < 0.5).astype(np.int8)
    placed = encode_batch(cfg, bits)
    nm = cfg.num_realizations
    h = np.sqrt(0.5) * (
        rng.standard_normal((n, cfg.nr, nm)) + 1j * rng.standard_normal((n, cfg.nr, nm))
    )
    rows = np.arange(n)[:, None]
    ha = h[rows, :, placed.m_a]
    hb = h[rows, :, placed.m_b]
    y = (ha * placed.v_a[:, :, None] + hb * placed.v_b[:, :, None]).transpose(0, 2, 1)
    n0 = n0_from_ebn0(cfg, ebn0_db)
    y = y + np.sqrt(n0 / 2) * (
        rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    )
    return bits, y, h


def test_detector_equivalence_randomized():
    cfg = cfg1()
    bits, y, h = _random_frames(cfg, 2000, seed=8)
    fast_bits, fast_metric, _ = fast_ml_scheme1_batch(cfg, y, h)
    brute_bits, brute_metric, _ = brute_force_ml_batch(cfg, y, h)
    assert np.array_equal(fast_bits, brute_bits)
    assert np.allclose(fast_metric, brute_metric, atol=1e-9)


def test_detector_equivalence_exhaustive_tiny_config():
    cfg = cfg1(nt=2, nrf=1, m=2, theta=13.2885, nr=2)
    blocks = all_bit_blocks(cfg)
    rng = stream(9, 0)
    for trial in range(100):
        h = draw_channel(cfg, rng)
        for bits in blocks:
            _, cw = encode(cfg, bits)
            y = transmit(h, cw, n0_from_ebn0(cfg, 8.0), rng)
            fast = fast_ml_scheme1(cfg, y, h)
            brute = brute_force_ml(cfg, y, h)
            assert fast.bits.tolist() == brute.bits.tolist()


def test_batch_and_single_frame_agree():
    cfg = cfg2()
    bits, y, h = _random_frames(cfg, 16, seed=10)
    batch_bits, batch_metric, _ = brute_force_ml_batch(cfg, y, h)
    for i in range(len(bits)):
        res = brute_force_ml(cfg, y[i], h[i])
        assert res.bits.tolist() == batch_bits[i].tolist()
        assert res.metric == pytest.approx(float(batch_metric[i]))


def test_selection_matches_bits():
    cfg = cfg1()
    bits, y, h = _random_frames(cfg, 8, seed=11)
    for i in range(8):
        res = fast_ml_scheme1(cfg, y[i], h[i])
        from ciodmbm import decode_bits

        assert decode_bits(cfg, res.selection).tolist() == res.bits.tolist()
