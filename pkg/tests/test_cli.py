import csv

import numpy as np
import pytest

from ciodmbm.cli import CSV_HEADER, ebn0_at_ber, main

BASE = """
[run1]
scheme = ciod_mbm_1
nt = 4
nrf = 1
nr = 2
mod_order = 4
mod_kind = psk
rotation_deg = 13.2885
ebn0_start_db = 0
ebn0_stop_db = 4
ebn0_step_db = 2
max_frames = 3000
min_bit_errors = 50
seed = 9
workers = 1
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_schema(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = str(tmp_path / "out.csv")
    assert main(["simulate", cfg, "--output", out]) == 0
    with open(out) as fh:
        assert fh.readline().strip() == CSV_HEADER
    rows = read_rows(out)
    assert len(rows) == 3
    assert {r["ebn0_db"] for r in rows} == {"0.0", "2.0", "4.0"}
    for r in rows:
        assert r["scheme"] == "ciod_mbm_1"
        assert r["source"] == "sim"
        assert r["rotation_deg"] == "13.2885"
        assert int(r["bits"]) == 6 * int(r["frames"])


def test_missing_key_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE.replace("nt = 4\n", ""))
    assert main(["simulate", cfg, "--output", str(tmp_path / "o.csv")]) == 2
    assert "'nt'" in capsys.readouterr().err


def test_bad_value_exits_2_and_names_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE.replace("mod_order = 4", "mod_order = twelve"))
    assert main(["simulate", cfg, "--output", str(tmp_path / "o.csv")]) == 2
    assert "'mod_order'" in capsys.readouterr().err


def test_unreadable_config_exits_3(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.cfg")]) == 3


def test_unwritable_output_exits_3(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert main(["simulate", cfg, "--output", str(tmp_path / "no_dir" / "o.csv")]) == 3


def test_missing_output_path_exits_2(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert main(["simulate", cfg]) == 2


def test_abep_rows_match_grid(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = str(tmp_path / "theory.csv")
    assert main(["abep", cfg, "--output", out]) == 0
    rows = read_rows(out)
    assert len(rows) == 3
    assert all(r["source"] == "theory" for r in rows)
    assert all(r["frames"] == "0" for r in rows)
    bers = [float(r["ber"]) for r in rows]
    assert bers == sorted(bers, reverse=True)


def test_sim_and_theory_share_schema(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    sim_out = str(tmp_path / "sim.csv")
    th_out = str(tmp_path / "th.csv")
    assert main(["simulate", cfg, "--output", sim_out]) == 0
    assert main(["abep", cfg, "--output", th_out]) == 0
    merged = read_rows(sim_out) + read_rows(th_out)
    assert all(set(r) == set(merged[0]) for r in merged)


def test_rotation_auto_is_recorded(tmp_path):
    cfg = write_cfg(
        tmp_path,
        BASE.replace("rotation_deg = 13.2885", "rotation_deg = auto").replace(
            "ebn0_stop_db = 4", "ebn0_stop_db = 0"
        ),
    )
    out = str(tmp_path / "auto.csv")
    assert main(["simulate", cfg, "--output", out]) == 0
    rows = read_rows(out)
    angle = float(rows[0]["rotation_deg"])
    assert angle == pytest.approx(13.2885, abs=0.05)


def test_seed_override_changes_rows(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    assert main(["simulate", cfg, "--output", a]) == 0
    assert main(["simulate", cfg, "--output", b, "--seed", "123"]) == 0
    ra, rb = read_rows(a), read_rows(b)
    assert ra[0]["seed"] == "9" and rb[0]["seed"] == "123"
    assert any(x["bit_errors"] != y["bit_errors"] for x, y in zip(ra, rb))


def test_rows_reproduce_bit_exactly_across_worker_counts(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    a = str(tmp_path / "w1.csv")
    b = str(tmp_path / "w4.csv")
    assert main(["simulate", cfg, "--output", a, "--workers", "1"]) == 0
    assert main(["simulate", cfg, "--output", b, "--workers", "4"]) == 0
    assert open(a).read() == open(b).read()


def test_optimize_angle_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE.replace("rotation_deg = 13.2885", "rotation_deg = auto"))
    out = str(tmp_path / "trace.csv")
    assert main(["optimize-angle", cfg, "--output", out]) == 0
    report = capsys.readouterr().out
    assert "theta_star=13.28" in report
    rows = read_rows(out)
    assert set(rows[0]) == {"section", "theta_deg", "delta_min"}
    assert len(rows) > 800


def test_optimize_angle_rejects_mbm(tmp_path):
    text = """
[m]
scheme = mbm
nrf = 2
nr = 2
mod_order = 4
ebn0_start_db = 0
ebn0_stop_db = 2
ebn0_step_db = 2
"""
    cfg = write_cfg(tmp_path, text)
    assert main(["optimize-angle", cfg, "--output", str(tmp_path / "t.csv")]) == 2


COMPARE = """
[DEFAULT]
nr = 2
mod_kind = psk
ebn0_start_db = 0
ebn0_stop_db = 8
ebn0_step_db = 2
max_frames = 60000
min_bit_errors = 300
seed = 4
workers = 1

[left]
scheme = ciod_mbm_1
nt = 4
nrf = 1
mod_order = 4
rotation_deg = 13.2885

[right]
scheme = ciod_mbm_1
nt = 4
nrf = 1
mod_order = 4
rotation_deg = 13.2885
"""


def test_compare_identical_configs_gap_zero(tmp_path, capsys):
    cfg = write_cfg(tmp_path, COMPARE)
    out = str(tmp_path / "cmp.csv")
    assert main(["compare", cfg, "--output", out, "--target-ber", "1e-2"]) == 0
    report = capsys.readouterr().out
    line = [ln for ln in report.splitlines() if ln.startswith("gap_db")][0]
    assert float(line.rsplit(":", 1)[1]) == pytest.approx(0.0, abs=1e-9)


def test_compare_rejects_mismatched_rates(tmp_path, capsys):
    text = COMPARE.replace(
        "[right]\nscheme = ciod_mbm_1\nnt = 4\nnrf = 1\nmod_order = 4",
        "[right]\nscheme = ciod_mbm_1\nnt = 4\nnrf = 2\nmod_order = 4",
    )
    cfg = write_cfg(tmp_path, text)
    assert main(["compare", cfg, "--output", str(tmp_path / "c.csv")]) == 2
    err = capsys.readouterr().err
    assert "3.5" in err and "3.0" in err


def test_compare_needs_two_sections(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    assert main(["compare", cfg, "--output", str(tmp_path / "c.csv")]) == 2


def test_ebn0_at_ber_interpolation():
    grid = np.array([0.0, 2.0, 4.0])
    ber = np.array([1e-2, 1e-3, 1e-4])
    assert ebn0_at_ber(grid, ber, 1e-3) == pytest.approx(2.0)
    assert ebn0_at_ber(grid, ber, 3.16227766e-4) == pytest.approx(3.0, abs=1e-6)
    with pytest.raises(ValueError):
        ebn0_at_ber(grid, ber, 1e-6)
