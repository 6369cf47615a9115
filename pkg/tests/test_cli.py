import json
import math
import subprocess
import sys

import pytest

from zernturb import cli
from zernturb.coupling import gamma_coeff


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_pairs(text):
    return {line.split()[0]: line.split()[1] for line in text.splitlines() if line}


# ---------------------------------------------------------------------------
# coeff
# ---------------------------------------------------------------------------


def test_coeff_all_zero_key(capsys):
    code, out, _ = run(capsys, "coeff", "0", "0", "0", "0", "0", "0")
    assert code == 0
    vals = parse_pairs(out)
    assert float(vals["A"]) == pytest.approx(1.0, rel=1e-15)
    assert float(vals["Gamma"]) == pytest.approx(math.pi / 4, rel=1e-15)


def test_coeff_azimuthal_rule(capsys):
    code, out, _ = run(capsys, "coeff", "1", "1", "1", "1", "2", "0")
    assert code == 0
    assert float(parse_pairs(out)["A"]) == 0.0


def test_coeff_gamma_matches_fixture(capsys, fixture_table):
    rows = {k: v for k, v, _ in fixture_table("gamma_quadrature.txt")}
    ref = rows[(1, -1, 1, 1, 2, 0)] if (1, -1, 1, 1, 2, 0) in rows else rows[(1, 1, 1, -1, 2, 0)]
    code, out, _ = run(capsys, "coeff", "1", "1", "1", "-1", "2", "0")
    assert code == 0
    g = float(parse_pairs(out)["Gamma"])
    assert g == gamma_coeff(((1, 1), (1, -1), (2, 0)))
    assert g == pytest.approx(ref, rel=1e-4)


def test_coeff_with_oracle(capsys):
    code, out, _ = run(capsys, "coeff", "1", "1", "1", "-1", "2", "0", "--oracle")
    assert code == 0
    lines = out.splitlines()
    assert any(l.startswith("A_quadrature") and "error" in l for l in lines)
    assert any(l.startswith("Gamma_quadrature") and "error" in l for l in lines)


def test_coeff_invalid_mode_exit_2(capsys):
    code, _, err = run(capsys, "coeff", "2", "1", "0", "0", "2", "1")
    assert code == 2
    assert "error" in err


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_low_order_passes(capsys):
    code, out, _ = run(capsys, "verify", "--order", "2")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().endswith("checks passed")


def test_verify_detects_perturbed_gamma(capsys):
    code, out, _ = run(capsys, "verify", "--order", "2", "--perturb", "1", "1", "1", "-1", "2", "0")
    assert code == 1
    fails = [l for l in out.splitlines() if l.startswith("FAIL")]
    assert any("orthogonality" in l for l in fails)


def test_verify_check_count_grows_with_order():
    assert len(cli.verification_checks(2)) < len(cli.verification_checks(3))


# ---------------------------------------------------------------------------
# prob
# ---------------------------------------------------------------------------


def test_prob_vacuum(capsys):
    code, out, _ = run(capsys, "prob", "--detectors", "1", "1", "1", "-1")
    assert code == 0
    vals = parse_pairs(out)
    g = gamma_coeff(((1, 1), (1, -1), (2, 0)))
    assert float(vals["P_raw"]) == pytest.approx(6.25e-4 * (math.pi * g) ** 2, rel=1e-14)
    assert float(vals["imag"]) == 0.0


def test_prob_wrong_detector_count_exit_2(capsys):
    code, _, _ = run(capsys, "prob", "--detectors", "1", "1", "1", "-1", "--pump", "2", "1")
    assert code == 2


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def turbulent_grid_csv():
    cfg = cli.RunConfig(command="grid", sigma_R=0.5, n_max=5)
    grid = cli.probability_grid(cfg.pump, 1, -1, cfg.n_max, cfg.params, cfg.ao)
    return cli.grid_csv(grid)


def test_grid_header_and_comments(turbulent_grid_csv):
    lines = turbulent_grid_csv.splitlines()
    comments = [l for l in lines if l.startswith("#")]
    names = [c[2:].split("=", 1)[0] for c in comments]
    for required in ("pump_N", "pump_M", "M1", "M2", "sigma_R", "ao_mode", "ao_cutoff",
                     "k", "z", "R", "n5_max", "normalization"):
        assert required in names
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "N1,N2,P_raw,P_norm,log10_P_norm_clamped"


def test_grid_rows_lexicographic_and_clamped(turbulent_grid_csv):
    meta, rows = cli.read_grid_csv(turbulent_grid_csv)
    keys = [(r[0], r[1]) for r in rows]
    assert keys == sorted(keys)
    assert all(r[4] >= cli.LOG_FLOOR for r in rows)
    above = [r for r in rows if r[4] > cli.LOG_FLOOR]
    assert len(above) > 1
    assert meta["sigma_R"] == "0.5"


def test_grid_round_trip_renormalization(turbulent_grid_csv):
    _, rows = cli.read_grid_csv(turbulent_grid_csv)
    total = math.fsum(max(r[2], 0.0) for r in rows)
    for r in rows:
        assert abs(max(r[2], 0.0) / total - r[3]) < 1e-12


def test_grid_vacuum_single_row(capsys):
    code, out, _ = run(capsys, "grid", "--detectors", "1", "-1", "--n-max", "9")
    assert code == 0
    _, rows = cli.read_grid_csv(out)
    nonzero = [r for r in rows if r[3] != 0.0]
    assert [(r[0], r[1], r[3]) for r in nonzero] == [(1, 1, 1.0)]


def test_grid_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert cli.main(["grid", "--sigma-r", "0.5", "--n-max", "3", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_grid_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"sigma_R": 0.5, "n_max": 3, "ao_mode": "truncate", "ao_cutoff": 6}))
    code, out, _ = run(capsys, "grid", "--config", str(cfg), "--ao-mode", "none")
    assert code == 0
    meta, rows = cli.read_grid_csv(out)
    assert meta["sigma_R"] == "0.5"
    assert meta["ao_mode"] == "none"
    assert meta["ao_cutoff"] == "6"
    assert len(rows) == 4


def test_grid_unwritable_path_exit_2(tmp_path, capsys):
    target = tmp_path / "missing" / "dir" / "out.csv"
    code, _, err = run(capsys, "grid", "--n-max", "3", "--out", str(target))
    assert code == 2
    assert "cannot write" in err


def test_bad_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, _, _ = run(capsys, "grid", "--config", str(cfg))
    assert code == 2


def test_negative_sigma_exit_2(capsys):
    code, _, _ = run(capsys, "grid", "--sigma-r", "-0.1", "--n-max", "3")
    assert code == 2


def test_small_n_max_exit_2(capsys):
    code, _, _ = run(capsys, "grid", "--detectors", "3", "-3", "--n-max", "2")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "zernturb", "coeff", "0", "0", "0", "0", "0", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("A ")


@pytest.mark.parametrize("x", [0.1, 1e-300, 6.25e-4, 1 / 3])
def test_fmt_round_trips(x):
    assert float(cli.fmt(x)) == x
