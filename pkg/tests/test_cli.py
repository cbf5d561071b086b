"""CLI: exit codes, file formats, determinism."""

import json

import pytest

from kpevans import cli

KDV_NL = {"kind": "power", "coef": 0.5, "exponent": 2}
MKDV_NL = {"kind": "power", "coef": 1.0 / 3.0, "exponent": 3}


def write_config(tmp_path, name="cfg.json", **overrides):
    cfg = {"nonlinearity": KDV_NL, "a": 0.0, "E": -0.05, "c": 1.0, "sigma": 1}
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(args):
    return cli.main(args)


def test_profile_outputs(tmp_path):
    cfg = write_config(tmp_path, samples_per_period=128)
    out = tmp_path / "out"
    assert run(["profile", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[0] == "x,u,ux"
    assert len(lines) == 128 + 1 + 1  # header + N+1 samples
    summary = json.loads((out / "profile.json").read_text())
    assert summary["period"] == pytest.approx(8.696063307048224, rel=1e-9)
    assert set(summary["invariants"]) == {"T", "M", "P", "H"}


def test_profile_byte_stability(tmp_path):
    cfg = write_config(tmp_path, samples_per_period=128)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    run(["profile", "--config", cfg, "--out", str(out1)])
    run(["profile", "--config", cfg, "--out", str(out2)])
    assert (out1 / "profile.csv").read_bytes() == (out2 / "profile.csv").read_bytes()
    assert (out1 / "profile.json").read_bytes() == (out2 / "profile.json").read_bytes()


def test_invariants_csv(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "inv"
    assert run(["invariants", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "invariants.csv").read_text().splitlines()
    assert lines[0] == "a,E,c,T,M,P,H,jacobian_TM"
    assert len(lines[1].split(",")) == 8
    data = json.loads((out / "invariants.json").read_text())
    assert data["PT_minus_M2"] > 0
    assert data["gradient_identity_residual"] <= 1e-6


def test_missing_key_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"nonlinearity": KDV_NL, "a": 0.0, "E": -0.05}))
    assert run(["profile", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_unknown_key_exit_2(tmp_path):
    cfg = write_config(tmp_path, bogus=1)
    assert run(["profile", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_separatrix_exit_3(tmp_path):
    cfg = write_config(tmp_path, E=0.0)
    assert run(["profile", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_index_exit_codes(tmp_path):
    out = tmp_path / "idx"
    cfg_plus = write_config(tmp_path, "plus.json", sigma=1)
    assert run(["index", "--config", cfg_plus, "--out", str(out)]) == 10
    verdict = json.loads((out / "index.json").read_text())
    assert verdict["conclusion"] == "UnstableDetected"

    cfg_minus = write_config(tmp_path, "minus.json", sigma=-1)
    assert run(["index", "--config", cfg_minus, "--out", str(out)]) == 0
    # determinism of the exit code
    assert run(["index", "--config", cfg_minus, "--out", str(out)]) == 0


def test_index_mkdv_cnoidal(tmp_path):
    cfg = write_config(tmp_path, "mkdv.json", nonlinearity=MKDV_NL, E=0.3,
                       sigma=-1)
    assert run(["index", "--config", cfg, "--out", str(tmp_path / "m")]) == 10


def test_scan_outputs(tmp_path):
    scan = {
        "mu_grid": {"kind": "geometric", "start": 0.005, "stop": 2.0, "n": 12},
        "k": [0.1],
        "lambda": 1.0,
    }
    cfg = write_config(tmp_path, scan=scan, samples_per_period=512)
    out = tmp_path / "scan"
    assert run(["scan", "--config", cfg, "--out", str(out)]) == 0
    csv = (out / "evans_scan_k0p1.csv").read_text().splitlines()
    assert csv[0] == "mu,k,re_D,im_D,log_scale,sign"
    assert len(csv) == 12 + 1
    data = json.loads((out / "scan.json").read_text())
    roots = data["evans_scans"][0]["roots"]
    assert len(roots) == 1
    assert roots[0]["width"] <= 1e-6
    assert roots[0]["mu_star"] > 0


def test_scan_high_freq_k_zero_exit_2(tmp_path):
    cfg = write_config(tmp_path, scan={"high_freq": {"k": 0.0}})
    assert run(["scan", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_scan_requires_scan_block(tmp_path):
    cfg = write_config(tmp_path)
    assert run(["scan", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_bad_mu_grid_kind(tmp_path):
    cfg = write_config(tmp_path, scan={"mu_grid": {"kind": "cubic"}})
    assert run(["scan", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_verify_passes_on_default_kdv(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "v"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "verify.json").read_text())
    assert all(row["pass"] for row in report["checks"])
    printed = capsys.readouterr().out
    assert "checks passed" in printed


def test_verify_tightened_tolerances_fail(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "vt"
    assert run(["verify", "--config", cfg, "--out", str(out),
                "--tol-scale", "0.001"]) == 5
    report = json.loads((out / "verify.json").read_text())
    assert any(not row["pass"] for row in report["checks"])
    assert any(row["pass"] for row in report["checks"])


def test_scan_threads_deterministic(tmp_path):
    scan = {"mu_grid": {"kind": "geometric", "start": 0.01, "stop": 1.0, "n": 6},
            "k": [0.1, 0.2]}
    cfg = write_config(tmp_path, scan=scan, samples_per_period=256)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert run(["scan", "--config", cfg, "--out", str(out1), "--threads", "2"]) == 0
    assert run(["scan", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "scan.json").read_bytes() == (out2 / "scan.json").read_bytes()
