"""End-to-end CLI tests: exit codes, file outputs, manifests, replay."""
import json
import math
import os

import pytest

from fermiswap.cli import main


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def _read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_theorem_check_runs_and_reports(tmp_path, capsys):
    out = str(tmp_path / "o")
    code = main(["theorem-check", "--sizes", "4", "--seeds", "2",
                 "--backend", "oracle", "--out", out])
    assert code == 0
    text = capsys.readouterr().out
    assert "PASS" in text
    report = json.loads(_read_bytes(os.path.join(out, "theorem_check.json")))
    assert report["passed"]
    assert report["num_cases"] == 2 * 6
    manifest = json.loads(_read_bytes(os.path.join(out, "theorem_check.manifest.json")))
    assert manifest["experiment"] == "theorem-check"
    assert manifest["outputs"] == ["theorem_check.json"]


def test_theorem_check_both_backends(tmp_path):
    out = str(tmp_path / "o")
    code = main(["theorem-check", "--sizes", "4", "--seeds", "1",
                 "--backend", "both", "--out", out])
    assert code == 0
    report = json.loads(_read_bytes(os.path.join(out, "theorem_check.json")))
    assert report["backend"] == "both"
    assert {r["backend"] for r in report["runs"]} == {"oracle", "gaussian"}


def test_theorem_check_counterexample_and_off_half(tmp_path):
    out = str(tmp_path / "a")
    assert main(["theorem-check", "--state", "counterexample",
                 "--backend", "oracle", "--out", out]) == 0
    out = str(tmp_path / "b")
    assert main(["theorem-check", "--filling", "off-half", "--sizes", "4",
                 "--seeds", "2", "--backend", "oracle", "--out", out]) == 0


def test_ee_sweep_csv_values(tmp_path):
    out = str(tmp_path / "o")
    code = main(["ee-sweep", "--mode", "left", "--sizes", "4", "6",
                 "--backend", "oracle", "--out", out])
    assert code == 0
    rows = _read_csv(os.path.join(out, "ee_sweep.csv"))
    assert len(rows) == 2
    for r in rows:
        expect = int(r["L"]) / 2 * math.log(2.0)
        assert float(r["entropy_nats"]) == pytest.approx(expect, abs=1e-9)


def test_ee_sweep_units_flag(tmp_path, capsys):
    out = str(tmp_path / "o")
    main(["ee-sweep", "--mode", "left", "--sizes", "4", "--backend", "oracle",
          "--units", "log2", "--out", out])
    assert "log2-units" in capsys.readouterr().out


def test_manifest_replay_reproduces_bytes(tmp_path):
    """Rerunning from a manifest overrides any conflicting flags."""
    first = str(tmp_path / "first")
    assert main(["ee-sweep", "--mode", "left", "--sizes", "4", "--seed", "3",
                 "--backend", "oracle", "--out", first]) == 0
    manifest_path = os.path.join(first, "ee_sweep.manifest.json")
    second = str(tmp_path / "second")
    assert main(["ee-sweep", "--config", manifest_path, "--seed", "999",
                 "--sizes", "6", "8", "--out", second]) == 0
    for name in ("ee_sweep.csv", "ee_sweep.manifest.json"):
        assert _read_bytes(os.path.join(first, name)) == \
            _read_bytes(os.path.join(second, name))


def test_reruns_are_byte_identical(tmp_path):
    outs = [str(tmp_path / d) for d in ("r1", "r2")]
    for out in outs:
        assert main(["plucker-verify", "--cases", "15",
                     "--wavefunction-cases", "2", "--out", out]) == 0
        assert main(["imperfect-copy", "--sizes", "4", "--dms", "0.0", "0.1",
                     "--backend", "oracle", "--out", out]) == 0
    names = sorted(os.listdir(outs[0]))
    assert names == sorted(os.listdir(outs[1]))
    for name in names:
        a = _read_bytes(os.path.join(outs[0], name))
        b = _read_bytes(os.path.join(outs[1], name))
        assert a == b, f"{name} differs between identical reruns"


def test_config_experiment_mismatch_is_a_usage_error(tmp_path):
    out = str(tmp_path / "o")
    assert main(["ee-sweep", "--mode", "left", "--sizes", "4",
                 "--backend", "oracle", "--out", out]) == 0
    manifest = os.path.join(out, "ee_sweep.manifest.json")
    assert main(["prob-scaling", "--config", manifest, "--out", out]) == 2


def test_config_unknown_key_is_a_usage_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"bogus": 1}')
    assert main(["ee-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text('[1, 2]')
    assert main(["ee-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_imperfect_bell_command(tmp_path):
    out = str(tmp_path / "o")
    code = main(["imperfect-bell", "--L", "4", "--epsilons", "0.0", "0.5",
                 "--backend", "oracle", "--out", out])
    assert code == 0
    rows = _read_csv(os.path.join(out, "imperfect_bell.csv"))
    for r in rows:
        assert abs(float(r["residual"])) < 1e-8


def test_prob_scaling_writes_fit_table(tmp_path):
    out = str(tmp_path / "o")
    code = main(["prob-scaling", "--m0s", "1.0", "--sizes", "4", "6", "8",
                 "--out", out])
    assert code == 0
    fits = _read_csv(os.path.join(out, "prob_scaling_fits.csv"))
    assert len(fits) == 1
    assert float(fits[0]["r_squared"]) > 0.999
    manifest = json.loads(_read_bytes(os.path.join(out, "prob_scaling.manifest.json")))
    assert manifest["outputs"] == ["prob_scaling.csv", "prob_scaling_fits.csv"]


def test_plucker_fault_injection_exits_nonzero(tmp_path):
    out = str(tmp_path / "o")
    code = main(["plucker-verify", "--cases", "15", "--wavefunction-cases", "0",
                 "--inject-sign-fault", "--out", out])
    assert code == 1
    report = json.loads(_read_bytes(os.path.join(out, "plucker_verify.json")))
    assert report["fault_injected"] and not report["passed"]


def test_oracle_compare_command(tmp_path):
    out = str(tmp_path / "o")
    code = main(["oracle-compare", "--sizes", "2", "3", "--seeds", "2",
                 "--out", out])
    assert code == 0
    rows = _read_csv(os.path.join(out, "oracle_compare.csv"))
    assert all(r["flags_agree"] == "true" for r in rows)


def test_oracle_backend_beyond_dense_cap_is_a_usage_error(tmp_path):
    out = str(tmp_path / "o")
    code = main(["ee-sweep", "--mode", "left", "--sizes", "10",
                 "--backend", "oracle", "--out", out])
    assert code == 2


def test_invalid_backend_choice_exits_via_argparse():
    with pytest.raises(SystemExit):
        main(["ee-sweep", "--backend", "dense"])
    with pytest.raises(SystemExit):
        main([])
