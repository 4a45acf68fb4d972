"""Experiment-engine tests with frozen reference values."""
import math

import numpy as np
import pytest

from fermiswap import experiments
from fermiswap.experiments import (ExperimentFailure, ee_sweep_rows,
                                   imperfect_bell_rows, imperfect_copy_rows,
                                   oracle_compare_rows, plucker_sweep,
                                   prob_scaling_rows, theorem_sweep)
from fermiswap.models import eisler_level_spacing

LOG2 = math.log(2.0)

# log P of the half-system uniform outcome for the m0 = 1.0 ground states,
# pinned from the minor product (slogdet route)
LOG_P_M0_1 = {
    4: -12.300980584002925,
    6: -27.922117246450455,
    8: -49.856263129938768,
    10: -78.103284290412503,
    12: -112.66317570079124,
}


def test_theorem_sweep_small_grid_on_both_backends():
    for backend in ("oracle", "gaussian"):
        report = theorem_sweep(sizes=(4,), seeds_per_size=3, backend=backend)
        assert report["passed"], report
        assert report["backend"] == backend
        assert report["num_cases"] == 3 * 6
        assert report["min_fidelity"] >= 1.0 - 1e-9
        if backend == "gaussian":
            assert report["max_gamma_defect"] <= 1e-8


def test_theorem_sweep_counterexample():
    report = theorem_sweep(state="counterexample", backend="oracle")
    assert report["passed"]
    assert report["num_cases"] == 6
    # the vanishing split and its complement are the two flagged outcomes
    assert report["num_trivial"] == 2
    trivial = [c["measured"] for c in report["cases"] if c["trivial"]]
    assert [0, 1] in trivial and [2, 3] in trivial


def test_theorem_sweep_off_half_filling_flags_everything():
    report = theorem_sweep(sizes=(4,), seeds_per_size=2, filling="off-half",
                           backend="oracle")
    assert report["passed"]
    assert report["num_trivial"] == report["num_cases"] == 2 * 6
    assert report["min_fidelity"] is None


def test_theorem_sweep_validation():
    with pytest.raises(ValueError):
        theorem_sweep(sizes=(5,), seeds_per_size=1)
    with pytest.raises(ValueError):
        theorem_sweep(filling="full")
    with pytest.raises(ValueError):
        theorem_sweep(state="ground")


def test_ee_sweep_left_mode_hits_the_half_log2_law():
    rows = ee_sweep_rows(mode="left", sizes=(4, 6), fixed_L=0, n_ms=None,
                         state="critical", m0=1.0, trials=3, seed=0,
                         backend="oracle")
    for r in rows:
        assert r["entropy_nats"] == pytest.approx(r["L"] / 2 * LOG2, abs=1e-9)
        assert r["entropy_log2_units"] == pytest.approx(r["L"] / 2, abs=1e-9)
        assert r["trials_excluded"] == 0


def test_ee_sweep_right_mode_hits_the_counting_law():
    rows = ee_sweep_rows(mode="right", sizes=(), fixed_L=6, n_ms=(0, 1, 3),
                         state="random", m0=1.0, trials=3, seed=5,
                         backend="oracle")
    assert [r["n_m"] for r in rows] == [0, 1, 3]
    for r in rows:
        assert r["entropy_nats"] == pytest.approx(r["n_m"] * LOG2, abs=1e-9)


def test_ee_sweep_validation():
    with pytest.raises(ValueError):
        ee_sweep_rows(mode="left", sizes=(5,), fixed_L=0, n_ms=None,
                      state="critical", m0=1.0, trials=2, seed=0, backend="oracle")
    with pytest.raises(ValueError):
        ee_sweep_rows(mode="right", sizes=(), fixed_L=4, n_ms=(3,),
                      state="critical", m0=1.0, trials=2, seed=0, backend="oracle")
    with pytest.raises(ValueError):
        ee_sweep_rows(mode="diag", sizes=(4,), fixed_L=0, n_ms=None,
                      state="critical", m0=1.0, trials=2, seed=0, backend="oracle")


def test_imperfect_bell_rows_follow_the_rung_entropy():
    rows = imperfect_bell_rows(epsilons=(-0.5, 0.0, 0.9), n_ms=(0, 1, 2), L=4,
                               state="critical", m0=1.0, trials=3, seed=0,
                               backend="oracle")
    assert len(rows) == 9
    for r in rows:
        assert abs(r["residual"]) < 1e-9
        assert r["entropy_nats"] == pytest.approx(r["predicted"], abs=1e-9)


def test_imperfect_copy_rows_frozen_fidelities():
    rows = imperfect_copy_rows(sizes=(4,), dms=(0.0, 0.05), m0=0.3, seed=0,
                               backend="oracle")
    by_dm = {r["dm"]: r for r in rows}
    assert by_dm[0.0]["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert by_dm[0.0]["entropy_log2_units"] == pytest.approx(2.0, abs=1e-9)
    assert by_dm[0.05]["fidelity"] == pytest.approx(0.704110311588, rel=1e-8)


def test_prob_scaling_rows_frozen_values_and_fits():
    rows, fits = prob_scaling_rows(m0s=(1.0,), sizes=(4, 6, 8, 10, 12))
    for r in rows:
        assert r["log_P_minor"] == pytest.approx(LOG_P_M0_1[r["L"]], rel=1e-9)
        # the spectrum route loses accuracy once levels reach
        # |eps| ~ -log(machine eps): the minor route stays the reference
        spec_rel = 5e-8 if r["L"] <= 8 else 1e-3
        assert r["log_P_spectrum"] == pytest.approx(r["log_P_minor"], rel=spec_rel)
        assert r["eisler_epsilon"] == pytest.approx(2 * math.pi, abs=1e-12)
    (fit,) = fits
    assert fit["r_squared"] > 0.9999
    assert fit["n_points"] == 5
    # the decay rate is an eighth of the level spacing
    assert fit["slope"] == pytest.approx(-eisler_level_spacing(1.0) / 8.0, rel=0.05)


def test_prob_scaling_slope_tracks_the_level_spacing():
    _, fits = prob_scaling_rows(m0s=(0.5, 1.5), sizes=(4, 6, 8, 10))
    for f in fits:
        assert f["slope"] == pytest.approx(-eisler_level_spacing(f["m0"]) / 8.0,
                                           rel=0.05)


def test_prob_scaling_validation():
    with pytest.raises(ValueError):
        prob_scaling_rows(m0s=(1.0,), sizes=(2,))
    with pytest.raises(ValueError):
        prob_scaling_rows(m0s=(-1.0,), sizes=(4,))


def test_plucker_sweep_passes_and_fault_injection_fails():
    report = plucker_sweep(cases=40, seed=0, wavefunction_cases=6)
    assert report["passed"]
    assert report["max_single_residual"] < 1e-10
    assert report["max_general_residual"] < 1e-10
    assert report["wavefunction_failures"] == 0

    faulty = plucker_sweep(cases=40, seed=0, wavefunction_cases=0,
                           inject_sign_fault=True)
    assert not faulty["passed"]
    assert faulty["max_single_residual"] > 1e-6


def test_oracle_compare_rows_small_grid():
    rows, summary = oracle_compare_rows(sizes=(2, 3, 4), seeds_per_size=2, seed=0)
    assert summary["passed"]
    assert summary["rows"] == len(rows)
    assert summary["max_gamma_diff"] < 1e-8
    assert summary["singular_raised"] == summary["zero_cases"]
    for r in rows[:3]:
        for col in experiments.ORACLE_COMPARE_COLUMNS:
            assert col in r


def test_experiment_failure_is_an_assertion():
    assert issubclass(ExperimentFailure, AssertionError)
