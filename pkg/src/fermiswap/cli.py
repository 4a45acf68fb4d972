"""Command-line experiment runner.

Each subcommand writes its data file(s) plus a sibling JSON manifest
into --out; reruns with the same parameters are byte-identical.  A
--config JSON (e.g. a previously written manifest) overrides the parsed
flags, so any output can be reproduced from its manifest alone.

Exit codes: 0 pass, 1 assertion failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Sequence

from . import experiments, reporting
from .experiments import ExperimentFailure, LOG2
from .fock import CapacityError
from .models import DegenerateFermiLevel

_USAGE_ERRORS = (ValueError, KeyError, OSError, json.JSONDecodeError,
                 CapacityError, DegenerateFermiLevel)


def _fmt_units(nats: float, units: str) -> str:
    if units == "log2":
        return f"{nats / LOG2:.6f} log2-units"
    return f"{nats:.6f} nats"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--backend", choices=("auto", "oracle", "gaussian", "both"),
                   default="auto",
                   help="auto picks the dense oracle whenever 2L <= 16; "
                        "'both' runs both and requires agreement")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--units", choices=("nats", "log2"), default="nats",
                   help="units for the printed summary (files carry both)")
    p.add_argument("--config", default=None,
                   help="JSON file (e.g. a manifest) whose values override flags")


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config {args.config} must hold a JSON object")
    flat: Dict = {}
    for key, value in data.items():
        if key in ("outputs", "schema_version"):
            continue
        if key == "experiment":
            if value != args.command:
                raise ValueError(
                    f"config is for experiment {value!r}, not {args.command!r}")
            continue
        if key == "grid" and isinstance(value, dict):
            flat.update(value)
            continue
        flat[key] = value
    for key, value in flat.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"config key {key!r} is not a parameter of "
                             f"{args.command!r}")
        setattr(args, attr, value)


def _rows_agree(rows_a: List[Dict], rows_b: List[Dict], cols: Sequence[str],
                tol: float = 1e-8) -> None:
    if len(rows_a) != len(rows_b):
        raise ExperimentFailure("backend comparison: row counts differ")
    for ra, rb in zip(rows_a, rows_b):
        for c in cols:
            if abs(ra[c] - rb[c]) > tol:
                raise ExperimentFailure(
                    f"backends disagree on {c} ({ra[c]!r} vs {rb[c]!r}) at row {ra!r}")


def _run_rows(engine, backend: str, compare_cols: Sequence[str]) -> List[Dict]:
    """Run a row engine; backend 'both' runs twice and diffs the results."""
    if backend != "both":
        return engine(backend)
    rows_o = engine("oracle")
    rows_g = engine("gaussian")
    _rows_agree(rows_o, rows_g, compare_cols)
    return rows_o


def _write_rows(args, name: str, columns: Sequence[str], rows: List[Dict],
                grid: Dict, extra_outputs: Sequence[str] = ()) -> str:
    csv_path = os.path.join(args.out, name + ".csv")
    reporting.write_csv(csv_path, columns, [[r[c] for c in columns] for r in rows])
    # Manifests name their outputs by basename (they live in the same
    # directory), so the manifest bytes do not depend on --out.
    outputs = tuple(os.path.basename(p) for p in (csv_path,) + tuple(extra_outputs))
    manifest = reporting.ExperimentManifest(
        experiment=args.command, grid=grid, backend=args.backend,
        seed=args.seed, outputs=outputs)
    reporting.write_manifest(manifest, reporting.manifest_path_for(csv_path))
    return csv_path


# ------------------------------------------------------------------- commands

def cmd_theorem_check(args) -> int:
    backends = ["oracle", "gaussian"] if args.backend == "both" else [args.backend]
    runs = [experiments.theorem_sweep(
        sizes=args.sizes, seeds_per_size=args.seeds, filling=args.filling,
        state=args.state, backend=b, seed=args.seed) for b in backends]
    passed = all(r["passed"] for r in runs)
    report = runs[0] if len(runs) == 1 else {
        "experiment": "theorem-check", "backend": "both", "passed": passed,
        "runs": runs,
    }
    json_path = os.path.join(args.out, "theorem_check.json")
    reporting.write_json(json_path, report)
    manifest = reporting.ExperimentManifest(
        experiment=args.command,
        grid={"sizes": list(args.sizes), "seeds_per_size": args.seeds,
              "filling": args.filling, "state": args.state},
        backend=args.backend, seed=args.seed,
        outputs=(os.path.basename(json_path),))
    reporting.write_manifest(manifest, reporting.manifest_path_for(json_path))
    for r in runs:
        fid = r["min_fidelity"]
        print(f"theorem-check[{r['backend']}]: {r['num_cases']} cases, "
              f"{r['num_trivial']} zero-probability, min fidelity "
              f"{'n/a' if fid is None else format(fid, '.12f')} -> "
              f"{'PASS' if r['passed'] else 'FAIL'}")
    print(f"wrote {json_path}")
    return 0 if passed else 1


def cmd_ee_sweep(args) -> int:
    if args.mode == "right" and args.fixed_L is None:
        args.fixed_L = 14 if args.backend in ("auto", "gaussian") else 6
    if args.mode == "left" and args.sizes is None:
        args.sizes = [4, 6, 8] if args.backend == "both" else [4, 6, 8, 10, 12]

    def engine(backend):
        return experiments.ee_sweep_rows(
            mode=args.mode, sizes=args.sizes or [], fixed_L=args.fixed_L or 0,
            n_ms=args.n_ms, state=args.state, m0=args.m0, trials=args.trials,
            seed=args.seed, backend=backend)

    rows = _run_rows(engine, args.backend, ("entropy_nats", "probability"))
    grid = {"mode": args.mode, "sizes": args.sizes, "fixed-L": args.fixed_L,
            "n-ms": args.n_ms, "state": args.state, "m0": args.m0,
            "trials": args.trials}
    csv_path = _write_rows(args, "ee_sweep", experiments.EE_SWEEP_COLUMNS, rows, grid)
    for r in rows:
        print(f"ee-sweep {r['mode']}: L={r['L']} n_m={r['n_m']} "
              f"S = {_fmt_units(r['entropy_nats'], args.units)} "
              f"({r['trials_excluded']} excluded)")
    print(f"wrote {csv_path}")
    return 0


def cmd_imperfect_bell(args) -> int:
    if args.L is None:
        args.L = 10 if args.backend in ("auto", "gaussian") else 6
    if args.n_ms is None:
        args.n_ms = list(range(args.L // 2 + 1))

    def engine(backend):
        return experiments.imperfect_bell_rows(
            epsilons=args.epsilons, n_ms=args.n_ms, L=args.L, state=args.state,
            m0=args.m0, trials=args.trials, seed=args.seed, backend=backend)

    rows = _run_rows(engine, args.backend, ("entropy_nats",))
    grid = {"epsilons": args.epsilons, "n-ms": args.n_ms, "L": args.L,
            "state": args.state, "m0": args.m0, "trials": args.trials}
    csv_path = _write_rows(args, "imperfect_bell",
                           experiments.IMPERFECT_BELL_COLUMNS, rows, grid)
    worst = max(abs(r["residual"]) for r in rows)
    print(f"imperfect-bell: {len(rows)} rows, max |S - n_m*S_rung| = {worst:.3e}")
    print(f"wrote {csv_path}")
    return 0


def cmd_imperfect_copy(args) -> int:
    if args.sizes is None:
        args.sizes = [4, 6, 8] if args.backend == "both" else [4, 6, 8, 10, 12]

    def engine(backend):
        return experiments.imperfect_copy_rows(
            sizes=args.sizes, dms=args.dms, m0=args.m0, seed=args.seed,
            backend=backend)

    rows = _run_rows(engine, args.backend, ("entropy_log2_units", "fidelity"))
    grid = {"sizes": args.sizes, "dms": args.dms, "m0": args.m0}
    csv_path = _write_rows(args, "imperfect_copy",
                           experiments.IMPERFECT_COPY_COLUMNS, rows, grid)
    for r in rows:
        print(f"imperfect-copy: L={r['L']} dm={r['dm']} F={r['fidelity']:.9f} "
              f"S={_fmt_units(r['entropy_log2_units'] * LOG2, args.units)}")
    print(f"wrote {csv_path}")
    return 0


def cmd_prob_scaling(args) -> int:
    rows, fits = experiments.prob_scaling_rows(m0s=args.m0s, sizes=args.sizes)
    fits_path = os.path.join(args.out, "prob_scaling_fits.csv")
    reporting.write_csv(fits_path, experiments.PROB_SCALING_FIT_COLUMNS,
                        [[f[c] for c in experiments.PROB_SCALING_FIT_COLUMNS]
                         for f in fits])
    grid = {"m0s": args.m0s, "sizes": args.sizes}
    csv_path = _write_rows(args, "prob_scaling", experiments.PROB_SCALING_COLUMNS,
                           rows, grid, extra_outputs=(fits_path,))
    for f in fits:
        print(f"prob-scaling: m0={f['m0']} slope={f['slope']:.6f} "
              f"R^2={f['r_squared']:.6f}")
    print(f"wrote {csv_path} and {fits_path}")
    return 0


def cmd_plucker_verify(args) -> int:
    report = experiments.plucker_sweep(
        cases=args.cases, seed=args.seed,
        wavefunction_cases=args.wavefunction_cases,
        inject_sign_fault=args.inject_sign_fault)
    json_path = os.path.join(args.out, "plucker_verify.json")
    reporting.write_json(json_path, report)
    manifest = reporting.ExperimentManifest(
        experiment=args.command,
        grid={"cases": args.cases, "wavefunction-cases": args.wavefunction_cases,
              "inject-sign-fault": args.inject_sign_fault},
        backend=args.backend, seed=args.seed,
        outputs=(os.path.basename(json_path),))
    reporting.write_manifest(manifest, reporting.manifest_path_for(json_path))
    print(f"plucker-verify: max residuals {report['max_single_residual']:.3e} / "
          f"{report['max_general_residual']:.3e}, "
          f"{report['wavefunction_failures']} wavefunction failures -> "
          f"{'PASS' if report['passed'] else 'FAIL'}")
    print(f"wrote {json_path}")
    return 0 if report["passed"] else 1


def cmd_oracle_compare(args) -> int:
    rows, summary = experiments.oracle_compare_rows(
        sizes=args.sizes, seeds_per_size=args.seeds, seed=args.seed)
    grid = {"sizes": args.sizes, "seeds-per-size": args.seeds}
    csv_path = _write_rows(args, "oracle_compare",
                           experiments.ORACLE_COMPARE_COLUMNS, rows, grid)
    print(f"oracle-compare: {summary['rows']} instances, "
          f"{summary['zero_cases']} zero-probability, max gamma diff "
          f"{summary['max_gamma_diff']:.3e} -> PASS")
    print(f"wrote {csv_path}")
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fermiswap",
        description="Rung-measurement entanglement swapping experiments on "
                    "doubled free-fermion states.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theorem-check",
                       help="universality sweep over all half-size measured sets")
    _add_common(p)
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8])
    p.add_argument("--seeds", type=int, default=50,
                   help="random instances per size")
    p.add_argument("--filling", choices=("half", "off-half"), default="half")
    p.add_argument("--state", choices=("random", "counterexample"), default="random")
    p.set_defaults(func=cmd_theorem_check)

    p = sub.add_parser("ee-sweep", help="entropy of the unmeasured region "
                                        "(system-size or measurement-count sweep)")
    _add_common(p)
    p.add_argument("--mode", choices=("left", "right"), default="left")
    p.add_argument("--sizes", type=int, nargs="+", default=None,
                   help="L grid for left mode")
    p.add_argument("--fixed-L", dest="fixed_L", type=int, default=None,
                   help="layer size for right mode (default 14, or 6 on the oracle)")
    p.add_argument("--n-ms", dest="n_ms", type=int, nargs="+", default=None,
                   help="measured-rung counts for right mode (default 0..L/2)")
    p.add_argument("--state", choices=("critical", "massive", "random"),
                   default="critical")
    p.add_argument("--m0", type=float, default=1.0,
                   help="mass for --state massive")
    p.add_argument("--trials", type=int, default=4,
                   help="random measured subsets per grid point")
    p.set_defaults(func=cmd_ee_sweep)

    p = sub.add_parser("imperfect-bell",
                       help="entropy under the ε-deformed pair-state measurement")
    _add_common(p)
    p.add_argument("--epsilons", type=float, nargs="+",
                   default=[-0.9, -0.5, 0.0, 0.5, 0.9])
    p.add_argument("--L", type=int, default=None,
                   help="layer size (default 10, or 6 on the oracle)")
    p.add_argument("--n-ms", dest="n_ms", type=int, nargs="+", default=None)
    p.add_argument("--state", choices=("critical", "massive", "random"),
                   default="critical")
    p.add_argument("--m0", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=4)
    p.set_defaults(func=cmd_imperfect_bell)

    p = sub.add_parser("imperfect-copy",
                       help="bilayer with mismatched masses: entropy and fidelity")
    _add_common(p)
    p.add_argument("--sizes", type=int, nargs="+", default=None)
    p.add_argument("--dms", type=float, nargs="+",
                   default=[0.0, 0.02, 0.05, 0.1, 0.2])
    p.add_argument("--m0", type=float, default=0.3)
    p.set_defaults(func=cmd_imperfect_copy)

    p = sub.add_parser("prob-scaling",
                       help="outcome probability vs system size for massive chains")
    _add_common(p)
    p.add_argument("--m0s", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10, 12])
    p.set_defaults(func=cmd_prob_scaling)

    p = sub.add_parser("plucker-verify",
                       help="minor exchange identities and post-state structure")
    _add_common(p)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--wavefunction-cases", dest="wavefunction_cases", type=int,
                   default=20)
    p.add_argument("--inject-sign-fault", dest="inject_sign_fault",
                   action="store_true",
                   help="negative control: drop a sign and expect failure")
    p.set_defaults(func=cmd_plucker_verify)

    p = sub.add_parser("oracle-compare",
                       help="diff the dense and Gaussian backends on small instances")
    _add_common(p)
    p.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    p.add_argument("--seeds", type=int, default=5, help="instances per size")
    p.set_defaults(func=cmd_oracle_compare)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except ExperimentFailure as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
