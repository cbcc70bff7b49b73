"""Command-line interface.

Exit status: 0 success, 1 internal error, 2 invalid input or configuration,
3 calibration finished with Bounded=Fail (the result is still written),
5 a Monte Carlo audit failed. Every command writes ``<output>.manifest.json``
next to its main output. ``SELGEN_OUTPUT_DIR`` sets the directory for
relative output paths.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__, _backend
from ._io import atomic_write_json, atomic_write_text, sha256_file
from .baselines import PslConfig
from .calibrate import Bounded, Selector
from .errors import SelgenError
from .evaluate import METHODS, apply_selector, evaluate, repeated_splits, reports_csv, run_method, whisker_summary
from .records import RiskBudget, load_dataset, split_labeled_fraction, write_dataset
from .simulator import CLAIMS, TrueRisk, WorldSpec, identity_world, mc_verify, sample_dataset

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_BOUND_FAIL = 3
EXIT_AUDIT_FAIL = 5

_NEEDS_F_M2 = ("semi-ms", "semi-double")


def _output_path(args, name: str) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    base = args.output_dir or os.environ.get("SELGEN_OUTPUT_DIR") or "."
    return Path(base) / p


def _versions() -> dict[str, str]:
    return {
        "selgen": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernel_backend": _backend.name(),
    }


def _write_manifest(args, out: Path, inputs: list[str], extra: dict[str, Any] | None = None) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "_argv")}
    manifest = {
        "command": args.command,
        "argv": list(args._argv),
        "config": config,
        "seed": getattr(args, "seed", None),
        "versions": _versions(),
        "inputs": {p: sha256_file(p) for p in inputs},
        "output": str(out),
    }
    if extra:
        manifest.update(extra)
    atomic_write_json(out.with_name(out.name + ".manifest.json"), manifest)


def _budget(args) -> RiskBudget:
    return RiskBudget.from_total(args.eps, args.delta, q=args.q, delta_w=args.delta_w)


def _load_world(args) -> WorldSpec:
    if args.world:
        with open(args.world, encoding="utf-8") as fh:
            w = WorldSpec.from_json(json.load(fh))
    else:
        w = identity_world()
    return w


# ------------------------------------------------------------------ commands


def cmd_calibrate(args) -> int:
    ds = load_dataset(args.data, "calibration")
    if args.method in _NEEDS_F_M2 and not ds.has_score("f_m2"):
        raise SelgenError(f"method {args.method} needs f_m2 on every record")
    if args.labeled_fraction is not None:
        ds = split_labeled_fraction(ds, args.labeled_fraction, args.seed)
    budget = _budget(args)
    res = run_method(args.method, ds, budget, args.score_key, PslConfig(args.tau_pl, not args.no_filter))
    out = _output_path(args, args.out)
    payload = {"method": args.method, "budget": budget.to_json(), **res.to_json()}
    atomic_write_json(out, payload)
    _write_manifest(args, out, [args.data])
    print(f"{res.bounded.value}: u_hat={res.u_hat:.6g} selector={res.selector.to_json()['terms']}")
    return EXIT_OK if res.bounded is Bounded.SUCCESS else EXIT_BOUND_FAIL


def _read_selector(path: str) -> Selector:
    with open(path, encoding="utf-8") as fh:
        return Selector.from_json(json.load(fh)["selector"])


def cmd_apply(args) -> int:
    sel = _read_selector(args.result)
    ds = load_dataset(args.data, "calibration")
    lines = "".join(json.dumps({"id": r.id, "decision": apply_selector(sel, r).value}) + "\n" for r in ds)
    out = _output_path(args, args.out)
    atomic_write_text(out, lines)
    _write_manifest(args, out, [args.result, args.data])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    sel = _read_selector(args.result)
    rep = evaluate(sel, load_dataset(args.data, "test"))
    out = _output_path(args, args.out)
    atomic_write_json(out, rep.to_json())
    _write_manifest(args, out, [args.result, args.data])
    fdr = "undefined" if rep.fdr_e is None else f"{rep.fdr_e:.4f}"
    print(f"fdr_e={fdr} efficiency={rep.efficiency:.4f} ({rep.n_selected}/{rep.n_test})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    w = _load_world(args)
    ds = sample_dataset(WorldSpec(**{**w.__dict__, "seed": args.seed}), args.n)
    out = _output_path(args, args.out)
    write_dataset(ds, out)
    _write_manifest(args, out, [args.world] if args.world else [], {"world": w.to_json()})
    return EXIT_OK


def cmd_verify_pac(args) -> int:
    w = _load_world(args)
    rep = mc_verify(
        args.claim, w, trials=args.trials, n_e=args.n_e, n_u=args.n_u, eps=args.eps,
        delta=args.delta, q=args.q, eps_e=args.eps_e, seed=args.seed,
    )
    out = _output_path(args, args.out)
    atomic_write_json(out, rep.to_json())
    _write_manifest(args, out, [args.world] if args.world else [], {"world": w.to_json()})
    print(f"{args.claim}: {rep.violations}/{rep.trials} violations (allowed {rep.allowed}) -> {'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_AUDIT_FAIL


def cmd_report(args) -> int:
    ds = load_dataset(args.data, "test")
    budget = _budget(args)
    truth = TrueRisk(_load_world(args)).fdr_e_at if args.world else None
    runs = []
    for method in args.methods.split(","):
        runs += repeated_splits(
            ds, method, budget, args.n_splits, args.seed, cal_fraction=args.cal_fraction,
            labeled_fraction=args.labeled_fraction, score_key=args.score_key,
            psl=PslConfig(args.tau_pl, not args.no_filter), true_risk=truth,
        )
    out = _output_path(args, args.out)
    atomic_write_text(out.with_suffix(".csv"), reports_csv(runs))
    summary = {"budget": budget.to_json(), "methods": whisker_summary(runs, args.eps, args.delta)}
    atomic_write_json(out.with_suffix(".json"), summary)
    _write_manifest(args, out.with_suffix(".json"), [args.data] + ([args.world] if args.world else []))
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _add_budget(p) -> None:
    p.add_argument("--eps", type=float, default=0.25, help="target FDR-E (default 0.25)")
    p.add_argument("--delta", type=float, default=0.02, help="total failure probability (default 0.02)")
    p.add_argument("--q", type=int, default=5, help="eps_e grid size (default 5)")
    p.add_argument("--delta-w", type=float, default=1e-5, help="visibility-weight share of delta")


def _add_method(p) -> None:
    p.add_argument("--score-key", default="f_m1", choices=("f_m1", "f_m2"))
    p.add_argument("--labeled-fraction", type=float, default=None, help="keep only this fraction of labels")
    p.add_argument("--tau-pl", type=float, default=0.9, help="pseudo-label threshold for psl")
    p.add_argument("--no-filter", action="store_true", help="psl: keep low-confidence unlabeled records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selgen", description="Selective generation with certified FDR-E.")
    parser.add_argument("--version", action="version", version=f"selgen {__version__}")
    parser.add_argument("--output-dir", default=None, help="directory for relative output paths")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="learn a selector from scored calibration data")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=METHODS, default="semi-ms")
    _add_method(p)
    _add_budget(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="result.json")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("apply", help="accept or abstain on each record")
    p.add_argument("--result", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="decisions.jsonl")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("evaluate", help="FDR-E and efficiency on labeled test data")
    p.add_argument("--result", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="sample a synthetic dataset")
    p.add_argument("--world", default=None, help="WorldSpec JSON (default: identity world)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="simulated.jsonl")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-pac", help="Monte Carlo audit of a guarantee")
    p.add_argument("--claim", choices=CLAIMS, required=True)
    p.add_argument("--world", default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--n-e", type=int, default=500)
    p.add_argument("--n-u", type=int, default=2000)
    p.add_argument("--eps-e", type=float, default=0.1)
    _add_budget(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="audit.json")
    p.set_defaults(func=cmd_verify_pac)

    p = sub.add_parser("report", help="repeated calibration/test splits")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", default="semi-ms")
    p.add_argument("--n-splits", type=int, default=100)
    p.add_argument("--cal-fraction", type=float, default=0.8)
    p.add_argument("--world", default=None, help="WorldSpec of simulated data, enables the true-risk audit")
    _add_method(p)
    _add_budget(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    if args.command == "report":
        for m in args.methods.split(","):
            if m not in METHODS:
                parser.error(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    try:
        return args.func(args)
    except (SelgenError, ValueError, FileNotFoundError) as exc:
        print(f"selgen: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"selgen: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
