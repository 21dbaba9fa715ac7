"""Command-line interface.

Subcommands: check-params, defect, approximate, verify, audit, sweep.
Exit codes: 0 pass, 1 bound violation, 2 inadmissible/divergent parameters,
3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bounds, harness, inequality, model
from .direct_method import approximate as _approximate
from .errors import JensenLabError
from .space import draw_samples

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_INADMISSIBLE = 2
EXIT_RUNTIME = 3

#: Error codes that signal a parameter/convergence problem rather than a crash.
_PARAMETER_CODES = {
    "inadmissible", "divergent", "degenerate-parameter", "not-converged",
    "pairing", "out-of-regime", "family", "degenerate-scale",
}


def _exit_code(err: JensenLabError) -> int:
    return EXIT_INADMISSIBLE if err.code in _PARAMETER_CODES else EXIT_RUNTIME


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _apply_overrides(doc: dict, args) -> dict:
    doc = dict(doc)
    if getattr(args, "seed", None) is not None:
        doc.setdefault("plan", {})
        doc["plan"] = {**doc["plan"], "seed": args.seed}
    if getattr(args, "points", None) is not None:
        doc.setdefault("plan", {})
        doc["plan"] = {**doc["plan"], "count": args.points}
    if getattr(args, "force", False):
        doc["force"] = True
    return doc


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_check_params(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    cfg = harness.normalize_config(doc)
    p = cfg["params"]
    params = inequality.RhoParams(
        family=p["family"],
        rho1=model.complex_from_pair(p["rho1"]),
        rho2=model.complex_from_pair(p["rho2"]),
        alpha=float(p["alpha"]),
        beta=None if p["beta"] is None else float(p["beta"]),
    )
    adm = inequality.admissible(params)
    print(("admissible" if adm else "inadmissible") + ": " + adm.detail)
    return EXIT_PASS if adm else EXIT_INADMISSIBLE


def _cmd_defect(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    exp = harness.build_experiment(doc)
    triples = draw_samples(exp.space, exp.plan, arity=3)
    samples = [inequality.defect(exp.f, x, y, z, exp.params) for x, y, z in triples]
    if args.format == "json":
        payload = [{"family": s.family, "x_norm": s.x_norm, "y_norm": s.y_norm,
                    "z_norm": s.z_norm, "lhs": s.lhs_norm, "rhs": s.rhs_norm,
                    "defect": s.defect} for s in samples]
        _emit(harness.stable_json(payload), args.out)
    else:
        _emit(inequality.defect_samples_csv(samples), args.out)
    worst = max((s.defect for s in samples), default=0.0)
    print(f"defect: {len(samples)} triples, max defect {worst:.6g}", file=sys.stderr)
    return EXIT_PASS


def _cmd_approximate(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    exp = harness.build_experiment(doc)
    pts = draw_samples(exp.space, exp.plan, arity=1)
    reports = [_approximate(exp.f, x, exp.scheme, exp.tol,
                            max_n=int(exp.config["max_n"])) for x in pts]
    if args.format == "csv":
        header = ["index", "x_norm", "iterations", "converged", "last_residual"]
        rows = [{"index": i, "x_norm": exp.space.norm(r.point), "iterations": r.iterations,
                 "converged": r.converged,
                 "last_residual": r.residuals[-1] if r.residuals else 0.0}
                for i, r in enumerate(reports)]
        _emit(harness.csv_table(header, rows), args.out)
    else:
        _emit(harness.stable_json([r.to_json_dict() for r in reports]), args.out)
    bad = sum(1 for r in reports if not r.converged)
    print(f"approximate: {len(reports)} points, {bad} not converged", file=sys.stderr)
    return EXIT_PASS if bad == 0 else EXIT_INADMISSIBLE


def _cmd_verify(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    report = harness.run_verify(doc)
    _emit(harness.render_report(report, args.format), args.out)
    s = report.summary
    print(f"verify: {'PASS' if report.passed() else 'FAIL'} "
          f"max_violation={s['max_violation']:.6g} over {s['count']} points "
          f"({report.runtime_seconds:.2f}s)", file=sys.stderr)
    return EXIT_PASS if report.passed() else EXIT_VIOLATION


def _cmd_audit(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    exp = harness.build_experiment(doc)
    ctrl_cfg = exp.config["control"]
    if ctrl_cfg["kind"] != "power":
        print("audit: config must declare a power control", file=sys.stderr)
        return EXIT_RUNTIME
    control = bounds.ControlFunction.power(ctrl_cfg["theta"], ctrl_cfg["r"])
    pts = draw_samples(exp.space, exp.plan, arity=1)
    aud = bounds.audit(exp.f, exp.params, exp.scheme, control, pts,
                       tol=exp.tol, trunc_terms=int(exp.config["trunc_terms"]))
    payload = aud.to_json_dict()
    if args.format == "csv":
        header = ["which", "theta", "r", "rho2", "alpha", "beta",
                  "paper_constant", "derived_constant", "empirical_sup",
                  "derived_matches_paper"]
        row = {**payload, "derived_matches_paper": payload["verdicts"]["derived_matches_paper"]}
        _emit(harness.csv_table(header, [row]), args.out)
    else:
        _emit(harness.stable_json(payload), args.out)
    verdicts = aud.verdicts
    print(f"audit[{aud.which}]: paper={aud.paper_constant} derived={aud.derived_constant} "
          f"empirical_sup={aud.empirical_sup:.6g} match={verdicts['derived_matches_paper']}",
          file=sys.stderr)
    if isinstance(aud.derived_constant, str):
        return EXIT_INADMISSIBLE
    return EXIT_PASS if verdicts["empirical_le_derived"] else EXIT_VIOLATION


def _cmd_sweep(args) -> int:
    doc = _apply_overrides(_load_config(args.config), args)
    rows = harness.run_sweep(doc)
    _emit(harness.render_sweep(rows, args.format), args.out)
    print(f"sweep: {len(rows)} cells", file=sys.stderr)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jensenlab",
        description="Numerical verification of 3-variable Jensen rho-functional "
                    "inequality stability bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "check-params": _cmd_check_params,
        "defect": _cmd_defect,
        "approximate": _cmd_approximate,
        "verify": _cmd_verify,
        "audit": _cmd_audit,
        "sweep": _cmd_sweep,
    }
    for name, fn in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--seed", type=int, default=None, help="override plan seed")
        p.add_argument("--points", type=int, default=None, help="override plan count")
        p.add_argument("--format", choices=("json", "csv"),
                       default="csv" if name in ("defect", "sweep") else "json")
        p.add_argument("--out", default=None, help="output path (stdout if omitted)")
        p.add_argument("--force", action="store_true",
                       help="allow family/scheme cross-pairing")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except JensenLabError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return _exit_code(e)
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def entry():  # console_scripts hook
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
