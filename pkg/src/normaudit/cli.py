"""Command-line entry point: ``normaudit audit|geometry|singularity``.

Exit codes: 0 when every check met its expected verdict, 1 when at least
one did not, 2 on usage or load errors (message on standard error).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import io
import json
import math
import os
import sys
from typing import Dict, List, Optional

from . import __version__
from .audit import invariance_audit, normalization_check, wlog_equivalence_audit
from .catalog import MODEL_IDS, get_model
from .distributions import DistHandle
from .errors import EvalFailed, NormAuditError
from .geometry import Disconnected, convergence_experiment, experiment_is_monotone, strong_equivalence_check
from .quotient import GroupElement
from .singularity import (
    CANDIDATES,
    DIVERGENCE,
    TOL_LIMIT,
    OutcomeAtomDist,
    ate_scale_sensitivity,
    atom_sequence,
    fixed_point_extension_test,
    log_ate,
    log_system,
    non_unique_limit_test,
    scaling_family,
    trilemma,
)

SCHEMA_VERSION = 1
SEED_ENV = "NORM_AUDIT_SEED"
SCENARIOS = ("cross_sign", "within_sign", "strong_equiv")
DEMOS = ("fixed_point", "ate_scale", "limit_test", "trilemma")
DEFAULT_M_GRID = "1,10,1000,1000000"


class UsageError(Exception):
    pass


# -- serialization -----------------------------------------------------------


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if obj is Disconnected:
        return "Disconnected"
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, GroupElement):
        return {"family_id": obj.family_id, "params": list(obj.params)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return to_jsonable(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def envelope(config: Dict, results: List[Dict], status: int, timestamp: Optional[str] = None) -> Dict:
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "timestamp": timestamp,
        "config": config,
        "results": sorted(results, key=lambda r: r["check"]),
        "status": status,
    }


def report_body(report: Dict) -> Dict:
    """The envelope minus its timestamp: the part covered by determinism."""
    return {k: v for k, v in report.items() if k != "timestamp"}


def render_json(report: Dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["Disconnected" if v is Disconnected else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from exc


def _status(results) -> int:
    return 0 if all(r["ok"] for r in results) else 1


# -- audit -------------------------------------------------------------------


def _verdict_result(check, verdict, expected):
    r = {
        "check": check,
        "kind": "invariance",
        "counterfactual": verdict.counterfactual,
        "family_id": verdict.family_id,
        "verdict": verdict.status,
        "expected": expected,
        "ok": expected is None or verdict.status == expected,
        "value": verdict.value,
        "max_rel_deviation": verdict.max_rel_deviation,
        "low_confidence": verdict.low_confidence,
        "n_sampled": verdict.n_sampled,
    }
    if verdict.witness is not None:
        r["witness"] = {
            "element": verdict.witness.element,
            "value_at_theta": verdict.witness.value_at_theta,
            "value_at_transformed": verdict.witness.value_at_transformed,
        }
    return r


def _audit_targets(args):
    """``(label, family, counterfactuals, expected, normalizations, invariant, points)``."""
    if args.spec:
        from .dsl import load_model_spec

        spec = load_model_spec(args.spec)
        cfs = {name: spec.counterfactual(name) for name in spec.counterfactuals}
        return spec.name, spec.family(), cfs, dict(spec.expected), {}, None, [(spec.point(), spec.context)]
    entry = get_model(args.model)
    return (entry.model_id, entry.family, entry.counterfactuals, entry.expected,
            entry.normalizations, entry.orbit_invariant, entry.base_points)


def run_audit(args) -> int:
    if bool(args.model) == bool(args.spec):
        raise UsageError("audit needs exactly one of --model or --spec")
    label, family, cfs, expected, norms, orbit_inv, points = _audit_targets(args)
    if args.counterfactual:
        if args.counterfactual not in cfs:
            raise UsageError(f"{label} has no counterfactual {args.counterfactual!r}; choose from {sorted(cfs)}")
        selected = [args.counterfactual]
    else:
        selected = sorted(cfs)
    n, tol, seed = args.samples, args.tol, args.seed
    results = []
    for name in selected:
        q = cfs[name]
        for k, (theta, ctx) in enumerate(points):
            check = f"invariance/{name}/point{k}"
            try:
                v = invariance_audit(q, family, theta, ctx, n, tol, seed)
            except EvalFailed as exc:
                results.append({"check": check, "kind": "invariance", "ok": False, "error": str(exc)})
                continue
            results.append(_verdict_result(check, v, expected.get(name)))
    if not args.counterfactual:
        thetas = [t for t, _ in points]
        for nm_name, nm in sorted(norms.items()):
            rep = normalization_check(nm, family, thetas, min(n, 200), tol, seed, orbit_inv)
            results.append({
                "check": f"normalization/{nm_name}",
                "kind": "normalization",
                "ok": rep.passed,
                "collapse_residual": rep.collapse_residual,
                "idempotence_residual": rep.idempotence_residual,
                "separation_min_gap": rep.separation_min_gap,
                "separation_pairs": rep.separation_pairs,
            })
            for name in selected:
                for k, (theta, ctx) in enumerate(points):
                    check = f"wlog/{nm_name}/{name}/point{k}"
                    try:
                        w = wlog_equivalence_audit(cfs[name], family, nm, theta, ctx, n, tol, seed)
                    except EvalFailed as exc:
                        results.append({"check": check, "kind": "wlog", "ok": False, "error": str(exc)})
                        continue
                    results.append({
                        "check": check,
                        "kind": "wlog",
                        "ok": w.passed,
                        "before": w.before.status,
                        "after": w.after.status,
                        "value_gap": w.value_gap,
                    })
    status = _status(results)
    config = {"subcommand": "audit", "model": args.model, "spec": args.spec, "counterfactual": args.counterfactual,
              "samples": n, "tol": tol, "seed": seed, "format": args.format}
    report = envelope(config, results, status)
    if args.format == "csv":
        header = ["check", "ok", "verdict", "expected", "value", "max_rel_deviation"]
        rows = [[r["check"], r["ok"], r.get("verdict", ""), r.get("expected", ""),
                 r.get("value", ""), r.get("max_rel_deviation", "")] for r in report["results"]]
        _emit(render_csv(header, rows), args.out)
    else:
        _emit(render_json(report), args.out)
    return status


# -- geometry ----------------------------------------------------------------


def _parse_grid(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--M-grid must be comma-separated numbers, got {text!r}") from None


def run_geometry(args) -> int:
    if args.scenario not in SCENARIOS:
        raise UsageError(f"--scenario must be one of {SCENARIOS}")
    config = {"subcommand": "geometry", "scenario": args.scenario, "seed": args.seed, "format": args.format}
    if args.scenario == "strong_equiv":
        n_pairs = args.samples if args.samples_given else 100_000
        rep = strong_equivalence_check(n_pairs, args.dim, args.seed)
        config.update(samples=n_pairs, dim=args.dim)
        result = dict(to_jsonable(rep), check="strong_equiv", ok=rep.passed, violations=rep.violations)
        status = _status([result])
        _emit(render_json(envelope(config, [result], status)), args.out)
        return status
    try:
        rows = convergence_experiment(args.scenario, _parse_grid(args.M_grid))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    status = 0 if experiment_is_monotone(rows) else 1
    config["M_grid"] = args.M_grid
    if args.format == "json":
        results = [{"check": f"row{k:03d}", "ok": True, "M": r.M, "chart": r.chart, "great_circle": r.great_circle}
                   for k, r in enumerate(rows)]
        results.append({"check": "monotone", "ok": status == 0})
        _emit(render_json(envelope(config, results, status)), args.out)
    else:
        _emit(render_csv(["M", "chart", "great_circle"], [[repr(r.M), r.chart if r.chart is Disconnected else repr(r.chart),
                                                           repr(r.great_circle)] for r in rows]), args.out)
    return status


# -- singularity ---------------------------------------------------------------


def _demo_fixed_point(args):
    sys_ = log_system()
    g = scaling_family().element(args.scale)
    value = fixed_point_extension_test(sys_, args.candidate_value, g)
    expected = abs(math.log(args.scale))
    return [{"check": "fixed_point", "ok": abs(value - expected) <= 1e-12, "inconsistency": value,
             "expected": expected, "scale": args.scale, "candidate_value": args.candidate_value}]


def _demo_ate_scale(args):
    y0 = OutcomeAtomDist(args.p_zero, DistHandle("uniform", 0.5, 1.0))
    y1 = OutcomeAtomDist(0.0, DistHandle("uniform", 1.0, 2.0))
    r = ate_scale_sensitivity(y0, y1, args.candidate_value, args.scale, args.draws, args.seed)
    return [{"check": "ate_scale", "ok": r.within_3se, "shift": r.shift, "shift_se": r.shift_se,
             "expected_shift": r.expected_shift, "z_score": r.z_score, "ate_at_1": r.ate_at_1,
             "ate_at_a": r.ate_at_a, "draws": r.n_draws, "scale": r.scale_a, "p_zero": args.p_zero}]


def _demo_limit_test(args):
    seq1 = atom_sequence(args.p_zero, 1.0, 2.0)
    seq2 = atom_sequence(args.p_zero, 1.0, 2.0, scale=args.scale)
    v = non_unique_limit_test(log_ate, seq1, seq2, args.horizon, args.tol_limit, args.divergence)
    return [{"check": "limit_test", "ok": v.singular, "verdict": v.verdict, "tail1": v.tail1, "tail2": v.tail2,
             "gap": v.gap, "diverged": v.diverged, "horizon": v.horizon}]


def _demo_trilemma(args):
    if args.candidate not in CANDIDATES:
        raise UsageError(f"--candidate must be one of {CANDIDATES}")
    rep = trilemma(args.candidate, args.candidate_value, args.samples, args.seed, args.tol, args.horizon)
    return [{"check": "trilemma", "ok": rep.some_check_fails, "candidate": rep.candidate,
             "failed": rep.failed, "fidelity_gap": rep.fidelity_gap,
             "invariance_max_rel_deviation": rep.invariance.max_rel_deviation,
             "regularity_verdict": rep.regularity.verdict, "regularity_gap": rep.regularity.gap,
             "equivariance_gap_at_1_2": rep.equivariance_gap_at_1_2}]


def run_singularity(args) -> int:
    demos = {"fixed_point": _demo_fixed_point, "ate_scale": _demo_ate_scale,
             "limit_test": _demo_limit_test, "trilemma": _demo_trilemma}
    if args.demo not in demos:
        raise UsageError(f"--demo must be one of {DEMOS}")
    if not args.scale > 0:
        raise UsageError("--scale must be positive")
    if not 0.0 <= args.p_zero <= 1.0:
        raise UsageError("--p-zero must lie in [0, 1]")
    if args.draws < 2:
        raise UsageError("--draws must be at least 2")
    if args.horizon < 10:
        raise UsageError("--horizon must be at least 10")
    results = demos[args.demo](args)
    status = _status(results)
    config = {"subcommand": "singularity", "demo": args.demo, "seed": args.seed, "scale": args.scale,
              "p_zero": args.p_zero, "draws": args.draws, "candidate": args.candidate,
              "candidate_value": args.candidate_value, "horizon": args.horizon, "tol_limit": args.tol_limit,
              "divergence": args.divergence, "samples": args.samples, "tol": args.tol, "format": args.format}
    report = envelope(config, results, status)
    if args.format == "csv":
        keys = sorted(k for k in results[0] if not isinstance(results[0][k], (list, dict)))
        _emit(render_csv(keys, [[to_jsonable(r[k]) for k in keys] for r in results]), args.out)
    else:
        _emit(render_json(report), args.out)
    return status


# -- argument parsing ------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _common(p, samples_default=1000):
    p.add_argument("--samples", type=_positive_int, default=None, help=f"group samples (default {samples_default})")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normaudit", description="Normalization audits for structural models.")
    parser.add_argument("--version", action="version", version=f"normaudit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    a = sub.add_parser("audit", help="audit counterfactual invariance, normalizations and WLOG")
    a.add_argument("--model", help=f"catalog model: {', '.join(MODEL_IDS)}")
    a.add_argument("--spec", help="model spec file")
    a.add_argument("--counterfactual", help="audit only this counterfactual")
    _common(a)

    g = sub.add_parser("geometry", help="chart versus sphere experiments")
    g.add_argument("--scenario", required=True)
    g.add_argument("--M-grid", dest="M_grid", default=DEFAULT_M_GRID)
    g.add_argument("--dim", type=int, default=5, help="dimension for strong_equiv")
    _common(g)

    s = sub.add_parser("singularity", help="boundary singularity probes")
    s.add_argument("--demo", required=True)
    s.add_argument("--p-zero", dest="p_zero", type=float, default=0.5)
    s.add_argument("--scale", type=float, default=2.0)
    s.add_argument("--draws", type=int, default=100_000)
    s.add_argument("--candidate", default="log1p", help=f"trilemma candidate: {', '.join(CANDIDATES)}")
    s.add_argument("--candidate-value", dest="candidate_value", type=float, default=0.0,
                   help="value assigned to log(0) by patched extensions")
    s.add_argument("--horizon", type=int, default=30)
    s.add_argument("--tol-limit", dest="tol_limit", type=_positive_float, default=TOL_LIMIT)
    s.add_argument("--divergence", type=_positive_float, default=DIVERGENCE)
    _common(s)
    return parser


def _resolve_defaults(args):
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    args.samples_given = args.samples is not None
    if args.samples is None:
        args.samples = 1000
    if args.format is None:
        geometry_table = args.subcommand == "geometry" and args.scenario != "strong_equiv"
        args.format = "csv" if geometry_table else "json"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    runners = {"audit": run_audit, "geometry": run_geometry, "singularity": run_singularity}
    try:
        _resolve_defaults(args)
        return runners[args.subcommand](args)
    except (UsageError, NormAuditError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"normaudit: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
