"""Command-line interface.

Structured results go to standard output as JSON; diagnostics go to
standard error. Exit codes: 0 success, 1 invalid input, 2 numerical
failure, 3 file I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from cobi import baseline, generator, pareto
from cobi.errors import CobiError, ValidationError
from cobi.problem import (
    evaluate,
    hypervolume,
    read_reference_csv,
    write_reference_csv,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(_clean(payload), sort_keys=True) + "\n")


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: expected comma-separated numbers, got {text!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{what}: entries must be finite")
    return vals


def _pair(text: str, what: str) -> tuple[float, float]:
    vals = _floats(text, what)
    if len(vals) != 2:
        raise ValidationError(f"{what}: expected two numbers, got {len(vals)}")
    return vals[0], vals[1]


def _epsilon(value: float) -> float:
    if not value > 0 or not math.isfinite(value):
        raise ValidationError(f"epsilon must be positive and finite, got {value}")
    return value


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return generator.loads(text)


# -- commands ---------------------------------------------------------------

def _recipe(entries: list[str]) -> list[str]:
    out = []
    for entry in entries:
        for item in entry.split(","):
            item = item.strip()
            if item:
                out.append(item.replace("+", ","))
    return out


def cmd_generate(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config: expected a JSON object")
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = generator.GeneratorConfig.from_dict(raw)
    else:
        peaks = tuple(int(v) for v in _floats(args.peaks, "--peaks"))
        cfg = generator.GeneratorConfig(
            dimension=args.n,
            peaks=peaks,
            constraints=_recipe(args.constraints or []),
            condition_range=_pair(args.kappa, "--kappa"),
            center_box=_pair(args.box, "--box"),
            offset_range=_pair(args.offsets, "--offsets"),
            feasibility=args.feasibility,
            seed=args.seed if args.seed is not None else 0,
            name=args.name,
        )
    prob = generator.generate(cfg)
    text = generator.dumps(prob)
    if args.out:
        _write_text(args.out, text)
        _emit({"out": args.out, "instance_id": prob.instance_id, "dimension": prob.dimension})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    prob = _load(args.instance)
    x = _floats(args.x, "--x")
    ev = evaluate(prob, x)
    _emit({
        "f": list(ev.f_raw if args.raw else ev.f),
        "f_raw": list(ev.f_raw),
        "g": list(ev.g_raw if args.raw else ev.g),
        "g_raw": list(ev.g_raw),
        "violation": ev.violation,
        "feasible": ev.feasible,
    })
    return EXIT_OK


def cmd_approx_ps(args) -> int:
    eps = _epsilon(args.epsilon)
    prob = _load(args.instance)
    approx = pareto.approx_ps(prob, eps)
    buf = io.StringIO()
    write_reference_csv(buf, approx.archive)
    if args.out:
        _write_text(args.out, buf.getvalue())
    summary = approx.summary(prob.instance_id)
    if args.summary:
        _write_text(args.summary, json.dumps(_clean(summary), sort_keys=True, indent=1) + "\n")
    if args.out:
        _emit(summary)
    else:
        sys.stdout.write(buf.getvalue())
    if approx.degenerate:
        print("no subproblem produced a feasible point; archive holds the anchor only", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_ideal_nadir(args) -> int:
    prob = _load(args.instance)
    ideal, nadir = pareto.compute_ideal_nadir(prob)
    _emit({"instance_id": prob.instance_id, "ideal": list(ideal), "nadir": list(nadir)})
    return EXIT_OK


def _read_points(path: str) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        _, f = read_reference_csv(fh)
    return f


def cmd_hv(args) -> int:
    ref_point = _pair(args.refpoint, "--refpoint")
    pts = _read_points(args.points)
    out = {"refpoint": list(ref_point), "hv": hypervolume(pts, ref_point)}
    if args.ref:
        ref_hv = hypervolume(_read_points(args.ref), ref_point)
        out["ref_hv"] = ref_hv
        out["gap"] = ref_hv - out["hv"]
    _emit(out)
    return EXIT_OK


def cmd_classify(args) -> int:
    eps = _epsilon(args.epsilon)
    prob = _load(args.instance)
    label = pareto.classify(prob, eps)
    _emit({"instance_id": prob.instance_id, "epsilon": eps, "type": label.value})
    return EXIT_OK


def cmd_run_baseline(args) -> int:
    prob = _load(args.instance)
    if args.budget < 1:
        raise ValidationError("--budget must be at least 1")
    ideal, nadir = pareto.compute_ideal_nadir(prob)
    point = (float(nadir[0]), float(nadir[1]))
    ref_hv = math.nan
    if args.reference:
        ref_hv = hypervolume(_read_points(args.reference), point)
    reference = baseline.Reference(point, ref_hv)
    trace = baseline.run_baseline(prob, args.algo, args.budget, args.seed, reference, args.population)
    if args.trace:
        _write_text(args.trace, trace.to_csv())
    final = trace.samples[-1]
    _emit({
        "instance_id": prob.instance_id,
        "optimizer": trace.optimizer,
        "seed": trace.seed,
        "budget": trace.budget,
        "evals": final[0],
        "hv": final[1],
        "gap": final[2],
        "archive_size": len(trace.archive),
        "refpoint": list(point),
    })
    return EXIT_OK


def cmd_plot_data(args) -> int:
    prob = _load(args.instance)
    if prob.dimension != 2:
        raise ValidationError(f"plot-data needs a two-dimensional instance, got n={prob.dimension}")
    if args.grid < 2:
        raise ValidationError("--grid must be at least 2")
    lo, hi = prob.search_box()
    g1, g2 = np.meshgrid(np.linspace(lo[0], hi[0], args.grid), np.linspace(lo[1], hi[1], args.grid))
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    f_raw = prob.raw_objectives(pts)
    g_raw = prob.constraints.raw_values(pts)
    feas = prob.constraints.feasible_mask(pts)
    p = len(prob.constraints)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x1", "x2", "f1", "f2"] + [f"g{k + 1}" for k in range(p)] + ["feasible"])
    for k in range(len(pts)):
        row = [format(float(v), ".17g") for v in (*pts[k], *f_raw[k], *g_raw[k])]
        w.writerow(row + [int(feas[k])])
    if args.out:
        _write_text(args.out, buf.getvalue())
        _emit({"out": args.out, "rows": len(pts), "constraints": p})
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cobi", description="Constrained bi-objective test problems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate an instance document")
    p.add_argument("--config", help="JSON file with generator settings")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--peaks", default="1,1", help="peak counts of f1,f2")
    p.add_argument("--constraints", action="append",
                   help="comma list of linear|quadratic|box|multipeak:kind+kind")
    p.add_argument("--kappa", default="1,100", help="condition number range")
    p.add_argument("--box", default="-5,5", help="center box lower,upper")
    p.add_argument("--offsets", default="0,0", help="peak offset range")
    p.add_argument("--feasibility", default="anchor", choices=["anchor", "none"])
    p.add_argument("--name", default="")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="evaluate a point")
    p.add_argument("--instance", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--raw", action="store_true", help="report untransformed values as f and g")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("approx-ps", help="reference Pareto set approximation")
    p.add_argument("--instance", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_approx_ps)

    p = sub.add_parser("ideal-nadir", help="ideal and nadir points")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_ideal_nadir)

    p = sub.add_parser("hv", help="hypervolume of a point set")
    p.add_argument("--points", required=True)
    p.add_argument("--refpoint", required=True)
    p.add_argument("--ref", help="reference set CSV; adds ref_hv and gap")
    p.set_defaults(func=cmd_hv)

    p = sub.add_parser("classify", help="Type I-IV classification")
    p.add_argument("--instance", required=True)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("run-baseline", help="run a baseline optimizer")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", choices=sorted(baseline.OPTIMIZERS), default="nsga2lite")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", help="reference set CSV for the hypervolume gap")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_run_baseline)

    p = sub.add_parser("plot-data", help="landscape grid for two-dimensional instances")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", type=int, default=401)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CobiError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
