"""Command-line front end.

    strsub solve  --instance inst.json
    strsub verify --model task_assignment --n 3 --m 3 --K 4 --seed 7
    strsub sweep  --model task_assignment --m 3 --K 4 --param L_hat --values 0.4,0.5 --seeds 0:20
    strsub gen    --model adaptive_measurement --K 3 --grid-points 11 --out inst.json

Exit codes: 0 success, 1 usage or parse error, 2 evaluation budget exceeded,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import io
import json
import math
import sys
import time

import numpy as np

from . import kernels
from .adaptive_measurement import (
    DEFAULT_GRID_POINTS,
    MeasurementInstance,
    MeasurementOracle,
    am_check_prior_condition,
    am_check_sigma_condition,
    am_go_inequality_terms,
    am_random_instance,
    am_verify_g1_equals_o1,
    uniform_grid,
)
from .core import DEFAULT_BUDGET, CountingOracle, InstanceTooLarge, InvariantViolation, ValueTable
from .instances import MODELS, ParseError, dump_instance, load_instance
from .optimize import bound_report, exhaustive_optimal, greedy
from .properties import (
    check_go_concavity,
    check_k_diminishing,
    check_k_monotone,
    check_k_submodular,
    check_postfix_restricted,
    compute_eta,
    compute_sigma_restricted,
)
from .task_assignment import (
    TaskAssignmentOracle,
    ta_check_diminishing_condition,
    ta_check_go_condition,
    ta_check_half_condition,
    ta_check_prior_condition,
    ta_random_instance,
)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_INVARIANT = 0, 1, 2, 3

CSV_COLUMNS = [
    "model", "param", "value", "seed", "K", "m", "n",
    "greedy_value", "optimal_value", "ratio",
    "factor_thm3", "eta", "factor_thm4", "sigma_hat", "factor_thm2",
    "satisfied_thm3", "satisfied_thm4",
    "k_monotone", "k_diminishing", "k_submodular", "go_concave", "go_margin",
    "cond_diminishing_margin", "cond_half_margin", "cond_prior_margin", "cond_go_margin",
    "cond_sigma_margin", "cond_eq17_margin", "g1_equals_o1",
]

SWEEP_PARAMS = {
    "task_assignment": {"L_hat": float, "p_high": float, "K": int, "m": int, "n": int},
    "adaptive_measurement": {"K": int, "grid_points": int, "sigma_sq_high": float, "sigma_order": str},
    "table": {"K": int},
}
FILE_SWEEP_PARAMS = {"K", "grid_points"}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _seed_list(text):
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=MODELS, help="model (taken from the instance file when given)")
    common.add_argument("--instance", help="instance file (JSON); otherwise an instance is generated")
    common.add_argument("--K", type=_positive_int, help="horizon (default: the instance's)")
    common.add_argument("--tol", type=_positive_float, default=1e-9)
    common.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--grid-points", type=_positive_int, help=f"measurement grid size (default {DEFAULT_GRID_POINTS})")
    common.add_argument("--go-index-oj", action="store_true", help="task GO condition with p^j(o_j) instead of p^j(o_i)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive_int, default=1)
    gen = common.add_argument_group("generator")
    gen.add_argument("--n", type=_positive_int, default=1, help="subtasks (task model)")
    gen.add_argument("--m", type=_positive_int, default=2, help="agents (task model)")
    gen.add_argument("--p-low", type=float, default=0.5)
    gen.add_argument("--p-high", type=float, default=0.9)
    gen.add_argument("--sigma-sq", type=_float_list, help="explicit noise variances, comma separated")
    gen.add_argument("--sigma-sq-low", type=_positive_float, default=0.25)
    gen.add_argument("--sigma-sq-high", type=_positive_float, default=4.0)
    gen.add_argument("--sigma-order", choices=("increasing", "decreasing", "random"), default="increasing")

    parser = _Parser(prog="strsub", description="Greedy vs. optimal string optimization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="greedy, exhaustive optimum and bound report")
    sub.add_parser("verify", parents=[common], help="full property and condition suite")
    sw = sub.add_parser("sweep", parents=[common], help="CSV rows over a parameter grid and seeds")
    sw.add_argument("--param", required=True)
    sw.add_argument("--values", required=True, help="comma separated values")
    sw.add_argument("--seeds", type=_seed_list, default=None, help="'0:20' or '1,2,3'; empty for none")
    sub.add_parser("gen", parents=[common], help="write a generated instance file")
    return parser


# ----------------------------------------------------------------- instances


def make_instance(args):
    """Return ``(model, instance, source)`` for the parsed arguments."""
    if args.instance:
        model, inst = load_instance(args.instance)
        if args.model and args.model != model:
            raise UsageError(f"--model {args.model} contradicts instance model {model}")
        if model == "adaptive_measurement" and args.grid_points:
            inst = MeasurementInstance(inst.sigma_sq, uniform_grid(args.grid_points))
        return model, inst, {"file": args.instance}
    model = args.model
    if model is None:
        raise UsageError("either --instance or --model is required")
    if model == "table":
        raise UsageError("the table model needs --instance")
    if model == "task_assignment":
        if args.K is None:
            raise UsageError("--K is required to generate a task instance")
        inst = ta_random_instance(args.seed, args.n, args.m, args.K, args.p_low, args.p_high)
        source = {"generator": "task_assignment", "seed": args.seed, "n": args.n, "m": args.m,
                  "K": args.K, "p_low": args.p_low, "p_high": args.p_high}
        return model, inst, source
    grid_points = args.grid_points or DEFAULT_GRID_POINTS
    if args.sigma_sq:
        inst = MeasurementInstance(tuple(args.sigma_sq), uniform_grid(grid_points))
        source = {"generator": "adaptive_measurement", "sigma_sq": list(args.sigma_sq), "grid_points": grid_points}
        return model, inst, source
    if args.K is None:
        raise UsageError("--K or --sigma-sq is required to generate a measurement instance")
    inst = am_random_instance(args.seed, args.K, grid_points, args.sigma_sq_low, args.sigma_sq_high, args.sigma_order)
    source = {"generator": "adaptive_measurement", "seed": args.seed, "K": args.K, "grid_points": grid_points,
              "sigma_sq_low": args.sigma_sq_low, "sigma_sq_high": args.sigma_sq_high, "sigma_order": args.sigma_order}
    return model, inst, source


def _horizon(model, inst):
    return inst.horizon if model == "table" else inst.K


def make_oracle(model, inst, K):
    if model == "table":
        return inst
    inst = inst.truncated(K)
    if model == "task_assignment":
        return TaskAssignmentOracle(inst)
    return MeasurementOracle(inst)


# ------------------------------------------------------------------ analysis


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def analyze(model, inst, K, *, tol, budget, threads, go_index_oj=False, full=True):
    """Run solvers (and with ``full`` the checkers); return ``(body, timings)``."""
    if K > _horizon(model, inst):
        raise UsageError(f"K={K} exceeds the instance horizon {_horizon(model, inst)}")
    oracle = CountingOracle(make_oracle(model, inst, K))
    timings = {}
    counts = {}

    t0 = time.perf_counter()
    trace = greedy(oracle, K)
    counts["greedy"] = oracle.count
    timings["greedy"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    before = oracle.count
    table = ValueTable.build(oracle, K, threads=threads, budget=budget)
    optimal = exhaustive_optimal(oracle, K, table=table)
    counts["enumeration"] = oracle.count - before
    timings["exhaustive"] = time.perf_counter() - t0

    slack = tol * max(1.0, abs(optimal.value))
    if optimal.value < trace.value - slack:
        raise InvariantViolation(f"optimal value {optimal.value} below greedy value {trace.value}")
    if oracle.inner.evaluate(trace.string) != trace.value:
        raise InvariantViolation("greedy value differs from re-evaluation of the greedy string")

    t0 = time.perf_counter()
    before = oracle.count
    bounds = bound_report(oracle, K, tol, trace=trace, optimal=optimal, table=table)
    eta = compute_eta(oracle, K, trace, optimal)
    sigma = compute_sigma_restricted(oracle, K, table=table)
    timings["bounds"] = time.perf_counter() - t0

    body = {
        "greedy": {
            "string": trace.string,
            "value": trace.value,
            "prefixes": trace.prefixes,
            "values": trace.values,
            "per_stage_argmax_ties": trace.per_stage_argmax_ties,
        },
        "optimal": optimal,
        "bounds": bounds,
        "curvatures": {"eta": eta, "sigma_hat": sigma},
    }

    if full:
        t0 = time.perf_counter()
        go = check_go_concavity(oracle, K, trace, optimal, tol)
        body["properties"] = {
            "k_monotone": check_k_monotone(oracle, K, tol, table=table),
            "k_diminishing": check_k_diminishing(oracle, K, tol, table=table),
            "k_submodular": check_k_submodular(oracle, K, tol, table=table),
            "postfix_monotone_restricted": check_postfix_restricted(oracle, K, tol, table=table),
            "go_concave": go,
        }
        body["conditions"] = _conditions(model, inst, K, trace, optimal, go, go_index_oj, tol)
        timings["properties"] = time.perf_counter() - t0
    counts["splices"] = oracle.count - before
    counts["total"] = oracle.count
    body["evaluations"] = counts
    return body, timings


def _conditions(model, inst, K, trace, optimal, go, go_index_oj, tol):
    if model == "table":
        return {}
    inst = inst.truncated(K)
    full_length = len(optimal.argmax) == K
    if model == "task_assignment":
        out = {
            "diminishing": ta_check_diminishing_condition(inst),
            "half": ta_check_half_condition(inst),
        }
        if inst.n != 1:
            out["prior"] = out["go"] = {"applicable": False, "reason": "n must be 1"}
            return out
        out["prior"] = ta_check_prior_condition(inst, trace.values[0])
        if not full_length:
            out["go"] = {"applicable": False, "reason": "optimal string shorter than K"}
            return out
        primary, other = ("oj", "oi") if go_index_oj else ("oi", "oj")
        out["go"] = ta_check_go_condition(inst, optimal, primary)
        alt = ta_check_go_condition(inst, optimal, other)
        if alt.margins != out["go"].margins:
            out["go_alternate"] = alt
        return out

    sd = [math.sqrt(s) for s in inst.sigma_sq]
    out = {
        "sigma_nondecreasing": am_check_sigma_condition(inst),
        "prior_eq17": am_check_prior_condition(inst, min(sd), max(sd)),
    }
    if not full_length:
        return out
    g1 = am_verify_g1_equals_o1(inst, optimal, trace)
    out["g1_equals_o1"] = g1
    out["stage1_inequality"] = {"value": g1.stage1_product, "holds": g1.stage1_product >= 0.0}
    stages = []
    for i in range(1, K):
        terms = am_go_inequality_terms(inst, trace, optimal, i)
        generic = go.stage_margins[i - 1] >= -tol
        stages.append({"terms": terms, "generic_holds": generic, "agrees": terms.holds == generic})
    out["go_product_form"] = stages
    return out


# ---------------------------------------------------------------- formatting


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def csv_row(model, inst, K, body, param="", value="", seed=""):
    b = body["bounds"]
    row = {c: None for c in CSV_COLUMNS}
    row.update(
        model=model, param=param, value=value, seed=seed, K=K,
        m=inst.alphabet_size if model == "table" else inst.m,
        n=inst.n if model == "task_assignment" else None,
        greedy_value=b.greedy_value, optimal_value=b.optimal_value, ratio=b.ratio,
        factor_thm3=b.factor_thm3, eta=b.eta, factor_thm4=b.factor_thm4,
        sigma_hat=b.sigma_hat, factor_thm2=b.factor_thm2,
        satisfied_thm3=b.satisfied_thm3, satisfied_thm4=b.satisfied_thm4,
    )
    props = body.get("properties")
    if props:
        go = props["go_concave"]
        row.update(
            k_monotone=props["k_monotone"].holds,
            k_diminishing=props["k_diminishing"].holds,
            k_submodular=props["k_submodular"].holds,
            go_concave=go.holds if go.applicable else None,
            go_margin=go.worst_margin if go.applicable else None,
        )
        cond = body["conditions"]

        def margin(key):
            c = cond.get(key)
            return getattr(c, "margin", None)

        row.update(
            cond_diminishing_margin=margin("diminishing"),
            cond_half_margin=margin("half"),
            cond_prior_margin=margin("prior"),
            cond_go_margin=margin("go"),
            cond_sigma_margin=margin("sigma_nondecreasing"),
            cond_eq17_margin=margin("prior_eq17"),
        )
        if "g1_equals_o1" in cond:
            row["g1_equals_o1"] = cond["g1_equals_o1"].equal
    return {k: _cell(v) for k, v in row.items()}


def write_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _config_echo(args, model, source, K):
    """Everything that determines the report body; threads and output path excluded."""
    return {
        "command": args.command,
        "model": model,
        "instance": source,
        "K": K,
        "tol": args.tol,
        "budget": args.budget,
        "go_index_variant": "oj" if args.go_index_oj else "oi",
    }


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands


def cmd_solve(args, full=False):
    model, inst, source = make_instance(args)
    K = args.K or _horizon(model, inst)
    body, timings = analyze(model, inst, K, tol=args.tol, budget=args.budget, threads=args.threads,
                            go_index_oj=args.go_index_oj, full=full)
    if (args.format or "json") == "csv":
        return write_csv([csv_row(model, inst, K, body)])
    report = {"config": _config_echo(args, model, source, K), **body}
    report["timings"] = {"threads": args.threads, "backend": kernels.BACKEND, "wall_clock_s": timings}
    return json.dumps(_jsonable(report), indent=2) + "\n"


def cmd_verify(args):
    return cmd_solve(args, full=True)


def _apply_param(args, model, name, value):
    a = copy.copy(args)
    if name == "K":
        a.K = value
    elif name == "L_hat":
        a.p_low = value
    elif name == "p_high":
        a.p_high = value
    elif name in ("m", "n", "grid_points", "sigma_sq_high", "sigma_order"):
        setattr(a, name, value)
    return a


def cmd_sweep(args):
    model = args.model
    if args.instance:
        model = load_instance(args.instance)[0]
    if model is None:
        raise UsageError("either --instance or --model is required")
    params = SWEEP_PARAMS[model]
    if args.param not in params:
        raise UsageError(f"unknown parameter name {args.param!r} for model {model}; "
                         f"expected one of {', '.join(sorted(params))}")
    if args.instance and args.param not in FILE_SWEEP_PARAMS:
        raise UsageError(f"parameter {args.param!r} needs a generated instance")
    kind = params[args.param]
    values = [kind(v.strip()) for v in args.values.split(",") if v.strip()]
    seeds = args.seeds
    if seeds is None:
        seeds = [None] if args.instance else [args.seed]
    rows = []
    for value in values:
        for seed in seeds:
            a = _apply_param(args, model, args.param, value)
            if seed is not None:
                a.seed = seed
            m_, inst, _ = make_instance(a)
            K = a.K or _horizon(m_, inst)
            body, _ = analyze(m_, inst, K, tol=a.tol, budget=a.budget, threads=a.threads,
                              go_index_oj=a.go_index_oj, full=True)
            rows.append(csv_row(m_, inst, K, body, args.param, _cell(value), "" if seed is None else seed))
    if args.format == "json":
        return json.dumps(rows, indent=2) + "\n"
    return write_csv(rows)


def cmd_gen(args):
    model, inst, _ = make_instance(args)
    return dump_instance(model, inst)


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep, "gen": cmd_gen}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        _emit(args, COMMANDS[args.command](args))
    except InstanceTooLarge as exc:
        print(f"strsub: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantViolation as exc:
        print(f"strsub: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ParseError, UsageError, ValueError, KeyError, OSError) as exc:
        print(f"strsub: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
