"""Command-line experiments.

Exit codes: 0 ok, 2 usage, 3 input parse, 4 resource budget, 5 invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .circuit_ir import (
    BUDGET_SECONDS,
    PER_CNOT_SECONDS,
    count_resources,
    decompose,
    estimate_runtime,
    report_from_counts,
    serialize,
)
from .gf2_oracle import Gf2Vector, parse_system
from .linsolve_circuits import (
    Mode,
    Variant,
    build,
    built_counts,
    cached_build,
    deviation,
    predicted_counts,
    solve_instance,
)
from .simon_apps import (
    COHERENT,
    SAMPLED,
    GroverSimonConfig,
    alg_polyq2,
    check_test_restoration,
    epsilon_f,
    false_period_bound,
    grover_iterations,
    grover_meets_simon,
    make_fx,
    make_oracle,
    make_polyq2,
    parallel_simon,
    simon_marginal,
    theorem4_bound,
)
from .sparse_sim import ResourceLimitError

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4, 5

# n=64 rows at the parameter scale of 64-bit FX-style ciphers
PRESETS = ("DESX", "PRINCE", "PRIDE")
BUILD_LIMIT = 4096  # build circuits only while m*n stays below this


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def parse_range(text: str) -> list[int]:
    """``"3"`` or ``"2..4"`` (inclusive)."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad range {text!r}; use N or A..B") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"range {text!r} is empty or not positive")
    return list(range(lo, hi + 1))


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None


def _read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    return data


def _read_periods(path: str, n: int) -> list[Gf2Vector]:
    out = []
    for no, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if len(line) != n or set(line) - {"0", "1"}:
            raise InputError(f"{path}: line {no}: expected {n} characters from {{0,1}}, got {line!r}")
        out.append(Gf2Vector.from_string(line))
    return out


def _bits(v: int, n: int) -> str:
    """Bit string with element 0 first, matching the matrix file format."""
    return "".join(str((v >> i) & 1) for i in range(n))


def _cfg_int(cfg: dict, key: str, default: Any = None, minimum: int = 1) -> Any:
    val = cfg.get(key, default)
    if val is None:
        return None
    if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
        raise UsageError(f"config field {key!r} must be an integer >= {minimum}")
    return val


def _report(command: str, config: dict, body: dict) -> dict:
    return {"tool": "qlinsys", "version": __version__, "command": command, "config": config, **body}


def _emit(report: dict, rows: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        if rows:
            fields = list(rows[0])
            w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow(r)
        text = buf.getvalue()
    else:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- commands

def cmd_counts(args) -> tuple[dict, list[dict]]:
    variant = Variant(args.variant)
    ms, ns = parse_range(args.m), parse_range(args.n)
    rows = []
    for m in ms:
        for n in ns:
            circ, _ = build(variant, m, n)
            got = built_counts(circ)
            want = predicted_counts(variant, m, n)
            dev = deviation(variant, m, n)
            diff = {k: got[k] - want[k] for k in got}
            rows.append({
                "variant": variant.value, "m": m, "n": n,
                "built_cnot": got["CNOT"], "built_toffoli": got["TOFFOLI"], "built_fredkin": got["FREDKIN"],
                "predicted_cnot": want["CNOT"], "predicted_toffoli": want["TOFFOLI"], "predicted_fredkin": want["FREDKIN"],
                "deviation_cnot": diff["CNOT"], "deviation_toffoli": diff["TOFFOLI"], "deviation_fredkin": diff["FREDKIN"],
                "matches": diff == dev,
            })
    if not all(r["matches"] for r in rows):
        raise AssertionError("built counts differ from predicted counts by more than the deviation table")
    cfg = {"variant": variant.value, "m": ms, "n": ns}
    return _report("counts", cfg, {"rows": rows}), rows


def _estimate_row(label: str, n: int, c: int, per_cnot: float, budget: float) -> dict:
    m = c * n
    if m * n <= BUILD_LIMIT and n <= 16:
        circ, _ = build(Variant.ALG2, m, n)
        rep = estimate_runtime(count_resources(decompose(circ)), per_cnot, budget)
        method = "built"
        counts = built_counts(circ)
    else:
        counts = predicted_counts(Variant.ALG2, m, n)
        rep = estimate_runtime(report_from_counts(counts), per_cnot, budget)
        method = "formula"
    return {
        "label": label, "n": n, "m": m, "c": c, "method": method,
        "cnot": counts["CNOT"], "toffoli": counts["TOFFOLI"],
        "cnot_equivalent": rep.cnot_equivalent,
        "serial_seconds": rep.serial_seconds,
        "budget_seconds": rep.budget_seconds,
        "within_budget": rep.within_budget,
    }


def cmd_estimate(args) -> tuple[dict, list[dict]]:
    if args.n < 1 or args.c < 1:
        raise UsageError("n and c must be at least 1")
    if not args.per_cnot > 0 or not args.budget > 0:
        raise UsageError("per-cnot and budget must be positive")
    rows = [_estimate_row("custom", args.n, args.c, args.per_cnot, args.budget)]
    rows += [_estimate_row(p, 64, args.c, args.per_cnot, args.budget) for p in PRESETS]
    # cubic growth: doubling n at fixed c multiplies the CNOT-equivalent count by about 8
    def eq(n: int) -> int:
        return report_from_counts(predicted_counts(Variant.ALG2, args.c * n, n)).cnot_equivalent
    ratio = eq(2 * args.n) / eq(args.n)
    scaling = {
        "n": args.n, "ratio_at_2n": ratio,
        "leading_coefficient": 12 * args.c + 3,
        "leading_term": (12 * args.c + 3) * args.n ** 3,
        "cubic_within_15pct": abs(ratio / 8 - 1) <= 0.15,
    }
    cfg = {"n": args.n, "c": args.c, "per_cnot_seconds": args.per_cnot, "budget_seconds": args.budget}
    return _report("estimate", cfg, {"rows": rows, "scaling": scaling}), rows


def cmd_solve(args) -> tuple[dict, list[dict]]:
    try:
        A, b = parse_system(_read_text(args.matrix))
    except ValueError as e:
        raise InputError(f"{args.matrix}: {e}") from None
    if b is None:
        b = Gf2Vector(A.rows)
    res = solve_instance(args.variant, A, b, args.mode, args.seed)
    circ, _ = cached_build(Variant(args.variant), A.rows, A.cols)
    got = built_counts(circ)
    want = predicted_counts(args.variant, A.rows, A.cols)
    dev = deviation(args.variant, A.rows, A.cols)
    body = {
        "counts": got,
        "predicted_counts": want,
        "deviation": {k: got[k] - want[k] for k in got},
        "deviation_documented": all(got[k] - want[k] == dev[k] for k in got),
        "rank": res.rank,
        "consistent": res.consistent,
        "special": res.special.to_string() if res.special else None,
        "kernel_basis": [v.to_string() for v in res.kernel_basis],
        "solutions": sorted(_bits(x, A.cols) for x in res.solution_set) if res.solution_set is not None else None,
        "sample": res.solution_sample.to_string() if res.solution_sample else None,
        "data_register_restored": res.data_register_restored,
    }
    cfg = {"matrix": args.matrix, "variant": args.variant, "mode": args.mode, "seed": args.seed,
           "m": A.rows, "n": A.cols}
    if args.emit_circuit:
        Path(args.emit_circuit).write_text(serialize(circ))
    rows = [{"solution": s} for s in (body["solutions"] or ([body["sample"]] if body["sample"] else []))]
    return _report("solve", cfg, body), rows


def cmd_simon(args) -> tuple[dict, list[dict]]:
    if args.n < 1 or args.parallel < 1 or args.trials < 1:
        raise UsageError("n, parallel and trials must be positive")
    periods = _read_periods(args.periods, args.n) if args.periods else []
    try:
        oracle = make_oracle(args.n, periods, args.seed)
    except ValueError as e:
        raise InputError(str(e)) from None
    p0 = epsilon_f(oracle)
    rows = []
    for t in range(args.trials):
        res = parallel_simon(oracle, args.parallel, args.mode, args.seed + t)
        rows.append({
            "trial": t, "seed": args.seed + t, "rank": res.rank,
            "recovered": " ".join(v.to_string() for v in res.periods),
            "success": res.success,
        })
    ok = sum(r["success"] for r in rows)
    marg = simon_marginal(oracle)
    body = {
        "recovered": rows[-1]["recovered"].split() if rows else [],
        "success_rate": ok / args.trials,
        "exact_mass": {_bits(y, args.n): p for y, p in marg.items()},
        "bound": theorem4_bound(args.n, p0, args.parallel),
        "epsilon": p0,
        "params": {"n": args.n, "periods": [p.to_string() for p in periods], "parallel": args.parallel,
                   "trials": args.trials, "mode": args.mode},
        "seed": args.seed,
        "trials": rows,
    }
    cfg = {"n": args.n, "periods_file": args.periods, "parallel": args.parallel,
           "trials": args.trials, "mode": args.mode, "seed": args.seed}
    return _report("simon", cfg, body), rows


def cmd_grover_simon(args) -> tuple[dict, list[dict]]:
    raw = _read_json(args.config)
    m = _cfg_int(raw, "m", 2)
    n = _cfg_int(raw, "n", 2)
    ell = _cfg_int(raw, "ell", 4)
    pairs = _cfg_int(raw, "pairs", None)
    iters = _cfg_int(raw, "iterations", None)
    instances = _cfg_int(raw, "instances", 1)
    seed = _cfg_int(raw, "seed", args.seed, minimum=0)
    classifier = raw.get("classifier", "uncompute")
    if classifier not in ("uncompute", "literal"):
        raise UsageError("classifier must be 'uncompute' or 'literal'")
    rows = []
    for t in range(instances):
        fx = make_fx(m, n, seed + t)
        cfg = GroverSimonConfig(fx, ell, pairs, iters, seed + t, classifier)
        res = grover_meets_simon(cfg)
        rows.append({
            "instance": t, "seed": seed + t, "k0": fx.k0, "k1": _bits(fx.k1, n),
            "k0_found": res.k0_found, "k1_found": _bits(res.k1_found, n),
            "exact_mass": res.success_probability, "key_mass": res.key_probability,
        })
    mean = sum(r["exact_mass"] for r in rows) / instances
    resolved = {"m": m, "n": n, "ell": ell, "pairs": pairs, "iterations": iters or grover_iterations(m),
                "instances": instances, "seed": seed, "classifier": classifier}
    body = {
        "recovered": [[r["k0_found"], r["k1_found"]] for r in rows],
        "success_rate": sum(r["k0_found"] == r["k0"] and r["k1_found"] == r["k1"] for r in rows) / instances,
        "exact_mass": mean,
        "bound": 0.4,
        "params": resolved,
        "seed": seed,
        "instances": rows,
    }
    return _report("grover-simon", resolved, body), rows


def cmd_polyq2(args) -> tuple[dict, list[dict]]:
    raw = _read_json(args.config)
    if "c" not in raw:
        raise UsageError("config must set c explicitly")
    m = _cfg_int(raw, "m", 1)
    n = _cfg_int(raw, "n", 2)
    c = _cfg_int(raw, "c")
    instances = _cfg_int(raw, "instances", 1)
    seed = _cfg_int(raw, "seed", args.seed, minimum=0)
    engine = raw.get("engine", "auto")
    if engine not in ("auto", "gates", "factored"):
        raise UsageError("engine must be auto, gates or factored")
    rows = []
    for t in range(instances):
        cfg = make_polyq2(m, n, c, seed + t)
        res = alg_polyq2(cfg, engine)
        rows.append({
            "instance": t, "seed": seed + t, "i0": cfg.i0, "s": _bits(cfg.s, n),
            "i0_found": res.i0_found, "r": res.r,
            "s_found": _bits(res.s_found, n) if res.s_found is not None else "",
            "exact_mass": res.success_probability, "false_periodic": res.false_periodic,
            "promise": res.promise, "engine": res.engine,
        })
    restored = check_test_restoration(make_polyq2(m, n, c, seed))
    resolved = {"m": m, "n": n, "c": c, "instances": instances, "seed": seed, "engine": engine}
    body = {
        "recovered": [[r["i0_found"], r["r"], r["s_found"]] for r in rows],
        "success_rate": sum(r["i0_found"] == r["i0"] and r["r"] == 1 for r in rows) / instances,
        "exact_mass": sum(r["exact_mass"] for r in rows) / instances,
        "bound": false_period_bound(n, c),
        "restoration": restored,
        "params": resolved,
        "seed": seed,
        "instances": rows,
    }
    return _report("polyq2", resolved, body), rows


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="qlinsys", description="Reversible GF(2) solvers and Simon-type experiments.")
    p.add_argument("--version", action="version", version=f"qlinsys {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("counts", parents=[common], help="built vs closed-form gate counts")
    s.add_argument("--variant", choices=[v.value for v in Variant], default="alg2")
    s.add_argument("--m", required=True, help="N or A..B")
    s.add_argument("--n", required=True, help="N or A..B")
    s.set_defaults(func=cmd_counts)

    s = sub.add_parser("estimate", parents=[common], help="serial CNOT runtime against a time budget")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=int, default=1)
    s.add_argument("--per-cnot", type=float, default=PER_CNOT_SECONDS)
    s.add_argument("--budget", type=float, default=BUDGET_SECONDS)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("solve", parents=[common], help="solve one system from a matrix file")
    s.add_argument("--matrix", required=True)
    s.add_argument("--variant", choices=[v.value for v in Variant], default="alg2")
    s.add_argument("--mode", choices=[m.value for m in Mode], default="enumerate")
    s.add_argument("--emit-circuit", default=None, metavar="FILE", help="also write the solver circuit as text")
    s.add_argument("--report", dest="out", default=None, help="alias for --out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simon", parents=[common], help="parallel Simon period recovery")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--periods", default=None, help="file with one period bit string per line")
    s.add_argument("--parallel", type=int, required=True)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--mode", choices=(SAMPLED, COHERENT), default=SAMPLED)
    s.set_defaults(func=cmd_simon)

    s = sub.add_parser("grover-simon", parents=[common], help="FX key search toy")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_grover_simon)

    s = sub.add_parser("polyq2", parents=[common], help="periodic index search toy")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_polyq2)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        report, rows = args.func(args)
        _emit(report, rows, args.format, args.out)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ResourceLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except AssertionError as e:
        print(f"invariant breach: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
