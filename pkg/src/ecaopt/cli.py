"""Command-line front end.

Every command prints a JSON run report (or CSV for ``sweep``).  Exit codes:
0 success, 2 usage error, 3 bad input data, 4 capability limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import connectivity, generators, greedy, mip, oracle, preprocessing
from .instance import InstanceError, load_instance, serialize_instance
from .solution import evaluate

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CAPABILITY = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Timer:
    def __init__(self):
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + max(0.0, time.perf_counter() - start)


def _report(command, instance, parameters, timer, results) -> dict:
    return {
        "command": command,
        "instance_digest": instance.digest if instance is not None else None,
        "parameters": parameters,
        "timings": timer.phases,
        "results": results,
    }


def _load(path, timer):
    with timer.phase("parse"):
        try:
            return load_instance(path)
        except FileNotFoundError:
            raise CliError(f"no such instance: {path}", EXIT_DATA) from None
        except IsADirectoryError:
            raise CliError(f"no such instance: {path} is a directory", EXIT_DATA) from None
        except InstanceError as exc:
            raise CliError(f"invalid instance {path}: {exc}", EXIT_DATA) from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


# -- commands -----------------------------------------------------------------------


def cmd_compute(args) -> int:
    timer = _Timer()
    inst = _load(args.instance, timer)
    selected = [s for s in args.select.split(",") if s] if args.select else []
    with timer.phase("solve"):
        try:
            sol = evaluate(inst, selected, with_f_t=args.per_target, threads=args.threads)
        except InstanceError as exc:
            raise CliError(str(exc), EXIT_DATA) from None
    results = {"eca": sol.eca, "eca_squared": sol.eca_squared, "selected": list(sol.selected)}
    if args.area is not None:
        try:
            results["pc"] = connectivity.pc(connectivity.EcaValue(sol.eca_squared), args.area)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
    if args.per_target:
        results["per_target"] = [{"target": k, "f_t": v} for k, v in sol.f_t.items()]
    params = {"area": args.area, "per_target": args.per_target, "select": selected}
    _emit(_dump(_report("compute", inst, params, timer, results)), args.out)
    return 0


def _pct(before: int, after: int) -> float:
    return 0.0 if before == 0 else 100.0 * (before - after) / before


def preprocess_summary(inst, reductions, timer) -> dict:
    rows = []
    if inst.n >= 2:
        for t in range(inst.n):
            red = reductions[t]
            rows.append({
                "target": inst.vertices[t].id,
                "strong": len(red.strong_arcs),
                "useless": len(red.useless_arcs),
                "vertices": len(red.vertices),
                "arcs": len(red.arcs),
            })
    with timer.phase("model-build"):
        full = mip.build_model(inst).size
        reduced = mip.build_model(inst, reductions).size
    return {
        "targets": rows,
        "aggregate": {
            "strong": sum(r["strong"] for r in rows),
            "useless": sum(r["useless"] for r in rows),
            "model_unreduced": full,
            "model_reduced": reduced,
            "reduction_percent": {k: _pct(full[k], reduced[k]) for k in full},
        },
    }


def cmd_preprocess(args) -> int:
    timer = _Timer()
    inst = _load(args.instance, timer)
    with timer.phase("preprocess"):
        reductions = preprocessing.reduce_all(inst, threads=args.threads)
    results = preprocess_summary(inst, reductions, timer)
    if args.csv:
        lines = ["target,strong,useless,vertices,arcs"]
        lines += [f"{r['target']},{r['strong']},{r['useless']},{r['vertices']},{r['arcs']}"
                  for r in results["targets"]]
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit(_dump(_report("preprocess", inst, {}, timer, results)), args.out)
    return 0


def _sidecar(path: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def cmd_solve(args) -> int:
    timer = _Timer()
    inst = _load(args.instance, timer)
    budget = inst.budget if args.budget is None else args.budget
    params = {"algorithm": args.algorithm, "budget": budget, "preprocess": args.preprocess}
    results: dict = {}
    if args.algorithm == "mip-export":
        if not args.out:
            raise CliError("mip-export needs --out for the model file", EXIT_USAGE)
        params["format"] = args.format
        reductions = None
        if args.preprocess == "on":
            with timer.phase("preprocess"):
                reductions = preprocessing.reduce_all(inst, threads=args.threads)
        with timer.phase("model-build"):
            model = mip.build_model(inst, reductions, budget)
            text = mip.emit_lp_format(model) if args.format == "lp" else mip.emit_mps_format(model)
        Path(args.out).write_text(text, encoding="utf-8")
        meta = _sidecar(args.out)
        meta.write_text(json.dumps(model.metadata(), indent=2) + "\n", encoding="utf-8")
        results = {"model": args.out, "metadata": str(meta), "size": model.size,
                   "bytes": len(text.encode())}
        sys.stdout.write(_dump(_report("solve", inst, params, timer, results)))
        return 0

    with timer.phase("solve"):
        if args.algorithm == "exhaustive":
            try:
                sol, evaluated = oracle.exhaustive_search(inst, budget, args.cap, args.threads)
            except oracle.OracleCapError as exc:
                raise CliError(str(exc), EXIT_CAPABILITY) from None
            results = {"solution": sol.to_dict(), "evaluated_subsets": evaluated}
        else:
            sol, trace = greedy.run(args.algorithm, inst, budget, threads=args.threads)
            results = {"solution": sol.to_dict(), "trace": [s.__dict__ for s in trace.steps]}
            if args.trace:
                Path(args.trace).write_text(trace.to_csv(), encoding="utf-8")
    _emit(_dump(_report("solve", inst, params, timer, results)), args.out)
    return 0


def parse_budgets(text: str) -> list[float]:
    """``"1,2,5"`` or ``"1:10"`` (inclusive, step 1) or ``"0:10:2"``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                bits = [float(b) for b in part.split(":")]
                if len(bits) not in (2, 3):
                    raise ValueError(part)
                lo, hi = bits[0], bits[1]
                step = bits[2] if len(bits) == 3 else 1.0
                if step <= 0:
                    raise ValueError(part)
                n = int(math.floor((hi - lo) / step + 1e-9)) + 1
                out.extend(lo + i * step for i in range(max(0, n)))
            else:
                out.append(float(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget list {text!r}") from None
    if not out or any(not (b >= 0) or math.isinf(b) for b in out):
        raise argparse.ArgumentTypeError(f"budgets must be finite and >= 0: {text!r}")
    return out


def cmd_sweep(args) -> int:
    timer = _Timer()
    inst = _load(args.instance, timer)
    with timer.phase("solve"):
        try:
            rep = oracle.budget_sweep(inst, args.budgets, cap=args.cap, threads=args.threads)
        except oracle.OracleCapError as exc:
            raise CliError(str(exc), EXIT_CAPABILITY) from None
    _emit(rep.to_csv(), args.out)
    sys.stderr.write(rep.summary_csv())
    if args.report:
        results = {"baseline_eca": rep.baseline_eca, "evaluated_subsets": rep.evaluated,
                   "rows": [dict(zip(rep.COLUMNS, r.as_csv_row())) for r in rep.rows],
                   "summary": [{"algorithm": h, "min_ratio": lo, "avg_ratio": avg}
                               for h, lo, avg in rep.summary()]}
        params = {"budgets": args.budgets, "cap": args.cap}
        Path(args.report).write_text(_dump(_report("sweep", inst, params, timer, results)), encoding="utf-8")
    return 0


def cmd_generate(args) -> int:
    try:
        params = generators.GeneratorParams(
            family=args.family, k=args.k, epsilon=args.eps, n=args.n,
            mean_degree=args.degree, p=args.p, seed=args.seed, budget=args.budget)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    try:
        inst = params.build()
    except InstanceError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    _emit(serialize_instance(inst) + "\n", args.out)
    return 0


# -- parser --------------------------------------------------------------------------


def _threads_default() -> int:
    raw = os.environ.get("ECAOPT_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"ECAOPT_THREADS must be a positive integer, got {raw!r}", EXIT_USAGE) from None
    if n < 1:
        raise CliError(f"ECAOPT_THREADS must be a positive integer, got {raw!r}", EXIT_USAGE)
    return n


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return n


def _nonneg_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not x >= 0 or math.isinf(x):
        raise argparse.ArgumentTypeError(f"expected a finite number >= 0, got {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $ECAOPT_THREADS or 1)")

    p = argparse.ArgumentParser(prog="ecaopt", description="Budgeted ECA improvement toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="ECA, ECA^2 and PC of an instance")
    c.add_argument("instance")
    c.add_argument("--area", type=float, help="landscape area for PC")
    c.add_argument("--per-target", action="store_true", help="include the f_t table")
    c.add_argument("--select", help="comma-separated option ids to apply first")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compute)

    pp = sub.add_parser("preprocess", parents=[common], help="strong/useless arcs and model reduction")
    pp.add_argument("instance")
    pp.add_argument("--csv", help="write the per-target table here")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("solve", parents=[common], help="run a heuristic, the oracle, or export the MIP")
    s.add_argument("instance")
    s.add_argument("--algorithm", required=True,
                   choices=["ig", "dg", "si", "sd", "exhaustive", "mip-export"])
    s.add_argument("--budget", type=_nonneg_float, help="overrides the instance budget")
    s.add_argument("--preprocess", choices=["on", "off"], default="off")
    s.add_argument("--format", choices=["lp", "mps"], default="lp")
    s.add_argument("--cap", type=_positive_int, default=oracle.DEFAULT_CAP)
    s.add_argument("--trace", help="write the greedy trace CSV here")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", parents=[common], help="oracle vs heuristics over budgets (CSV)")
    w.add_argument("instance")
    w.add_argument("--budgets", type=parse_budgets, required=True, help='e.g. "1:10" or "1,2,4"')
    w.add_argument("--cap", type=_positive_int, default=oracle.DEFAULT_CAP)
    w.add_argument("--report", help="also write a JSON run report here")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", help="write a generated instance as JSON")
    g.add_argument("--family", required=True, choices=list(generators.FAMILIES))
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--eps", type=float, default=0.01)
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--degree", type=float, default=6.0)
    g.add_argument("--p", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=_nonneg_float, default=0.0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate, threads=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = _threads_default()
        return args.func(args)
    except CliError as exc:
        print(f"ecaopt: error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"ecaopt: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
