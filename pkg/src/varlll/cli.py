"""Command line interface: ``varlll {solve,check,qbound,enumerate,estimate}``.

Exit codes: 0 success / condition holds, 1 input error, 2 cutoff / condition
fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from varlll import analysis, sampler
from varlll.errors import LLLError
from varlll.model import EventSystem, load_system, parse_fraction
from varlll.problems import Hypergraph, cnf_to_event_system, hypergraph_2coloring_system, parse_dimacs

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class UsageError(LLLError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- helpers ----------------------------------------------------------------


def rat(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def human_rat(q: Fraction) -> str:
    return f"{rat(q)} ({float(q):.6g})"


def enum_cap() -> int:
    """Tree-size cap for ``enumerate``; ``LLL_ENUM_CAP`` overrides the default."""
    raw = os.environ.get("LLL_ENUM_CAP")
    if raw is None:
        return analysis.ENUM_MAX_SIZE
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"LLL_ENUM_CAP must be an integer, got {raw!r}") from None


def detect_kind(path: Path, text: str) -> str:
    if path.suffix.lower() in (".cnf", ".dimacs"):
        return "dimacs"
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return "dimacs" if text.lstrip().startswith(("c", "p")) else "json"
    return "hypergraph" if isinstance(data, dict) and "num_vertices" in data else "json"


def load_instance(path: str, kind: str = "auto") -> EventSystem:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if kind == "auto":
        kind = detect_kind(p, text)
    if kind == "dimacs":
        return cnf_to_event_system(parse_dimacs(text))
    if kind == "hypergraph":
        return hypergraph_2coloring_system(Hypergraph.from_json(text))
    return load_system(text)


def parse_chi(source: str, system: EventSystem) -> tuple[Fraction, ...]:
    """``auto``, a file (JSON list or whitespace-separated), or a comma list."""
    if source == "auto":
        return analysis.default_chi(system)
    p = Path(source)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
        try:
            items = json.loads(text)
        except json.JSONDecodeError:
            items = text.split()
    else:
        items = [s for s in source.split(",") if s.strip()]
    chi = tuple(parse_fraction(str(x).strip()) for x in items)
    return analysis.validate_chi(chi, system.m)


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def resolve_seed(args) -> int:
    if args.entropy_seed:
        return secrets.randbits(64)
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    return args.seed


# -- commands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    system = load_instance(args.instance, args.kind)
    seed = resolve_seed(args)
    trace = sampler.run(system, seed, args.max_calls, snapshots=args.verify)
    report = {
        "command": "solve",
        "seed": seed,
        "outcome": trace.outcome.value,
        "resample_calls": trace.calls,
        "phases": len(trace.phase_boundaries),
        "assignment": {str(v + 1): x for v, x in enumerate(trace.final_assignment)},
    }
    if args.verify:
        report["checks"] = sampler.check_trace(trace, system)
    if args.trace:
        report["trace"] = trace.to_dict()
    if args.format == "json":
        text = to_json(report)
    elif args.format == "csv":
        text = to_csv(["variable", "value"], [[v + 1, x] for v, x in enumerate(trace.final_assignment)])
    else:
        lines = [
            f"outcome         {trace.outcome.value}",
            f"seed            {seed}",
            f"resample calls  {trace.calls}",
            f"phases          {len(trace.phase_boundaries)}",
            "assignment      " + " ".join(f"x{v + 1}={x}" for v, x in enumerate(trace.final_assignment)),
        ]
        if args.verify:
            lines += [f"check {k:18s}{'ok' if ok else 'FAIL'}" for k, ok in report["checks"].items()]
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    if args.verify and not all(report["checks"].values()):
        return EXIT_FAIL
    return EXIT_OK if trace.outcome is sampler.Outcome.SUCCESS else EXIT_FAIL


def cmd_check(args) -> int:
    system = load_instance(args.instance, args.kind)
    chi = parse_chi(args.chi, system)
    probs = system.probabilities()
    rep = analysis.check_lll_condition(system, chi, probs)
    M = analysis.m_bound(chi)
    rows = [
        {
            "event": i + 1,
            "neighborhood": [j + 1 for j in system.dependency.neighbors(i)],
            "chi": rat(chi[i]),
            "lhs": rat(e.lhs),
            "rhs": rat(e.rhs),
            "slack": rat(e.slack),
            "holds": e.holds,
        }
        for i, e in enumerate(rep.events)
    ]
    if args.format == "json":
        text = to_json({"command": "check", "holds": rep.holds, "M": rat(M), "events": rows})
    elif args.format == "csv":
        text = to_csv(
            ["event", "chi", "lhs", "rhs", "slack", "holds"],
            [[i + 1, float(chi[i]), float(e.lhs), float(e.rhs), float(e.slack), e.holds]
             for i, e in enumerate(rep.events)],
        )
    else:
        lines = [f"{'event':>5}  {'Pr(E_i)':>22}  {'chi_i prod(1-chi_j)':>26}  holds"]
        for i, e in enumerate(rep.events):
            lines.append(f"{i + 1:>5}  {human_rat(e.lhs):>22}  {human_rat(e.rhs):>26}  {'yes' if e.holds else 'NO'}")
        lines.append(f"M = {human_rat(M)}")
        lines.append("condition holds" if rep.holds else "condition FAILS")
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    return EXIT_OK if rep.holds else EXIT_FAIL


def cmd_qbound(args) -> int:
    system = load_instance(args.instance, args.kind)
    probs = system.probabilities()
    chi = parse_chi(args.chi, system)
    cond = analysis.check_lll_condition(system, chi, probs)
    table = analysis.q_table(system, probs, args.N)
    series = analysis.q_series(system, probs, args.N)
    agree = all(series[i][n] == table.value(n, i) for n in range(args.N + 1) for i in range(system.m) if n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        decay = analysis.decay_report(table, chi, cond)
    notes = [str(w.message) for w in caught]
    M = analysis.m_bound(chi)
    if args.format == "json":
        text = to_json({
            "command": "qbound",
            "condition_holds": cond.holds,
            "M": rat(M),
            "qtable": table.to_dict(),
            "decay": analysis.decay_to_dicts(decay),
            "series_matches_table": agree,
            "warnings": notes,
        })
    elif args.format == "csv":
        header = ["n"] + [f"Q_{i + 1}" for i in range(system.m)] + ["sum_Q", "M_pow_n", "ratio", "log_slope"]
        rows = [
            [r.n] + [float(table.value(r.n, i)) for i in range(system.m)]
            + [float(r.total), float(r.m_power), float(r.ratio), "" if r.log_slope is None else r.log_slope]
            for r in decay
        ]
        text = to_csv(header, rows)
    else:
        lines = [f"condition {'holds' if cond.holds else 'FAILS'}; M = {human_rat(M)}"]
        lines += [f"warning: {w}" for w in notes]
        for r in decay:
            slope = "" if r.log_slope is None else f"  slope {r.log_slope:+.4f}"
            lines.append(f"n={r.n:<3} sum Q = {float(r.total):.6g}  M^n = {float(r.m_power):.6g}  ratio = {float(r.ratio):.6g}{slope}")
        lines.append(f"log M = {math.log(M):+.4f}")
        lines.append("series/table cross-check " + ("passed" if agree else "FAILED"))
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    return EXIT_OK if agree else EXIT_FAIL


def cmd_enumerate(args) -> int:
    system = load_instance(args.instance, args.kind)
    probs = system.probabilities()
    root = args.root - 1
    if not 0 <= root < system.m:
        raise UsageError(f"--root must be in 1..{system.m}")
    cap = enum_cap()
    trees, weight = analysis.enumerate_valid_trees(system, root, args.size, probs, max_size=cap)
    oracle = analysis.oracle_check_q(system, probs, args.size, max_size=cap)
    seqs = [[l + 1 for l in t.preorder()] for t in trees]
    if args.format == "json":
        text = to_json({
            "command": "enumerate",
            "root": args.root,
            "size": args.size,
            "count": len(trees),
            "trees": seqs,
            "weight_sum": rat(weight),
            "oracle_ok": oracle.ok,
        })
    elif args.format == "csv":
        text = to_csv(["preorder", "weight"],
                      [[" ".join(map(str, s)), float(analysis.tree_weight(t, probs))] for s, t in zip(seqs, trees)])
    else:
        lines = [" ".join(map(str, s)) for s in seqs]
        lines.append(f"{len(trees)} trees, weight sum {human_rat(weight)}")
        lines.append("recurrence vs enumeration " + ("agrees" if oracle.ok else f"DISAGREES at {oracle.failures()}"))
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    return EXIT_OK if oracle.ok else EXIT_FAIL


def _estimate_chunk(system: EventSystem, seeds: Sequence[int], max_calls: int, verify: bool):
    calls = []
    failed: dict[str, int] = {}
    for s in seeds:
        trace = sampler.run(system, s, max_calls, snapshots=verify)
        calls.append(trace.calls)
        if verify:
            for k, ok in sampler.check_trace(trace, system).items():
                failed[k] = failed.get(k, 0) + (not ok)
    return calls, failed


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def estimate(
    system: EventSystem,
    runs: int,
    thresholds: Sequence[int],
    seed: int = 0,
    max_calls: int = sampler.DEFAULT_MAX_CALLS,
    chi: Sequence[Fraction] | None = None,
    verify: bool = False,
    workers: int = 1,
) -> dict:
    """Empirical ``Pr[at least n resample calls]`` over seeded replicas."""
    seeds = sampler.replica_seeds(seed, runs)
    if workers > 1 and runs > 1:
        size = math.ceil(runs / workers)
        chunks = [seeds[k:k + size] for k in range(0, runs, size)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_estimate_chunk, [system] * len(chunks), chunks,
                                  [max_calls] * len(chunks), [verify] * len(chunks)))
    else:
        parts = [_estimate_chunk(system, seeds, max_calls, verify)]
    calls = [c for part, _ in parts for c in part]
    failed: dict[str, int] = {}
    for _, f in parts:
        for k, v in f.items():
            failed[k] = failed.get(k, 0) + v

    reference = None
    if chi is not None:
        probs = system.probabilities()
        top = max(thresholds)
        if top >= 1:
            table = analysis.q_table(system, probs, top)
            forest = analysis.forest_series(analysis.q_series(system, probs, top))
        M = analysis.m_bound(chi)
        cond = analysis.check_lll_condition(system, chi, probs)
        reference = {"M": M, "condition_holds": cond.holds}
    rows = []
    for n in thresholds:
        k = sum(c >= n for c in calls)
        p = k / runs
        lo, hi = wilson_interval(k, runs)
        row = {"n": n, "count": k, "fraction": p, "sigma": math.sqrt(p * (1 - p) / runs), "ci95": [lo, hi]}
        if reference is not None:
            if n >= 1:
                row["sum_Q"] = table.total(n)
                row["forest_weight"] = forest[n]
            row["M_pow_n"] = reference["M"] ** n
        rows.append(row)
    out = {
        "runs": runs,
        "seed": seed,
        "max_calls": max_calls,
        "cutoffs": sum(c >= max_calls for c in calls),
        "mean_calls": sum(calls) / runs,
        "thresholds": rows,
    }
    if reference is not None:
        out["condition_holds"] = reference["condition_holds"]
        out["M"] = reference["M"]
    if verify:
        out["check_failures"] = failed
    return out


def cmd_estimate(args) -> int:
    system = load_instance(args.instance, args.kind)
    seed = resolve_seed(args)
    try:
        ths = sorted({int(t) for t in args.threshold.split(",")})
    except ValueError:
        raise UsageError(f"--threshold must be a comma list of integers, got {args.threshold!r}") from None
    if not ths or ths[0] < 0:
        raise UsageError("--threshold values must be >= 0")
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    chi = parse_chi(args.chi, system) if args.chi else None
    res = estimate(system, args.runs, ths, seed, args.max_calls, chi, args.verify, args.workers)

    def jsonable(v):
        if isinstance(v, Fraction):
            return rat(v)
        if isinstance(v, dict):
            return {k: jsonable(x) for k, x in v.items()}
        if isinstance(v, list):
            return [jsonable(x) for x in v]
        return v

    if args.format == "json":
        text = to_json({"command": "estimate", **jsonable(res)})
    elif args.format == "csv":
        header = ["n", "count", "fraction", "sigma", "ci_low", "ci_high", "sum_Q", "forest_weight", "M_pow_n"]
        rows = [
            [r["n"], r["count"], r["fraction"], r["sigma"], r["ci95"][0], r["ci95"][1]]
            + [float(r[k]) if k in r else "" for k in ("sum_Q", "forest_weight", "M_pow_n")]
            for r in res["thresholds"]
        ]
        text = to_csv(header, rows)
    else:
        lines = [f"{res['runs']} runs from seed {seed}, mean {res['mean_calls']:.4g} calls, {res['cutoffs']} cut off"]
        for r in res["thresholds"]:
            line = f"n={r['n']:<3} P^ = {r['fraction']:.6g}  95% CI [{r['ci95'][0]:.6g}, {r['ci95'][1]:.6g}]"
            if "sum_Q" in r:
                line += f"  sum Q = {float(r['sum_Q']):.6g}  forest = {float(r['forest_weight']):.6g}"
            if "M_pow_n" in r:
                line += f"  M^n = {float(r['M_pow_n']):.6g}"
            lines.append(line)
        if args.verify:
            bad = {k: v for k, v in res["check_failures"].items() if v}
            lines.append("all trace checks passed" if not bad else f"trace check failures: {bad}")
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    if args.verify and any(res["check_failures"].values()):
        return EXIT_FAIL
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--instance", required=True, help="instance file")
    common.add_argument("--kind", choices=["auto", "json", "dimacs", "hypergraph"], default="auto")
    common.add_argument("--format", choices=["json", "csv", "human"], default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--entropy-seed", action="store_true", help="draw the seed from the OS")
    common.add_argument("--max-calls", type=int, default=sampler.DEFAULT_MAX_CALLS)
    common.add_argument("--verify", action="store_true", help="record snapshots and check trace invariants")
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = _Parser(prog="varlll", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="run the resampling solver")
    p.add_argument("--trace", action="store_true", help="include the call trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", parents=[common], help="check the asymmetric LLL condition")
    p.add_argument("--chi", default="auto", help="'auto', a file, or a comma list like 1/4,1/3")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("qbound", parents=[common], help="exact Q table and decay report")
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--chi", default="auto")
    p.set_defaults(func=cmd_qbound)

    p = sub.add_parser("enumerate", parents=[common], help="list valid trees")
    p.add_argument("--root", type=int, required=True, help="root event (1-based)")
    p.add_argument("--size", type=int, required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("estimate", parents=[common], help="Monte Carlo tail of the call count")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--threshold", default="1,2,3,4,5", help="comma list of call counts n")
    p.add_argument("--chi", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LLLError, ValueError) as exc:
        print(f"varlll {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
