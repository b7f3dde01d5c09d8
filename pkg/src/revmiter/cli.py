"""Command-line front end: ``revmiter check|simplify|miter|gen|mutate|stats``.

Exit codes of ``check``: 0 Equivalent, 1 NotEquivalent, 2 Inconclusive or
any error.  Only the report goes to standard output; diagnostics go to
standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import __version__
from .circuit import (
    Circuit,
    CircuitError,
    GateKind,
    is_conventional,
    is_conventional_circuit,
    read_circuit_file,
    write_circuit,
)
from .miter import MiterVariant, build_miter
from .verdict import Status, Verdict

DEFAULT_SEED = 2024
METHODS = ("sat", "bdd", "cec", "quantum", "adaptive", "auto")
EXIT_CODES = {Status.EQUIVALENT: 0, Status.NOT_EQUIVALENT: 1, Status.INCONCLUSIVE: 2}

log = logging.getLogger("revmiter")


@dataclass
class CheckReport:
    verdict: str
    method: str
    variant: str
    seed: int
    gates_before: int
    gates_after: int | None
    wall_time_s: float
    counterexample: str | None = None
    witness: int | None = None
    reason: str = ""
    trace: list[dict] | None = None
    stats: dict = field(default_factory=dict)

    def to_text(self) -> str:
        rows = [("verdict", self.verdict), ("method", self.method), ("variant", self.variant),
                ("seed", self.seed), ("gates_before", self.gates_before),
                ("gates_after", self.gates_after), ("wall_time_s", f"{self.wall_time_s:.3f}")]
        if self.counterexample is not None:
            rows.append(("counterexample", self.counterexample))
        if self.witness is not None:
            rows.append(("witness", self.witness))
        if self.reason:
            rows.append(("reason", self.reason))
        out = [f"{k}: {v}" for k, v in rows]
        for s in self.trace or ():
            engine = f" [{s['engine']}]" if s.get("engine") else ""
            out.append(f"  step {s['step']} {s['name']}: {s['gates_before']} -> "
                       f"{s['gates_after']} gates{engine}: {s['outcome']}")
        return "\n".join(out)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


def _jsonable(stats: dict) -> dict:
    return {k: v for k, v in stats.items() if isinstance(v, (int, float, str, bool, type(None)))}


def report_from_verdict(v: Verdict, method: str, variant: MiterVariant, seed: int,
                        gates_before: int, wall: float, trace=None) -> CheckReport:
    after = v.stats.get("simplified_gates")
    if trace is not None and trace.step(2) is not None:
        after = trace.step(2).gates_after
    return CheckReport(
        verdict=v.status.value, method=method, variant=variant.value, seed=seed,
        gates_before=gates_before, gates_after=after, wall_time_s=wall,
        counterexample=v.counterexample_bits(), witness=v.witness, reason=v.reason,
        trace=trace.as_list() if trace is not None else None, stats=_jsonable(v.stats))


def run_check(c1: Circuit, c2: Circuit, method: str = "auto", variant: str = "C1_C2inv", *,
              timeout: float | None = None, seed: int = DEFAULT_SEED, rounds: int | None = None,
              solver_cmd: str | None = None, simplify: bool = True,
              portfolio: bool = False) -> CheckReport:
    """Run one engine on two circuits and package the outcome."""
    from . import rewrite
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    t0 = time.perf_counter()
    conventional = is_conventional_circuit(c1) and is_conventional_circuit(c2)
    if method == "auto":
        method = "cec" if conventional else "adaptive"
    budget = rewrite.DEFAULT_BUDGET if rounds is None else rounds
    if variant == "auto":
        chosen, _, _ = rewrite.best_variant_simplification(c1, c2, budget)
    else:
        chosen = MiterVariant.parse(variant)
    if method in ("sat", "bdd", "cec") and not conventional:
        raise CircuitError(f"method {method} needs conventional circuits; use adaptive or quantum")
    trace = None
    if method == "sat":
        from .satenc import check_sat
        v = check_sat(c1, c2, variant=chosen, simplify=simplify, timeout=timeout,
                      solver_cmd=solver_cmd, budget=budget)
    elif method == "bdd":
        from .bdd import check_bdd
        v = check_bdd(c1, c2, variant=chosen, simplify=simplify, timeout=timeout, budget=budget)
    elif method == "cec":
        from .cec import check_cec
        v = check_cec(c1, c2, variant=chosen, simplify=simplify, timeout=timeout, seed=seed,
                      budget=budget)
    elif method == "quantum":
        from .semantics import check_quantum
        v = check_quantum(c1, c2, variant=chosen)
    elif method == "adaptive":
        from .adaptive import adaptive_check
        v, trace = adaptive_check(c1, c2, variant=chosen, timeout=timeout, seed=seed,
                                  budget=budget, portfolio=portfolio)
    else:
        raise ValueError(f"unknown method {method!r}")
    return report_from_verdict(v, method, chosen, seed, len(c1) + len(c2),
                               time.perf_counter() - t0, trace)


# subcommands ----------------------------------------------------------------------------

def _emit_circuit(c: Circuit, path: str | None) -> None:
    text = write_circuit(c)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_check(args) -> int:
    c1, c2 = read_circuit_file(args.file_a), read_circuit_file(args.file_b)
    rep = run_check(c1, c2, args.method, args.variant, timeout=args.timeout, seed=args.seed,
                    rounds=args.rounds, solver_cmd=args.solver_cmd,
                    simplify=not args.no_simplify, portfolio=args.portfolio)
    print(rep.to_json() if args.format == "json-lines" else rep.to_text())
    return EXIT_CODES[Status(rep.verdict)]


def cmd_simplify(args) -> int:
    from .rewrite import DEFAULT_BUDGET, simplify
    c = read_circuit_file(args.file)
    s, rep = simplify(c, DEFAULT_BUDGET if args.rounds is None else args.rounds, miter=args.miter)
    _emit_circuit(s, args.output)
    d = {"file": args.file, "reductions": rep.gates_before - rep.gates_after, **rep.as_dict()}
    if args.format == "json-lines":
        print(json.dumps(_jsonable(d), sort_keys=True))
    else:
        for k, v in _jsonable(d).items():
            print(f"{k}: {v}")
    return 0


def cmd_miter(args) -> int:
    c1, c2 = read_circuit_file(args.file_a), read_circuit_file(args.file_b)
    _emit_circuit(build_miter(c1, c2, MiterVariant.parse(args.variant)), args.output)
    return 0


def _generate(args) -> Circuit:
    from . import bench
    kind, n = args.kind, args.n
    if kind == "adder":
        return bench.gen_adder(n)
    if kind == "multiplier":
        return bench.gen_multiplier(n)
    if kind == "lnn":
        return bench.gen_lnn_cnot(n, args.k if args.k is not None else n - 1)
    if kind == "mesh":
        return bench.gen_mesh(n, args.layers)
    if kind == "qft":
        return bench.gen_qft(n)
    p1, p2 = bench.grover_case_pair(n, args.target)
    return p1.circuit if kind == "grover" else p2.circuit


def cmd_gen(args) -> int:
    _emit_circuit(_generate(args), args.output)
    return 0


def cmd_mutate(args) -> int:
    from .bench import Mutation, checked_mutant, mutate
    c = read_circuit_file(args.file)
    if args.unchecked:
        out = mutate(c, Mutation(args.mode, args.seed, args.count))
    else:
        rec = checked_mutant(c, args.mode, args.seed, args.count)
        for line in rec.log:
            log.warning(line)
        out = rec.circuit
    _emit_circuit(out, args.output)
    return 0


def circuit_stats(c: Circuit) -> dict:
    hist: Counter = Counter()
    for g in c.gates:
        if g.kind is GateKind.MCT:
            hist[f"t{len(g.controls) + 1}"] += 1
        else:
            hist[g.kind.value.lower()] += 1
    return {"width": c.width, "gates": len(c), "histogram": dict(sorted(hist.items())),
            "quantum_gates": sum(not is_conventional(g) for g in c.gates),
            "properly_quantum": not is_conventional_circuit(c)}


def cmd_stats(args) -> int:
    d = circuit_stats(read_circuit_file(args.file))
    if args.format == "json-lines":
        print(json.dumps(d, sort_keys=True))
    else:
        print(f"width: {d['width']}")
        print(f"gates: {d['gates']}")
        for k, v in d["histogram"].items():
            print(f"  {k}: {v}")
        print(f"properly-quantum: {'yes' if d['properly_quantum'] else 'no'}")
    return 0


# parser ---------------------------------------------------------------------------------

def _rounds(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--rounds must be at least 1")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("--timeout must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revmiter", description="Equivalence checking of reversible "
                                "and quantum circuits through miters.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    variants = [v.value for v in MiterVariant]
    fmt = dict(choices=("text", "json-lines"), default="text")

    c = sub.add_parser("check", help="check two circuits for equivalence")
    c.add_argument("file_a")
    c.add_argument("file_b")
    c.add_argument("--method", choices=METHODS, default="auto")
    c.add_argument("--variant", choices=variants + ["auto"], default=MiterVariant.C1_C2inv.value)
    c.add_argument("--format", **fmt)
    c.add_argument("--timeout", type=_nonneg_float, default=None, help="seconds; expiry gives Inconclusive")
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--rounds", type=_rounds, default=None, help="simplification budget")
    c.add_argument("--solver-cmd", default=None,
                   help="external DIMACS solver; {file} is replaced by the CNF path")
    c.add_argument("--no-simplify", action="store_true")
    c.add_argument("--portfolio", action="store_true", help="race sat/bdd/cec inside adaptive")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simplify", help="simplify one circuit")
    s.add_argument("file")
    s.add_argument("-o", "--output", required=True, help="file for the simplified circuit")
    s.add_argument("--rounds", type=_rounds, default=None)
    s.add_argument("--miter", action="store_true",
                   help="treat the circuit as a miter (allows rotations)")
    s.add_argument("--format", **fmt)
    s.set_defaults(func=cmd_simplify)

    m = sub.add_parser("miter", help="write the miter of two circuits")
    m.add_argument("file_a")
    m.add_argument("file_b")
    m.add_argument("--variant", choices=variants, default=MiterVariant.C1_C2inv.value)
    m.add_argument("-o", "--output", default=None)
    m.set_defaults(func=cmd_miter)

    g = sub.add_parser("gen", help="generate a benchmark circuit")
    g.add_argument("kind", choices=("adder", "multiplier", "lnn", "mesh", "qft", "grover",
                                    "grover-permuted"))
    g.add_argument("--n", type=int, required=True, help="size (operand bits, lines, or oracle bits)")
    g.add_argument("--k", type=int, default=None, help="separation for lnn")
    g.add_argument("--layers", type=int, default=None, help="layers for mesh")
    g.add_argument("--target", type=int, default=6, help="product searched by the grover oracle")
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_gen)

    u = sub.add_parser("mutate", help="write a seeded mutant")
    u.add_argument("file")
    u.add_argument("--mode", choices=("diff1", "diff2", "midadd", "middelete"), required=True)
    u.add_argument("--seed", type=int, default=DEFAULT_SEED)
    u.add_argument("--count", type=int, default=10)
    u.add_argument("--unchecked", action="store_true",
                   help="skip the inequivalence check and re-rolls")
    u.add_argument("-o", "--output", default=None)
    u.set_defaults(func=cmd_mutate)

    t = sub.add_parser("stats", help="print circuit statistics")
    t.add_argument("file")
    t.add_argument("--format", **fmt)
    t.set_defaults(func=cmd_stats)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CircuitError, OSError, ValueError) as exc:
        print(f"revmiter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
