"""Adaptive checking of circuits with few properly-quantum gates.

Pipeline: build the miter (1), simplify it (2), hand a purely conventional
residue to cec (3), isolate a conventional prefix and a small quantum suffix
(4, 5), classify the suffix by exhaustive basis simulation over its support
(6), and finally check prefix . table(suffix) against the identity (7).
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    is_conventional,
    is_conventional_circuit,
    tt,
)
from .miter import MiterVariant, build_miter, miter_counterexample, pull_back
from .semantics import (
    DEFAULT_TOL,
    DENSE_LIMIT,
    SimulationLimitError,
    classify_functionality,
    distinguishing_input,
    evaluate,
)
from .verdict import Deadline, ResourceExhausted, Verdict, bits_of, index_of

log = logging.getLogger(__name__)


@dataclass
class TraceStep:
    step: int
    name: str
    gates_before: int
    gates_after: int
    engine: str | None = None
    outcome: str = ""
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"step": self.step, "name": self.name, "gates_before": self.gates_before,
             "gates_after": self.gates_after, "engine": self.engine, "outcome": self.outcome}
        d.update({k: v for k, v in self.detail.items() if isinstance(v, (int, float, str, bool))})
        return d


@dataclass
class AdaptiveTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def add(self, step: int, name: str, before: int, after: int, engine=None, outcome="", **detail):
        if self.steps and step < self.steps[-1].step:
            raise ValueError("trace steps must be recorded in order")
        s = TraceStep(step, name, before, after, engine, outcome, detail)
        self.steps.append(s)
        return s

    @property
    def deciding_step(self) -> int | None:
        for s in reversed(self.steps):
            if s.outcome in ("Equivalent", "NotEquivalent", "Inconclusive"):
                return s.step
        return None

    def step(self, k: int) -> TraceStep | None:
        for s in self.steps:
            if s.step == k:
                return s
        return None

    def as_list(self) -> list[dict]:
        return [s.as_dict() for s in self.steps]


@dataclass
class SplitResult:
    prefix: Circuit
    suffix: Circuit
    rotation_applied: int
    moves_applied: int


def _longest_circular_run(flags: Sequence[bool]) -> tuple[int, int]:
    """(start, length) of the longest circular run of True; ties go to the earliest start."""
    n = len(flags)
    if all(flags):
        return 0, n
    best = (0, 0)
    for s in range(n):
        if not flags[s] or flags[s - 1]:
            continue   # runs start right after a False
        k = 0
        while k < n and flags[(s + k) % n]:
            k += 1
        if k > best[1]:
            best = (s, k)
    return best


def split_conventional_quantum(m: Circuit) -> SplitResult:
    """Rotate the longest conventional run to the front, then grow it by simple swaps.

    Only valid for miters (identity checking), since rotation is used.
    A conventional suffix gate joins the end of the prefix when it commutes
    with every suffix gate before it, or the front of the prefix (through the
    circular seam) when it commutes with every suffix gate after it.
    """
    from .rewrite import can_swap_simple
    flags = [is_conventional(g) for g in m.gates]
    if all(flags):
        return SplitResult(m, m.with_gates(()), 0, 0)
    start, length = _longest_circular_run(flags)
    gates = list(m.gates[start:] + m.gates[:start])
    prefix, suffix = gates[:length], gates[length:]
    moves = 0
    wraps = start
    changed = True
    while changed:
        changed = False
        for j, g in enumerate(suffix):
            if not is_conventional(g):
                continue
            if all(can_swap_simple(h, g) for h in suffix[:j]):
                prefix.append(g)
                del suffix[j]
                moves += 1
                changed = True
                break
            if all(can_swap_simple(g, h) for h in suffix[j + 1:]):
                prefix.insert(0, g)
                del suffix[j]
                moves += 1
                wraps += 1
                changed = True
                break
    return SplitResult(m.with_gates(prefix), m.with_gates(suffix), wraps, moves)


# engine dispatch ------------------------------------------------------------------------

def _identity_engines() -> dict[str, Callable]:
    from .bdd import check_identity_bdd
    from .cec import check_identity_cec
    from .satenc import check_identity_sat
    return {"sat": check_identity_sat, "bdd": check_identity_bdd, "cec": check_identity_cec}


def portfolio_identity(m: Circuit, deadline: Deadline | None = None,
                       engines: Sequence[str] = ("sat", "bdd", "cec")) -> Verdict:
    """Race identity engines on a conventional circuit; the first decisive verdict wins."""
    table = _identity_engines()
    cancel = threading.Event()
    timeout = None if deadline is None else deadline.remaining()
    results: dict[str, Verdict] = {}
    done = threading.Condition()

    def run(name: str) -> None:
        d = Deadline(timeout, cancel)
        try:
            v = table[name](m, d)
        except ResourceExhausted as exc:
            v = Verdict.inconclusive(str(exc), name)
        with done:
            results[name] = v
            if not v.is_inconclusive:
                cancel.set()
            done.notify_all()

    threads = [threading.Thread(target=run, args=(e,), daemon=True) for e in engines]
    for t in threads:
        t.start()
    with done:
        while len(results) < len(engines) and not any(not v.is_inconclusive for v in results.values()):
            done.wait(0.05)
    cancel.set()
    for t in threads:
        t.join()
    decisive = [v for v in results.values() if not v.is_inconclusive]
    if not decisive:
        return Verdict.inconclusive("no engine decided", "portfolio")
    if len({v.status for v in decisive}) > 1:
        raise AssertionError("engines disagree in portfolio mode")
    winner = decisive[0]
    winner.stats["portfolio_winner"] = winner.method
    return winner


def _conventional_identity(m: Circuit, deadline: Deadline, portfolio: bool, seed: int) -> Verdict:
    if portfolio:
        return portfolio_identity(m, deadline)
    from .cec import check_identity_cec
    return check_identity_cec(m, deadline, seed=seed)


def _oracle_witness(c1: Circuit, c2: Circuit, tol: float, cap: int) -> int | None:
    try:
        return distinguishing_input(c1, c2, tol=tol, cap=cap)
    except SimulationLimitError:
        return None


def adaptive_check(c1: Circuit, c2: Circuit, *, variant: MiterVariant = MiterVariant.C1_C2inv,
                   timeout: float | None = None, tol: float = DEFAULT_TOL, cap: int = DENSE_LIMIT,
                   portfolio: bool = False, seed: int = 0, budget: int | None = None,
                   deadline: Deadline | None = None) -> tuple[Verdict, AdaptiveTrace]:
    from . import rewrite
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    t0 = time.perf_counter()
    deadline = deadline or Deadline(timeout)
    trace = AdaptiveTrace()
    variant = MiterVariant(variant)
    conventional_inputs = is_conventional_circuit(c1) and is_conventional_circuit(c2)

    def finish(v: Verdict, rotated: Sequence[Gate] = ()) -> tuple[Verdict, AdaptiveTrace]:
        if v.is_not_equivalent:
            w = None
            if conventional_inputs and v.counterexample is not None and all(map(is_conventional, rotated)):
                w = index_of(miter_counterexample(c1, c2, variant,
                                                  pull_back(v.counterexample, rotated, c1.width)))
                if evaluate(c1, w) == evaluate(c2, w):
                    w = None
            if w is None:
                w = _oracle_witness(c1, c2, tol, cap)
            v.witness = w
            v.counterexample = bits_of(w, c1.width) if w is not None and conventional_inputs else None
        v.method = "adaptive"
        v.stats["deciding_step"] = trace.deciding_step
        v.stats["time_s"] = time.perf_counter() - t0
        return v, trace

    try:
        m = build_miter(c1, c2, variant)
        trace.add(1, "build miter", len(c1) + len(c2), len(m), outcome="built")

        s, rep = rewrite.simplify(m, rewrite.DEFAULT_BUDGET if budget is None else budget,
                                  miter=True, deadline=deadline)
        if len(s) == 0:
            trace.add(2, "simplify", len(m), 0, outcome="Equivalent", kept=rep.kept,
                      rotations=rep.rotations_used)
            return finish(Verdict.equivalent())
        trace.add(2, "simplify", len(m), len(s), outcome="reduced", kept=rep.kept,
                  rotations=rep.rotations_used)

        if is_conventional_circuit(s):
            v = _conventional_identity(s, deadline, portfolio, seed)
            trace.add(3, "conventional residue", len(s), len(s), v.method, v.status.value)
            return finish(v, rep.rotated)
        trace.add(3, "conventional residue", len(s), len(s), outcome="skipped: quantum gates remain")

        sp = split_conventional_quantum(s)
        trace.add(4, "longest conventional run", len(s), len(sp.prefix), outcome="found",
                  rotation=sp.rotation_applied)
        trace.add(5, "split", len(s), len(sp.prefix) + len(sp.suffix), outcome="split",
                  prefix=len(sp.prefix), suffix=len(sp.suffix), moves=sp.moves_applied)

        try:
            cl = classify_functionality(sp.suffix, tol=tol, cap=cap)
        except SimulationLimitError as exc:
            trace.add(6, "classify suffix", len(sp.suffix), len(sp.suffix), "quantum", "Inconclusive")
            return finish(Verdict.inconclusive(f"suffix too wide to simulate: {exc}"))
        if not cl.classical:
            trace.add(6, "classify suffix", len(sp.suffix), len(sp.suffix), "quantum", "NotEquivalent",
                      support=len(cl.lines))
            return finish(Verdict.not_equivalent(reason="suffix is properly quantum"))
        trace.add(6, "classify suffix", len(sp.suffix), 1, "quantum", "classical", support=len(cl.lines))

        tail = (tt(cl.table, cl.lines),) if cl.lines else ()
        final = sp.prefix.with_gates(sp.prefix.gates + tail)
        v = _conventional_identity(final, deadline, portfolio, seed)
        trace.add(7, "prefix with suffix table", len(final), len(final), v.method, v.status.value)
        v.counterexample = None
        return finish(v)
    except ResourceExhausted as exc:
        trace.add(7, "aborted", 0, 0, outcome="Inconclusive")
        return finish(Verdict.inconclusive(str(exc)))
