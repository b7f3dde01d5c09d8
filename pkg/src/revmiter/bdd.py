"""Reduced ordered BDDs and the BDD identity check for reversible miters.

Variable order is the line index.  A node reference is an index into the
manager's store; 0 and 1 are the terminals.
"""
from __future__ import annotations

import sys
import time
from typing import Sequence

from .circuit import Circuit, CircuitError, GateKind, is_conventional_circuit, to_mct
from .miter import MiterVariant, build_miter, miter_counterexample, pull_back
from .semantics import evaluate
from .verdict import Deadline, ResourceExhausted, Verdict, index_of

AND, OR, XOR = "and", "or", "xor"
DEFAULT_NODE_BUDGET = 1 << 22


class BddManager:
    def __init__(self, num_vars: int, node_budget: int = DEFAULT_NODE_BUDGET):
        self.num_vars = num_vars
        self.node_budget = node_budget
        # terminals carry a variable index past every real one
        self.var = [num_vars, num_vars]
        self.low = [0, 1]
        self.high = [0, 1]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.cache: dict[tuple[str, int, int], int] = {}
        self.gc_runs = 0
        if sys.getrecursionlimit() < 4 * num_vars + 1000:
            sys.setrecursionlimit(4 * num_vars + 1000)

    def __len__(self) -> int:
        return len(self.var)

    def mk(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        r = self.unique.get(key)
        if r is None:
            if len(self.var) >= self.node_budget:
                raise ResourceExhausted(f"BDD node budget of {self.node_budget} exceeded")
            r = len(self.var)
            self.var.append(v)
            self.low.append(lo)
            self.high.append(hi)
            self.unique[key] = r
        return r

    def var_ref(self, i: int) -> int:
        if not 0 <= i < self.num_vars:
            raise IndexError(f"variable {i} out of range 0..{self.num_vars - 1}")
        return self.mk(i, 0, 1)

    def apply(self, op: str, a: int, b: int) -> int:
        if op == AND:
            if a == 0 or b == 0:
                return 0
            if a == 1:
                return b
            if b == 1 or a == b:
                return a
        elif op == OR:
            if a == 1 or b == 1:
                return 1
            if a == 0:
                return b
            if b == 0 or a == b:
                return a
        elif op == XOR:
            if a == b:
                return 0
            if a == 0:
                return b
            if b == 0:
                return a
        else:
            raise ValueError(f"unknown operation {op!r}")
        if a > b:
            a, b = b, a
        key = (op, a, b)
        r = self.cache.get(key)
        if r is not None:
            return r
        va, vb = self.var[a], self.var[b]
        v = va if va < vb else vb
        a0, a1 = (self.low[a], self.high[a]) if va == v else (a, a)
        b0, b1 = (self.low[b], self.high[b]) if vb == v else (b, b)
        r = self.mk(v, self.apply(op, a0, b0), self.apply(op, a1, b1))
        self.cache[key] = r
        return r

    def neg(self, a: int) -> int:
        return self.apply(XOR, a, 1)

    def evaluate(self, a: int, bits: Sequence[int]) -> int:
        while a > 1:
            a = self.high[a] if bits[self.var[a]] else self.low[a]
        return a

    def one_path(self, a: int) -> dict[int, int] | None:
        """A partial assignment reaching terminal 1, or None for the 0 function."""
        if a == 0:
            return None
        path = {}
        while a > 1:
            if self.low[a] != 0:
                path[self.var[a]] = 0
                a = self.low[a]
            else:
                path[self.var[a]] = 1
                a = self.high[a]
        return path

    def count_reachable(self, roots: Sequence[int]) -> int:
        seen = set()
        stack = [r for r in roots if r > 1]
        while stack:
            a = stack.pop()
            if a in seen:
                continue
            seen.add(a)
            for c in (self.low[a], self.high[a]):
                if c > 1 and c not in seen:
                    stack.append(c)
        return len(seen)

    def collect(self, roots: list[int]) -> list[int]:
        """Drop nodes unreachable from ``roots``; returns the renumbered roots."""
        keep = [False] * len(self.var)
        keep[0] = keep[1] = True
        stack = [r for r in roots if r > 1]
        while stack:
            a = stack.pop()
            if keep[a]:
                continue
            keep[a] = True
            stack.append(self.low[a])
            stack.append(self.high[a])
        # children always have smaller indices, so one forward pass renumbers
        new = [0] * len(self.var)
        var, low, high = [self.num_vars] * 2, [0, 1], [0, 1]
        new[1] = 1
        for a in range(2, len(self.var)):
            if keep[a]:
                new[a] = len(var)
                var.append(self.var[a])
                low.append(new[self.low[a]])
                high.append(new[self.high[a]])
        self.var, self.low, self.high = var, low, high
        self.unique = {(var[a], low[a], high[a]): a for a in range(2, len(var))}
        self.cache.clear()
        self.gc_runs += 1
        return [new[r] for r in roots]


def bdd_var(m: BddManager, i: int) -> int:
    return m.var_ref(i)


def bdd_apply(m: BddManager, op: str, a: int, b: int) -> int:
    return m.apply(op, a, b)


def _tt_outputs(m: BddManager, ins: list[int], table: Sequence[int]) -> list[int]:
    k = len(ins)
    outs = [0] * k
    for p, o in enumerate(table):
        term = 1
        for j in range(k):
            lit = ins[j] if (p >> (k - 1 - j)) & 1 else m.neg(ins[j])
            term = m.apply(AND, term, lit)
        for j in range(k):
            if (o >> (k - 1 - j)) & 1:
                outs[j] = m.apply(OR, outs[j], term)
    return outs


def build_wire_bdds(m: BddManager, c: Circuit, deadline: Deadline | None = None,
                    sample_every: int = 0, profile: list | None = None) -> list[int]:
    """Output function of every line, gate by gate.

    With ``sample_every`` > 0 the number of live nodes is appended to
    ``profile`` after every that many gates (and after the last one).
    """
    if not is_conventional_circuit(c):
        raise CircuitError("BDD construction needs a conventional circuit")
    wires = [m.var_ref(i) for i in range(c.width)]
    last_live = len(m)
    for gi, g in enumerate(c.gates):
        if deadline is not None and gi & 63 == 0:
            deadline.check()
        if g.kind is GateKind.SWAP:
            a, b = g.targets
            wires[a], wires[b] = wires[b], wires[a]
            continue
        for low in to_mct(g):
            if low.kind is GateKind.TT:
                outs = _tt_outputs(m, [wires[q] for q in low.targets], low.table)
                for q, r in zip(low.targets, outs):
                    wires[q] = r
                continue
            cond = 1
            for q in sorted(low.controls):
                cond = m.apply(AND, cond, wires[q])
            wires[low.target] = m.apply(XOR, wires[low.target], cond)
        if len(m) > max(1 << 16, 4 * last_live):
            wires = m.collect(wires)
            last_live = len(m)
        if sample_every and profile is not None and (gi + 1) % sample_every == 0:
            profile.append(m.count_reachable(wires))
    if sample_every and profile is not None and len(c) % sample_every:
        profile.append(m.count_reachable(wires))
    return wires


def check_identity_bdd(mc: Circuit, deadline: Deadline | None = None,
                       node_budget: int = DEFAULT_NODE_BUDGET, sample_every: int = 0) -> Verdict:
    """Is the conventional circuit ``mc`` the identity?  Witness bits refer to ``mc``."""
    mgr = BddManager(mc.width, node_budget)
    profile: list[int] = []
    try:
        wires = build_wire_bdds(mgr, mc, deadline, sample_every, profile)
        stats = {"nodes": len(mgr), "gc_runs": mgr.gc_runs}
        if profile:
            stats["peak_live"] = max(profile)
            stats["profile"] = profile
        for i, w in enumerate(wires):
            diff = mgr.apply(XOR, w, mgr.var_ref(i))
            if diff != 0:
                path = mgr.one_path(diff)
                bits = tuple(path.get(q, 0) for q in range(mc.width))
                return Verdict.not_equivalent("bdd", bits, index_of(bits),
                                              reason=f"line {i} differs", **stats)
    except ResourceExhausted as exc:
        return Verdict.inconclusive(str(exc), "bdd", nodes=len(mgr))
    return Verdict.equivalent("bdd", **stats)


def check_bdd(c1: Circuit, c2: Circuit, *, variant: MiterVariant = MiterVariant.C1_C2inv,
              simplify: bool = True, timeout: float | None = None,
              node_budget: int = DEFAULT_NODE_BUDGET, deadline: Deadline | None = None,
              sample_every: int = 0, budget: int | None = None) -> Verdict:
    from . import rewrite
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    if not (is_conventional_circuit(c1) and is_conventional_circuit(c2)):
        raise CircuitError("BDD checking needs conventional circuits")
    t0 = time.perf_counter()
    deadline = deadline or Deadline(timeout)
    variant = MiterVariant(variant)
    m = build_miter(c1, c2, variant)
    stats: dict = {"miter_gates": len(m)}
    rotated: Sequence = ()
    if simplify:
        try:
            m, rep = rewrite.simplify(m, rewrite.DEFAULT_BUDGET if budget is None else budget,
                                      miter=True, deadline=deadline)
        except ResourceExhausted as exc:
            return Verdict.inconclusive(str(exc), "bdd", **stats)
        rotated = rep.rotated
        stats["simplified_gates"] = len(m)
    v = check_identity_bdd(m, deadline, node_budget, sample_every)
    v.stats.update(stats)
    v.stats["time_s"] = time.perf_counter() - t0
    if v.is_not_equivalent:
        cex = miter_counterexample(c1, c2, variant, pull_back(v.counterexample, rotated, c1.width))
        x = index_of(cex)
        if evaluate(c1, x) == evaluate(c2, x):
            raise AssertionError("BDD counterexample does not distinguish the circuits")
        v.counterexample, v.witness = cex, x
    return v
