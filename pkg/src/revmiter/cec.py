"""Combinational equivalence checking of reversible miters on an AIG.

The miter is lowered to an and-inverter graph with one mismatch output per
rewritten line.  A sweep in topological order rebuilds the graph while
merging nodes whose random-simulation signatures agree and whose equality a
small SAT query confirms; the outputs are then proved constant 0.

Literals follow the AIGER convention: ``2*node + negated``.  Node 0 is the
constant false, nodes 1..n are the inputs (line i is node i+1).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cdcl import solve_clauses
from .circuit import Circuit, CircuitError, GateKind, is_conventional_circuit, to_mct
from .miter import MiterVariant, build_miter, miter_counterexample, pull_back
from .semantics import evaluate
from .verdict import Deadline, ResourceExhausted, Verdict, index_of

DEFAULT_WORDS = 64
REFINE_ROUNDS = 3
CUT_DEPTH = 8
PAIR_CONFLICTS = 2000


def lit_not(a: int) -> int:
    return a ^ 1


class Aig:
    def __init__(self, num_inputs: int):
        self.num_inputs = num_inputs
        # fanins per node; None for the constant and the inputs
        self.fanins: list[tuple[int, int] | None] = [None] * (num_inputs + 1)
        self.strash: dict[tuple[int, int], int] = {}
        self.outputs: list[int] = []
        self.output_lines: list[int] = []

    def __len__(self) -> int:
        return len(self.fanins)

    @property
    def num_ands(self) -> int:
        return len(self.fanins) - self.num_inputs - 1

    def input_lit(self, i: int) -> int:
        return 2 * (i + 1)

    def is_and(self, node: int) -> bool:
        return self.fanins[node] is not None

    def and_(self, a: int, b: int) -> int:
        if a == 0 or b == 0 or a == b ^ 1:
            return 0
        if a == 1:
            return b
        if b == 1 or a == b:
            return a
        if a > b:
            a, b = b, a
        node = self.strash.get((a, b))
        if node is None:
            node = len(self.fanins)
            self.fanins.append((a, b))
            self.strash[(a, b)] = node
        return 2 * node

    def or_(self, a: int, b: int) -> int:
        return lit_not(self.and_(lit_not(a), lit_not(b)))

    def xor(self, a: int, b: int) -> int:
        if a == b:
            return 0
        if a == b ^ 1:
            return 1
        if a < 2:
            return b ^ a
        if b < 2:
            return a ^ b
        p = self.and_(a, lit_not(b))
        q = self.and_(lit_not(a), b)
        return self.or_(p, q)

    def mux(self, s: int, hi: int, lo: int) -> int:
        return self.or_(self.and_(s, hi), self.and_(lit_not(s), lo))

    def evaluate(self, bits: Sequence[int]) -> list[int]:
        val = [0] * len(self.fanins)
        for i in range(self.num_inputs):
            val[i + 1] = int(bits[i]) & 1
        for n in range(self.num_inputs + 1, len(self.fanins)):
            a, b = self.fanins[n]
            val[n] = (val[a >> 1] ^ (a & 1)) & (val[b >> 1] ^ (b & 1))
        return [val[o >> 1] ^ (o & 1) for o in self.outputs]

    def to_aag(self) -> str:
        lines = [f"aag {len(self.fanins) - 1} {self.num_inputs} 0 {len(self.outputs)} {self.num_ands}"]
        lines += [str(2 * (i + 1)) for i in range(self.num_inputs)]
        lines += [str(o) for o in self.outputs]
        for n in range(self.num_inputs + 1, len(self.fanins)):
            a, b = self.fanins[n]
            lines.append(f"{2 * n} {b} {a}")
        return "\n".join(lines) + "\n"


def _shannon(aig: Aig, ins: list[int], column: list[int]) -> int:
    """Literal for a Boolean function given as a truth table over ``ins``."""
    if all(v == 0 for v in column):
        return 0
    if all(v == 1 for v in column):
        return 1
    half = len(column) // 2
    lo = _shannon(aig, ins[1:], column[:half])
    hi = _shannon(aig, ins[1:], column[half:])
    return aig.mux(ins[0], hi, lo)


def to_aig(m: Circuit) -> Aig:
    """Mismatch AIG of a conventional miter (one output per rewritten line)."""
    if not is_conventional_circuit(m):
        raise CircuitError("AIG lowering needs a conventional circuit")
    aig = Aig(m.width)
    wires = [aig.input_lit(i) for i in range(m.width)]
    touched = set()
    for g in m.gates:
        if g.kind is GateKind.SWAP:
            a, b = g.targets
            wires[a], wires[b] = wires[b], wires[a]
            touched.update(g.targets)
            continue
        for low in to_mct(g):
            if low.kind is GateKind.TT:
                ins = [wires[q] for q in low.targets]
                k = len(ins)
                outs = []
                for j in range(k):
                    col = [(o >> (k - 1 - j)) & 1 for o in low.table]
                    outs.append(_shannon(aig, ins, col))
                for q, o in zip(low.targets, outs):
                    wires[q] = o
                touched.update(low.targets)
                continue
            cond = 1
            for q in sorted(low.controls):
                cond = aig.and_(cond, wires[q])
            wires[low.target] = aig.xor(wires[low.target], cond)
            touched.add(low.target)
    for i in sorted(touched):
        aig.outputs.append(aig.xor(wires[i], aig.input_lit(i)))
        aig.output_lines.append(i)
    return aig


# simulation ---------------------------------------------------------------------

@dataclass
class SimSignature:
    """Random-simulation values of every node, packed into 64-bit words."""
    seed: int
    words: int
    values: list[int] = field(repr=False)   # one Python int of 64*words bits per node

    @property
    def nbits(self) -> int:
        return 64 * self.words

    def as_array(self) -> np.ndarray:
        out = np.zeros((len(self.values), self.words), dtype=np.uint64)
        mask = (1 << 64) - 1
        for n, v in enumerate(self.values):
            for w in range(self.words):
                out[n, w] = (v >> (64 * w)) & mask
        return out

    def lit(self, a: int) -> int:
        v = self.values[a >> 1]
        return v ^ ((1 << self.nbits) - 1) if a & 1 else v


def _random_inputs(n: int, words: int, rng: np.random.Generator) -> list[int]:
    raw = rng.integers(0, 1 << 63, size=(n, words), dtype=np.uint64, endpoint=True)
    return [int.from_bytes(raw[i].tobytes(), "little") for i in range(n)]


def _simulate(aig: Aig, inputs: list[int], nbits: int) -> list[int]:
    full = (1 << nbits) - 1
    vals = [0] * len(aig.fanins)
    for i, v in enumerate(inputs):
        vals[i + 1] = v
    for n in range(aig.num_inputs + 1, len(aig.fanins)):
        a, b = aig.fanins[n]
        va = vals[a >> 1] ^ full if a & 1 else vals[a >> 1]
        vb = vals[b >> 1] ^ full if b & 1 else vals[b >> 1]
        vals[n] = va & vb
    return vals


def random_simulate(aig: Aig, words: int = DEFAULT_WORDS, seed: int = 0) -> SimSignature:
    if words < 1:
        raise ValueError("need at least one simulation word")
    rng = np.random.default_rng(seed)
    ins = _random_inputs(aig.num_inputs, words, rng)
    return SimSignature(seed, words, _simulate(aig, ins, 64 * words))


# proving ----------------------------------------------------------------------------

EQUAL, DIFFERENT, UNDECIDED = "equal", "different", "undecided"


def _cone_cnf(aig: Aig, roots: Sequence[int], depth: int | None):
    """Tseitin clauses of the cone of ``roots``; nodes deeper than ``depth`` are free.

    Returns (clauses, var_of_node, next_var).
    """
    var: dict[int, int] = {}
    clauses: list[list[int]] = []
    frontier = [(r >> 1, 0) for r in roots]
    best: dict[int, int] = {}
    while frontier:
        node, d = frontier.pop()
        if node in best and best[node] <= d:
            continue
        best[node] = d
        fi = aig.fanins[node]
        if fi is not None and (depth is None or d < depth):
            frontier.append((fi[0] >> 1, d + 1))
            frontier.append((fi[1] >> 1, d + 1))
    for node in best:
        var[node] = len(var) + 1
    lit = lambda a: var[a >> 1] if not a & 1 else -var[a >> 1]
    for node, d in best.items():
        if node == 0:
            clauses.append([-var[0]])
            continue
        fi = aig.fanins[node]
        if fi is None or (depth is not None and d >= depth):
            continue
        n, a, b = var[node], lit(fi[0]), lit(fi[1])
        clauses += [[-n, a], [-n, b], [n, -a, -b]]
    return clauses, var, len(var) + 1


def _xor_query(aig: Aig, x: int, y: int, depth: int | None, deadline, max_conflicts):
    clauses, var, nv = _cone_cnf(aig, [x, y], depth)
    lx = var[x >> 1] if not x & 1 else -var[x >> 1]
    ly = var[y >> 1] if not y & 1 else -var[y >> 1]
    clauses += [[lx, ly], [-lx, -ly]]   # x != y
    res = solve_clauses(nv - 1, clauses, deadline, max_conflicts)
    return res, var


def prove_pair(aig: Aig, x: int, y: int, deadline: Deadline | None = None,
               max_conflicts: int | None = PAIR_CONFLICTS, cut_depth: int = CUT_DEPTH):
    """(EQUAL | DIFFERENT | UNDECIDED, input bits or None)."""
    if x == y:
        return EQUAL, None
    if x == y ^ 1:
        return DIFFERENT, tuple([0] * aig.num_inputs)
    try:
        if cut_depth:
            res, _ = _xor_query(aig, x, y, cut_depth, deadline, max_conflicts)
            if not res.satisfiable:
                return EQUAL, None
        res, var = _xor_query(aig, x, y, None, deadline, max_conflicts)
    except ResourceExhausted:
        if deadline is not None and deadline.expired():
            raise
        return UNDECIDED, None
    if not res.satisfiable:
        return EQUAL, None
    bits = tuple(int(res.model[var[i + 1]]) if (i + 1) in var else 0 for i in range(aig.num_inputs))
    return DIFFERENT, bits


# sweep --------------------------------------------------------------------------------

@dataclass
class FraigStats:
    classes_before: list[int] = field(default_factory=list)
    proved: int = 0
    refuted: int = 0
    undecided: int = 0
    sat_calls: int = 0
    ands_before: int = 0
    ands_after: int = 0

    def as_dict(self) -> dict:
        return {"classes": self.classes_before, "merges": self.proved, "refuted": self.refuted,
                "undecided": self.undecided, "sat_calls": self.sat_calls,
                "ands_before": self.ands_before, "ands_after": self.ands_after}


def _key(v: int, full: int) -> tuple[int, int]:
    return (v ^ full, 1) if v & 1 else (v, 0)


def _count_classes(vals: list[int], nodes, full: int) -> int:
    return len({_key(vals[n], full)[0] for n in nodes})


class _Sweeper:
    def __init__(self, old: Aig, words: int, seed: int, rounds: int, deadline, pair_conflicts):
        self.old = old
        self.deadline = deadline
        self.pair_conflicts = pair_conflicts
        self.stats = FraigStats(ands_before=old.num_ands)
        rng = np.random.default_rng(seed)
        nbits = 64 * words
        self.inputs = _random_inputs(old.num_inputs, words, rng)
        vals = _simulate(old, self.inputs, nbits)
        and_nodes = range(old.num_inputs + 1, len(old))
        self.stats.classes_before.append(_count_classes(vals, and_nodes, (1 << nbits) - 1))
        for _ in range(rounds):
            extra = _random_inputs(old.num_inputs, words, rng)
            self.inputs = [a | (b << nbits) for a, b in zip(self.inputs, extra)]
            nbits += 64 * words
            vals = _simulate(old, self.inputs, nbits)
            self.stats.classes_before.append(_count_classes(vals, and_nodes, (1 << nbits) - 1))
        self.nbits = nbits
        self.full = (1 << nbits) - 1
        self.new = Aig(old.num_inputs)
        self.sig = [0] + list(self.inputs)
        self.table: dict[int, int] = {}
        for n in range(old.num_inputs + 1):
            self.table.setdefault(_key(self.sig[n], self.full)[0], n)

    def _sig_of_lit(self, a: int) -> int:
        v = self.sig[a >> 1]
        return v ^ self.full if a & 1 else v

    def _add_pattern(self, bits: Sequence[int]) -> None:
        """Append one distinguishing input pattern to every signature."""
        pos = self.nbits
        self.nbits += 1
        self.full = (1 << self.nbits) - 1
        val = [0] * len(self.new)
        for i, b in enumerate(bits):
            val[i + 1] = int(b)
            if b:
                self.sig[i + 1] |= 1 << pos
        for n in range(self.new.num_inputs + 1, len(self.new)):
            a, b = self.new.fanins[n]
            val[n] = (val[a >> 1] ^ (a & 1)) & (val[b >> 1] ^ (b & 1))
            if val[n]:
                self.sig[n] |= 1 << pos
        self.table = {}
        for n in self._representatives:
            self.table.setdefault(_key(self.sig[n], self.full)[0], n)

    def run(self) -> list[int]:
        """Map every old node to a literal of the reduced graph."""
        old, new = self.old, self.new
        self._representatives = list(range(old.num_inputs + 1))
        mapping = list(range(0, 2 * (old.num_inputs + 1), 2))
        for n in range(old.num_inputs + 1, len(old)):
            if self.deadline is not None and n & 127 == 0:
                self.deadline.check()
            a, b = old.fanins[n]
            la = mapping[a >> 1] ^ (a & 1)
            lb = mapping[b >> 1] ^ (b & 1)
            before = len(new)
            lit = new.and_(la, lb)
            node = lit >> 1
            if len(new) > before:
                self.sig.append(self._sig_of_lit(la) & self._sig_of_lit(lb))
                lit = self._merge(node)
            mapping.append(lit)
        return mapping

    def _merge(self, node: int) -> int:
        while True:
            key, phase = _key(self.sig[node], self.full)
            cand = self.table.get(key)
            if cand is None:
                self.table[key] = node
                self._representatives.append(node)
                return 2 * node
            cand_lit = 2 * cand ^ (phase ^ (self.sig[cand] & 1))
            self.stats.sat_calls += 1
            verdict, bits = prove_pair(self.new, 2 * node, cand_lit, self.deadline, self.pair_conflicts)
            if verdict == EQUAL:
                self.stats.proved += 1
                return cand_lit
            if verdict == UNDECIDED:
                self.stats.undecided += 1
                self._representatives.append(node)
                return 2 * node
            self.stats.refuted += 1
            self._add_pattern(bits)


def _cex_from_sig(sig: int, inputs: list[int]) -> tuple[int, ...]:
    pos = (sig & -sig).bit_length() - 1
    return tuple((v >> pos) & 1 for v in inputs)


def check_identity_cec(mc: Circuit, deadline: Deadline | None = None, words: int = DEFAULT_WORDS,
                       seed: int = 0, rounds: int = REFINE_ROUNDS,
                       pair_conflicts: int | None = PAIR_CONFLICTS, aag_path=None) -> Verdict:
    """Is the conventional circuit ``mc`` the identity?  Witness bits refer to ``mc``."""
    aig = to_aig(mc)
    if aag_path is not None:
        with open(aag_path, "w", encoding="ascii") as fh:
            fh.write(aig.to_aag())
    if not aig.outputs:
        return Verdict.equivalent("cec", outputs=0)
    try:
        sw = _Sweeper(aig, words, seed, rounds, deadline, pair_conflicts)
        mapping = sw.run()
        sw.stats.ands_after = sw.new.num_ands
        stats = {"outputs": len(aig.outputs), **sw.stats.as_dict()}
        for line, out in zip(aig.output_lines, aig.outputs):
            lit = mapping[out >> 1] ^ (out & 1)
            if lit == 0:
                continue
            s = sw._sig_of_lit(lit)
            if s:
                bits = _cex_from_sig(s, sw.sig[1: aig.num_inputs + 1])
            else:
                verdict, bits = prove_pair(sw.new, lit, 0, deadline, None, cut_depth=0)
                stats["sat_calls"] += 1
                if verdict == EQUAL:
                    continue
            return Verdict.not_equivalent("cec", bits, index_of(bits),
                                          reason=f"line {line} differs", **stats)
    except ResourceExhausted as exc:
        return Verdict.inconclusive(str(exc), "cec")
    return Verdict.equivalent("cec", **stats)


def check_cec(c1: Circuit, c2: Circuit, *, variant: MiterVariant = MiterVariant.C1_C2inv,
              simplify: bool = True, timeout: float | None = None, deadline: Deadline | None = None,
              words: int = DEFAULT_WORDS, seed: int = 0, rounds: int = REFINE_ROUNDS,
              budget: int | None = None, aag_path=None) -> Verdict:
    from . import rewrite
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    if not (is_conventional_circuit(c1) and is_conventional_circuit(c2)):
        raise CircuitError("cec needs conventional circuits")
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
            return Verdict.inconclusive(str(exc), "cec", **stats)
        rotated = rep.rotated
        stats["simplified_gates"] = len(m)
    v = check_identity_cec(m, deadline, words, seed, rounds, aag_path=aag_path)
    v.stats.update(stats)
    v.stats["time_s"] = time.perf_counter() - t0
    if v.is_not_equivalent:
        cex = miter_counterexample(c1, c2, variant, pull_back(v.counterexample, rotated, c1.width))
        x = index_of(cex)
        if evaluate(c1, x) == evaluate(c2, x):
            raise AssertionError("cec counterexample does not distinguish the circuits")
        v.counterexample, v.witness = cex, x
    return v
