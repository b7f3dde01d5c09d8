"""Benchmark generators and seeded mutations.

Line layouts (line 0 is the top line):

* adder(n): ``c0, b0, a0, b1, a1, ..., b_{n-1}, a_{n-1}, z`` (2n+2 lines);
  b receives a+b mod 2^n, z is xored with the carry out, a and c0 are restored.
* multiplier(n): ``a0..a_{n-1}, b0..b_{n-1}, r0..r_{2n-1}, t0..t_{n-1}``
  (5n lines); started on r = 0 it leaves a*b on r, and the scratch lines t
  always end at 0.
  Index 0 of every register is its least significant bit.
"""
from __future__ import annotations

import enum
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    circuit_inverse,
    cnot,
    cphase,
    h,
    is_conventional_circuit,
    mct,
    remap,
    swap,
    to_mct,
    toffoli,
    x,
)

log = logging.getLogger(__name__)


# classical arithmetic --------------------------------------------------------------

def adder_layout(n: int) -> dict[str, object]:
    return {
        "c0": 0,
        "b": [1 + 2 * i for i in range(n)],
        "a": [2 + 2 * i for i in range(n)],
        "z": 2 * n + 1,
    }


def _maj(c: int, b: int, a: int) -> list[Gate]:
    return [cnot(a, b), cnot(a, c), toffoli(c, b, a)]


def _uma(c: int, b: int, a: int) -> list[Gate]:
    # three-CNOT variant of the unmajority-and-add block
    return [x(b), cnot(c, b), toffoli(c, b, a), x(b), cnot(a, c), cnot(a, b)]


def gen_adder(n: int) -> Circuit:
    """Ripple-carry adder built from MAJ / UMA blocks (9n+1 gates)."""
    if n < 1:
        raise ValueError("adder needs n >= 1")
    lay = adder_layout(n)
    a, b, c0, z = lay["a"], lay["b"], lay["c0"], lay["z"]
    carry = [c0] + a[:-1]
    gates: list[Gate] = []
    for i in range(n):
        gates += _maj(carry[i], b[i], a[i])
    gates.append(cnot(a[n - 1], z))
    for i in reversed(range(n)):
        gates += _uma(carry[i], b[i], a[i])
    return Circuit(2 * n + 2, tuple(gates), f"adder{n}")


def _ttk_add(a: Sequence[int], b: Sequence[int], z: int) -> list[Gate]:
    """b += a (mod 2^n), z ^= carry, a restored; no scratch line needed."""
    n = len(a)
    g: list[Gate] = []
    if n == 1:
        return [toffoli(a[0], b[0], z), cnot(a[0], b[0])]
    for i in range(1, n):
        g.append(cnot(a[i], b[i]))
    g.append(cnot(a[n - 1], z))
    for i in range(n - 2, 0, -1):
        g.append(cnot(a[i], a[i + 1]))
    for i in range(n - 1):
        g.append(toffoli(a[i], b[i], a[i + 1]))
    g.append(toffoli(a[n - 1], b[n - 1], z))
    for i in range(n - 1, 0, -1):
        g.append(cnot(a[i], b[i]))
        g.append(toffoli(a[i - 1], b[i - 1], a[i]))
    for i in range(1, n - 1):
        g.append(cnot(a[i], a[i + 1]))
    for i in range(n):
        g.append(cnot(a[i], b[i]))
    return g


def multiplier_layout(n: int) -> dict[str, list[int]]:
    return {
        "a": list(range(n)),
        "b": list(range(n, 2 * n)),
        "r": list(range(2 * n, 4 * n)),
        "t": list(range(4 * n, 5 * n)),
    }


def gen_multiplier(n: int) -> Circuit:
    """Shift-and-add multiplier: for each bit of b, form a*b_i in t and add it into r."""
    if n < 2:
        raise ValueError("multiplier needs n >= 2")
    lay = multiplier_layout(n)
    a, b, r, t = lay["a"], lay["b"], lay["r"], lay["t"]
    gates: list[Gate] = []
    for i in range(n):
        pp = [toffoli(a[j], b[i], t[j]) for j in range(n)]
        gates += pp
        gates += _ttk_add(t, r[i:i + n], r[i + n])
        gates += pp
    return Circuit(5 * n, tuple(gates), f"mult{n}")


def gen_lnn_cnot(n: int, k: int) -> Circuit:
    """CNOT(0 -> k) from nearest-neighbour CNOTs only (4k-4 gates for k >= 2)."""
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    if k == 1:
        return Circuit(n, (cnot(0, 1),), f"lnn{n}_{k}")
    seq = [cnot(j, j + 1) for j in range(k)]
    seq += [cnot(j, j + 1) for j in range(k - 2, -1, -1)]
    seq += [cnot(j, j + 1) for j in range(1, k)]
    seq += [cnot(j, j + 1) for j in range(k - 2, 0, -1)]
    return Circuit(n, tuple(seq), f"lnn{n}_{k}")


def gen_mesh(n: int, layers: int | None = None) -> Circuit:
    """Brick-wall lattice of nearest-neighbour CNOTs on n lines.

    Layer l couples pairs (i, i+1) with i = l mod 2, 2 + l mod 2, ...; the
    CNOT direction alternates with the layer.  ``layers`` defaults to n.
    """
    if n < 2:
        raise ValueError("mesh needs n >= 2")
    layers = n if layers is None else layers
    gates = []
    for l in range(layers):
        for i in range(l % 2, n - 1, 2):
            gates.append(cnot(i, i + 1) if l % 4 < 2 else cnot(i + 1, i))
    return Circuit(n, tuple(gates), f"mesh{n}")


# quantum ------------------------------------------------------------------------------

def gen_qft(n: int) -> Circuit:
    """Textbook QFT: gate count n(n+1)/2 + floor(n/2)."""
    if n < 1:
        raise ValueError("QFT needs n >= 1")
    gates: list[Gate] = []
    for i in range(n):
        gates.append(h(i))
        for j in range(i + 1, n):
            gates.append(cphase(Fraction(1, 2 ** (j - i + 1)), [j], i))
    for i in range(n // 2):
        gates.append(swap(i, n - 1 - i))
    return Circuit(n, tuple(gates), f"qft{n}")


def h_layer(width: int, lines: Sequence[int]) -> Circuit:
    return Circuit(width, tuple(h(q) for q in lines))


def zero_reflection(width: int, lines: Sequence[int]) -> Circuit:
    """Phase -1 on the all-zero state of ``lines`` (X layer, H, MCT, H, X layer)."""
    lines = list(lines)
    xs = tuple(x(q) for q in lines)
    last = lines[-1]
    if len(lines) == 1:
        # a bare Z between the X layers
        return Circuit(width, xs + (cphase(Fraction(1, 2), [], last),) + xs)
    core = (h(last), mct(lines[:-1], last), h(last))
    return Circuit(width, xs + core + xs)


@dataclass(frozen=True)
class GroverParts:
    oracle: Circuit
    walsh: Circuit
    reflection: Circuit
    search_lines: tuple[int, ...]

    @property
    def circuit(self) -> Circuit:
        g = self.oracle.gates + self.walsh.gates + self.reflection.gates + self.walsh.gates
        return Circuit(self.oracle.width, g, "grover")


def gen_grover_iteration(oracle: Circuit, search_lines: Sequence[int] | None = None) -> Circuit:
    """Oracle, H layer, zero reflection, H layer (the H layers act on the search lines)."""
    return grover_parts(oracle, search_lines).circuit


def grover_parts(oracle: Circuit, search_lines: Sequence[int] | None = None) -> GroverParts:
    if not is_conventional_circuit(oracle):
        raise CircuitError("the Grover oracle must be a conventional circuit")
    if search_lines is None:
        search_lines = range(oracle.width - 1)
    s = tuple(search_lines)
    if not s:
        raise CircuitError("need at least one search line")
    return GroverParts(oracle, h_layer(oracle.width, s), zero_reflection(oracle.width, s), s)


def product_oracle(bits: int = 2, target: int = 6) -> tuple[Circuit, tuple[int, ...]]:
    """Predicate a*b == target on two ``bits``-bit operands, via the multiplier.

    The multiplier writes a*b into r, the comparison flips the last line, and
    the multiplier is run backwards to clear r.  Returns (circuit, search lines).
    """
    mult = gen_multiplier(bits)
    lay = multiplier_layout(bits)
    width = mult.width + 1
    out = width - 1
    r = lay["r"]
    mult = Circuit(width, mult.gates)
    flips = tuple(x(r[i]) for i in range(len(r)) if not (target >> i) & 1)
    compare = flips + (mct(r, out),) + flips
    gates = mult.gates + compare + circuit_inverse(mult).gates
    return Circuit(width, gates, f"oracle_mul{bits}_{target}"), tuple(lay["a"] + lay["b"])


def adjacent_swap_chain(width: int, lines: Sequence[int]) -> tuple[Circuit, dict[int, int]]:
    """Cyclic shift of ``lines`` as adjacent SWAPs, each lowered to three CNOTs.

    Returns the circuit and the map sending each line to where its value ends up.
    """
    lines = list(lines)
    gates: list[Gate] = []
    for i in range(len(lines) - 1):
        a, b = lines[i], lines[i + 1]
        gates += [cnot(a, b), cnot(b, a), cnot(a, b)]
    # value on lines[0] travels to lines[-1]; the others move up by one
    where = {lines[0]: lines[-1]}
    for i in range(1, len(lines)):
        where[lines[i]] = lines[i - 1]
    return Circuit(width, tuple(gates)), where


def grover_case_pair(bits: int = 2, target: int = 6):
    """Two equivalent Grover iterations that differ by a wire permutation.

    The second one runs a SWAP chain (lowered to CNOTs), then the oracle with
    its lines relabelled; its reflection is the relabelled reflection followed
    by the inverse chain.  Both share the same H layers.
    Returns (first parts, second parts).
    """
    oracle, search = product_oracle(bits, target)
    p1 = grover_parts(oracle, search)
    w = oracle.width
    perm, where = adjacent_swap_chain(w, search)
    mapping = [where.get(q, q) for q in range(w)]
    relabel = lambda c: Circuit(w, tuple(remap(g, mapping) for g in c.gates))
    oracle2 = Circuit(w, perm.gates + relabel(oracle).gates, "oracle2")
    refl2 = Circuit(w, relabel(p1.reflection).gates + circuit_inverse(perm).gates, "refl2")
    p2 = GroverParts(oracle2, p1.walsh, refl2, search)
    return p1, p2


# random gates and mutations ---------------------------------------------------------

def random_toffoli(rng: random.Random, width: int) -> Gate:
    if width < 3:
        raise CircuitError("random Toffoli gates need at least 3 lines")
    a, b, c = rng.sample(range(width), 3)
    return toffoli(a, b, c)


def random_reversible_circuit(width: int, ngates: int, seed: int = 0, max_controls: int = 2) -> Circuit:
    rng = random.Random(seed)
    gates = []
    for _ in range(ngates):
        k = rng.randint(0, min(max_controls, width - 1))
        ls = rng.sample(range(width), k + 1)
        gates.append(mct(ls[:-1], ls[-1]))
    return Circuit(width, tuple(gates), f"rand{width}_{ngates}_{seed}")


def _native_gate(rng: random.Random, c: Circuit) -> Gate:
    """A copy of a random gate of ``c`` moved onto random lines."""
    if not c.gates:
        raise CircuitError("cannot draw native gates from an empty circuit")
    g = rng.choice(c.gates)
    lines = sorted(g.lines)
    new = rng.sample(range(c.width), len(lines))
    return remap(g, dict(zip(lines, new)))


class MutationMode(str, enum.Enum):
    DIFF1 = "diff1"
    DIFF2 = "diff2"
    MID_ADD = "midadd"
    MID_DELETE = "middelete"


@dataclass(frozen=True)
class Mutation:
    mode: MutationMode
    seed: int = 0
    count: int = 10

    def __post_init__(self):
        object.__setattr__(self, "mode", MutationMode(self.mode))
        if self.count < 1:
            raise ValueError("mutation count must be positive")


def _random_gates(rng: random.Random, c: Circuit, count: int) -> list[Gate]:
    if is_conventional_circuit(c) and c.width >= 3:
        return [random_toffoli(rng, c.width) for _ in range(count)]
    return [_native_gate(rng, c) for _ in range(count)]


def mutate(c: Circuit, m: Mutation) -> Circuit:
    rng = random.Random(m.seed)
    gates = list(c.gates)
    mid = len(gates) // 2
    if m.mode is MutationMode.DIFF1:
        gates = gates + _random_gates(rng, c, m.count)
    elif m.mode is MutationMode.DIFF2:
        gates = _random_gates(rng, c, m.count) + gates
    elif m.mode is MutationMode.MID_ADD:
        gates[mid:mid] = _random_gates(rng, c, m.count)
    else:
        if len(gates) < m.count:
            raise CircuitError(f"cannot delete {m.count} gates from a {len(gates)}-gate circuit")
        mid = min(mid, len(gates) - m.count)
        del gates[mid:mid + m.count]
    name = f"{c.name or 'c'}~{m.mode.value}"
    return Circuit(c.width, tuple(gates), name)


def differs(c1: Circuit, c2: Circuit, seed: int = 0, patterns: int = 4096) -> bool | None:
    """Ground-truth inequivalence test used to vet mutants.

    Exact at desk scale; for wide conventional circuits random patterns can
    only confirm a difference, so None means "no difference found".
    """
    from .semantics import DENSE_LIMIT, PERMUTATION_LIMIT, distinguishing_input, simulate_patterns
    from .circuit import circuit_support
    lines = circuit_support(c1) | circuit_support(c2)
    conventional = is_conventional_circuit(c1) and is_conventional_circuit(c2)
    if (conventional and len(lines) <= PERMUTATION_LIMIT) or len(lines) <= DENSE_LIMIT:
        return distinguishing_input(c1, c2) is not None
    if not conventional:
        return None
    rng = np.random.default_rng(seed)
    words = []
    for _ in range(c1.width):
        raw = rng.integers(0, 1 << 63, size=patterns // 64, dtype=np.uint64, endpoint=True)
        words.append(int.from_bytes(raw.tobytes(), "little"))
    lo1 = Circuit(c1.width, tuple(g for gg in c1.gates for g in to_mct(gg)))
    lo2 = Circuit(c2.width, tuple(g for gg in c2.gates for g in to_mct(gg)))
    if simulate_patterns(lo1, words, patterns) != simulate_patterns(lo2, words, patterns):
        return True
    return None


@dataclass
class MutantRecord:
    circuit: Circuit
    seed: int
    rerolls: int = 0
    confirmed: bool = False
    log: list[str] = field(default_factory=list)


def checked_mutant(c: Circuit, mode: MutationMode | str, seed: int = 0, count: int = 10,
                   max_rerolls: int = 50) -> MutantRecord:
    """Mutant that the ground-truth test shows to be inequivalent to ``c``."""
    rec = MutantRecord(c, seed)
    for attempt in range(max_rerolls + 1):
        s = seed + attempt
        mut = mutate(c, Mutation(MutationMode(mode), s, count))
        d = differs(c, mut, seed=s)
        if d:
            rec.circuit, rec.seed, rec.rerolls, rec.confirmed = mut, s, attempt, True
            return rec
        rec.log.append(f"seed {s}: mutant not shown inequivalent, re-rolling")
        log.info("mutant with seed %d not shown inequivalent; re-rolling", s)
    raise CircuitError(f"no inequivalent mutant found in {max_rerolls + 1} attempts")


def equivalent_rewrite(c: Circuit, seed: int = 0, steps: int = 8) -> Circuit:
    """A structurally different but functionally equal circuit.

    Applies seeded commutations of adjacent gates, inserts self-cancelling
    pairs, and lowers SWAP gates to CNOTs.
    """
    from .rewrite import can_swap_simple
    from .circuit import gate_inverse
    rng = random.Random(seed)
    gates = list(c.gates)
    for _ in range(steps):
        r = rng.random()
        if r < 0.4 and len(gates) >= 2:
            i = rng.randrange(len(gates) - 1)
            if can_swap_simple(gates[i], gates[i + 1]):
                gates[i], gates[i + 1] = gates[i + 1], gates[i]
        elif r < 0.7 and gates:
            g = rng.choice(gates) if rng.random() < 0.5 else _native_gate(rng, c)
            i = rng.randint(0, len(gates))
            gates[i:i] = [g, gate_inverse(g)]
        else:
            idx = [i for i, g in enumerate(gates) if g.kind is GateKind.SWAP]
            if idx:
                i = rng.choice(idx)
                gates[i:i + 1] = to_mct(gates[i])
    return Circuit(c.width, tuple(gates), f"{c.name or 'c'}~eq")
