"""Exact reference semantics: permutations for conventional circuits and dense
state-vector simulation for properly-quantum ones.

Everything here is deliberately simple so it can serve as the oracle the other
engines are tested against.  Basis index bit ``width - 1 - q`` holds line ``q``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    circuit_support,
    is_conventional,
    is_conventional_circuit,
    is_identity_gate,
    phase_factor,
    remap,
)
from .verdict import Verdict, bits_of

PERMUTATION_LIMIT = 20
DENSE_LIMIT = 14
DEFAULT_TOL = 1e-9
NORM_TOL = 1e-9


class SimulationLimitError(CircuitError):
    pass


@dataclass(frozen=True)
class PermutationTable:
    width: int
    map: np.ndarray

    def __call__(self, x: int) -> int:
        return int(self.map[x])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.map, np.arange(1 << self.width)))

    def inverse(self) -> PermutationTable:
        inv = np.empty_like(self.map)
        inv[self.map] = np.arange(len(self.map))
        return PermutationTable(self.width, inv)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PermutationTable) and self.width == other.width
                and bool(np.array_equal(self.map, other.map)))


@dataclass(frozen=True)
class StateVector:
    width: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class Classification:
    """Result of the classical-functionality test.

    ``lines`` is the (sorted) support the simulation was restricted to; for a
    classical circuit ``table`` is the permutation on those lines, otherwise
    ``witness`` is the first local basis input that leaves the basis.
    """
    classical: bool
    lines: tuple[int, ...]
    table: tuple[int, ...] | None = None
    witness: int | None = None

    def full_permutation(self, width: int) -> PermutationTable:
        if not self.classical:
            raise ValueError("circuit is properly quantum")
        idx = np.arange(1 << width, dtype=np.int64)
        return PermutationTable(width, _apply_table(idx, self.table, self.lines, width))


# conventional evaluation ------------------------------------------------------

def _bit(q: int, n: int) -> int:
    return 1 << (n - 1 - q)


def _mask(lines, n: int) -> int:
    m = 0
    for q in lines:
        m |= _bit(q, n)
    return m


def _conventional_action(g: Gate) -> str:
    """'x' (flip target under controls), 'swap', 'tt' or 'id'."""
    if g.kind is GateKind.MCT:
        return "x"
    if g.kind is GateKind.SWAP:
        return "swap"
    if g.kind is GateKind.TT:
        return "tt"
    if is_identity_gate(g):
        return "id"
    if g.kind is GateKind.CU and is_conventional(g):
        return "x"
    raise CircuitError(f"gate is not conventional: {g!r}")


def _apply_table(idx, table, lines, n: int):
    """Apply a TT permutation to an int or an int64 array of basis indices."""
    k = len(lines)
    local = 0 if isinstance(idx, int) else np.zeros_like(idx)
    for j, q in enumerate(lines):
        local = local | (((idx >> (n - 1 - q)) & 1) << (k - 1 - j))
    tab = np.asarray(table, dtype=np.int64)
    out_local = int(tab[local]) if isinstance(idx, int) else tab[local]
    res = idx & ~_mask(lines, n)
    for j, q in enumerate(lines):
        res = res | (((out_local >> (k - 1 - j)) & 1) << (n - 1 - q))
    return res


def evaluate(c: Circuit, x: int) -> int:
    """Output basis index of a conventional circuit on basis input ``x``."""
    n = c.width
    for g in c.gates:
        act = _conventional_action(g)
        if act == "x":
            cm = _mask(g.controls, n)
            if x & cm == cm:
                x ^= _bit(g.target, n)
        elif act == "swap":
            a, b = (_bit(q, n) for q in g.targets)
            if bool(x & a) != bool(x & b):
                x ^= a | b
        elif act == "tt":
            x = _apply_table(x, g.table, g.targets, n)
    return x


def evaluate_bits(c: Circuit, bits: Sequence[int]) -> tuple[int, ...]:
    from .verdict import index_of
    return bits_of(evaluate(c, index_of(bits)), c.width)


def simulate_patterns(c: Circuit, words: Sequence[int], npatterns: int) -> list[int]:
    """Bit-parallel evaluation: ``words[q]`` packs ``npatterns`` input values of line q.

    Returns the packed output values, one word per line.
    """
    full = (1 << npatterns) - 1
    vals = [w & full for w in words]
    for g in c.gates:
        act = _conventional_action(g)
        if act == "x":
            acc = full
            for q in g.controls:
                acc &= vals[q]
            vals[g.target] ^= acc
        elif act == "swap":
            a, b = g.targets
            vals[a], vals[b] = vals[b], vals[a]
        elif act == "tt":
            k = len(g.targets)
            ins = [vals[q] for q in g.targets]
            outs = [0] * k
            for local in range(1 << k):
                sel = full
                for j in range(k):
                    sel &= ins[j] if (local >> (k - 1 - j)) & 1 else ~ins[j] & full
                if not sel:
                    continue
                o = g.table[local]
                for j in range(k):
                    if (o >> (k - 1 - j)) & 1:
                        outs[j] |= sel
            for j, q in enumerate(g.targets):
                vals[q] = outs[j]
    return vals


def _check_conventional(c: Circuit, limit: int) -> None:
    if not is_conventional_circuit(c):
        raise CircuitError("circuit contains properly-quantum gates")
    if c.width > limit:
        raise SimulationLimitError(f"width {c.width} exceeds the enumeration limit {limit}")


def permutation_of(c: Circuit, limit: int = PERMUTATION_LIMIT) -> PermutationTable:
    _check_conventional(c, limit)
    n = c.width
    idx = np.arange(1 << n, dtype=np.int64)
    for g in c.gates:
        act = _conventional_action(g)
        if act == "x":
            cm = _mask(g.controls, n)
            sel = (idx & cm) == cm
            idx[sel] ^= _bit(g.target, n)
        elif act == "swap":
            a, b = (_bit(q, n) for q in g.targets)
            sel = ((idx & a) != 0) != ((idx & b) != 0)
            idx[sel] ^= a | b
        elif act == "tt":
            idx = _apply_table(idx, g.table, g.targets, n)
    return PermutationTable(n, idx)


def wire_functions(c: Circuit, limit: int = PERMUTATION_LIMIT) -> list[np.ndarray]:
    """Per-line truth tables: ``tables[q][x]`` is line q's output on input x."""
    perm = permutation_of(c, limit).map
    n = c.width
    return [((perm >> (n - 1 - q)) & 1).astype(np.uint8) for q in range(n)]


# dense simulation -------------------------------------------------------------

@lru_cache(maxsize=4096)
def _pair_indices(n: int, cmask: int, tbit: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    idx0 = idx[((idx & cmask) == cmask) & ((idx & tbit) == 0)]
    return idx0, idx0 | tbit


@lru_cache(maxsize=4096)
def _ones_indices(n: int, mask: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[(idx & mask) == mask]


def apply_gate(state: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply ``g`` to a state (``2**n``) or a batch of states (``2**n`` x B)."""
    kind = g.kind
    if kind is GateKind.CPHASE:
        if g.phase.denominator == 1:
            return state
        idx = _ones_indices(n, _mask(g.lines, n))
        out = state.copy()
        out[idx] *= phase_factor(g.phase)
        return out
    if kind is GateKind.SWAP or kind is GateKind.TT:
        idx = np.arange(1 << n, dtype=np.int64)
        if kind is GateKind.SWAP:
            a, b = (_bit(q, n) for q in g.targets)
            sel = ((idx & a) != 0) != ((idx & b) != 0)
            dest = np.where(sel, idx ^ (a | b), idx)
        else:
            dest = _apply_table(idx, g.table, g.targets, n)
        out = np.empty_like(state)
        out[dest] = state
        return out
    i0, i1 = _pair_indices(n, _mask(g.controls, n), _bit(g.target, n))
    out = state.copy()
    if kind is GateKind.MCT:
        out[i0], out[i1] = state[i1], state[i0]
        return out
    u = g.u2()
    s0, s1 = state[i0], state[i1]
    out[i0] = u[0, 0] * s0 + u[0, 1] * s1
    out[i1] = u[1, 0] * s0 + u[1, 1] * s1
    return out


def _local(c: Circuit, lines: Sequence[int]) -> Circuit:
    pos = {q: i for i, q in enumerate(lines)}
    return Circuit(max(1, len(lines)), tuple(remap(g, pos) for g in c.gates))


def simulate_basis(c: Circuit, input: int, tol: float = NORM_TOL,
                   cap: int = DENSE_LIMIT) -> StateVector:
    n = c.width
    if n > cap:
        raise SimulationLimitError(f"width {n} exceeds the dense simulation cap {cap}")
    if not 0 <= input < (1 << n):
        raise ValueError(f"basis index {input} out of range")
    state = np.zeros(1 << n, dtype=complex)
    state[input] = 1.0
    for g in c.gates:
        state = apply_gate(state, g, n)
        drift = abs(float(np.vdot(state, state).real) - 1.0)
        if drift > tol:
            raise ArithmeticError(f"norm drift {drift:.3e} after {g!r}")
    return StateVector(n, state)


def simulate_columns(c: Circuit, inputs: Sequence[int] | np.ndarray,
                     cap: int = DENSE_LIMIT) -> np.ndarray:
    """Columns ``U|b>`` for each basis index ``b`` (shape ``2**n`` x len)."""
    n = c.width
    if n > cap:
        raise SimulationLimitError(f"width {n} exceeds the dense simulation cap {cap}")
    inputs = np.asarray(inputs, dtype=np.int64)
    state = np.zeros((1 << n, len(inputs)), dtype=complex)
    state[inputs, np.arange(len(inputs))] = 1.0
    for g in c.gates:
        state = apply_gate(state, g, n)
    norms = np.sum(np.abs(state) ** 2, axis=0)
    if len(norms) and np.max(np.abs(norms - 1.0)) > NORM_TOL * max(1, len(c.gates)):
        raise ArithmeticError("norm drift beyond tolerance")
    return state


def _column_chunks(n: int, budget: int = 1 << 22):
    size = max(1, budget >> n)
    for start in range(0, 1 << n, size):
        yield np.arange(start, min(start + size, 1 << n), dtype=np.int64)


def unitary(c: Circuit, cap: int = 12) -> np.ndarray:
    return simulate_columns(c, np.arange(1 << c.width), cap=cap)


def _expand_index(local: int, lines: Sequence[int], width: int) -> int:
    k = len(lines)
    full = 0
    for j, q in enumerate(lines):
        if (local >> (k - 1 - j)) & 1:
            full |= _bit(q, width)
    return full


def unitary_equiv_identity(c: Circuit, tol: float = DEFAULT_TOL, phase_mode: str = "exact",
                           cap: int = DENSE_LIMIT) -> Verdict:
    """Is ``c`` the identity?  ``phase_mode`` is ``exact`` or ``global_phase``."""
    if phase_mode not in ("exact", "global_phase"):
        raise ValueError(f"unknown phase mode {phase_mode!r}")
    lines = sorted(circuit_support(c))
    if not lines:
        return Verdict.equivalent("quantum")
    if len(lines) > cap:
        raise SimulationLimitError(f"support of {len(lines)} lines exceeds the cap {cap}")
    local = _local(c, lines)
    k = local.width
    ref: complex | None = None
    for chunk in _column_chunks(k):
        cols = simulate_columns(local, chunk, cap=cap)
        for j, b in enumerate(chunk):
            col = cols[:, j]
            amp = col[b]
            if phase_mode == "exact":
                target = 1.0
            else:
                if ref is None:
                    ref = amp if abs(abs(amp) - 1) <= tol else 1.0
                target = ref
            dev = col.copy()
            dev[b] -= target
            if np.max(np.abs(dev)) > tol:
                witness = _expand_index(int(b), lines, c.width)
                return Verdict.not_equivalent("quantum", witness=witness,
                                              reason=f"basis input {witness} is not fixed")
    return Verdict.equivalent("quantum")


def classify_functionality(c: Circuit, tol: float = DEFAULT_TOL,
                           cap: int = DENSE_LIMIT) -> Classification:
    lines = tuple(sorted(circuit_support(c)))
    if len(lines) > cap:
        raise SimulationLimitError(f"support of {len(lines)} lines exceeds the cap {cap}")
    if not lines:
        return Classification(True, (), (0,))
    local = _local(c, lines)
    table: list[int] = []
    for chunk in _column_chunks(local.width):
        cols = simulate_columns(local, chunk, cap=cap)
        for j, b in enumerate(chunk):
            col = cols[:, j]
            o = int(np.argmax(np.abs(col)))
            dev = col.copy()
            dev[o] -= 1.0
            if np.max(np.abs(dev)) > tol:
                return Classification(False, lines, witness=int(b))
            table.append(o)
    return Classification(True, lines, tuple(table))


def distinguishing_input(c1: Circuit, c2: Circuit, tol: float = DEFAULT_TOL,
                         cap: int = DENSE_LIMIT) -> int | None:
    """First basis input on which the two circuits' outputs differ, or None.

    Lines outside both supports are left out of the simulation.
    """
    if c1.width != c2.width:
        raise CircuitError("width mismatch")
    lines = sorted(circuit_support(c1) | circuit_support(c2))
    if not lines:
        return None
    l1, l2 = _local(c1, lines), _local(c2, lines)
    if is_conventional_circuit(c1) and is_conventional_circuit(c2) and len(lines) <= PERMUTATION_LIMIT:
        diff = np.nonzero(permutation_of(l1).map != permutation_of(l2).map)[0]
        return _expand_index(int(diff[0]), lines, c1.width) if len(diff) else None
    if len(lines) > cap:
        raise SimulationLimitError(f"support of {len(lines)} lines exceeds the cap {cap}")
    for chunk in _column_chunks(len(lines)):
        a = simulate_columns(l1, chunk, cap=cap)
        b = simulate_columns(l2, chunk, cap=cap)
        bad = np.nonzero(np.max(np.abs(a - b), axis=0) > tol)[0]
        if len(bad):
            return _expand_index(int(chunk[bad[0]]), lines, c1.width)
    return None


def check_quantum(c1: Circuit, c2: Circuit, *, variant=None, tol: float = DEFAULT_TOL,
                  phase_mode: str = "exact", cap: int = DENSE_LIMIT) -> Verdict:
    """Dense identity check of the reversible miter (desk scale only)."""
    from .miter import MiterVariant, build_miter
    variant = variant or MiterVariant.C1_C2inv
    m = build_miter(c1, c2, variant)
    try:
        v = unitary_equiv_identity(m, tol=tol, phase_mode=phase_mode, cap=cap)
    except SimulationLimitError as exc:
        return Verdict.inconclusive(str(exc), "quantum")
    if v.is_not_equivalent and phase_mode == "exact":
        try:
            w = distinguishing_input(c1, c2, tol=tol, cap=cap)
        except SimulationLimitError:
            w = v.witness if variant is MiterVariant.C1_C2inv else None
        v.witness = w
        if w is not None and is_conventional_circuit(c1) and is_conventional_circuit(c2):
            v.counterexample = bits_of(w, c1.width)
    return v
