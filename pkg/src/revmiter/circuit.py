"""Circuit intermediate representation shared by every engine.

A :class:`Circuit` is an ordered list of immutable :class:`Gate` values acting
on ``width`` lines.  Line 0 is the most significant bit of a basis index, so
on three lines the basis index ``0b110`` means lines 0 and 1 carry 1.

Gate kinds:

* ``MCT``    multi-control Toffoli (NOT / CNOT / Toffoli / wider)
* ``SWAP``   exchange of two lines
* ``H``      Hadamard
* ``CPHASE`` controlled phase ``exp(2*pi*i*phase)`` on the all-ones state of
             its support, phase stored as an exact fraction of a full turn
* ``CU``     controlled single-line unitary given by a 2x2 matrix
* ``TT``     truth-table gate: an arbitrary permutation of the basis states of
             its (ordered) lines.  Produced internally when a classical residue
             of a quantum miter is handed to a Boolean engine.
"""
from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

UNITARY_TOL = 1e-12


class CircuitError(ValueError):
    """Structural problem with a gate or circuit."""


class CircuitParseError(CircuitError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class GateKind(str, enum.Enum):
    MCT = "MCT"
    SWAP = "SWAP"
    H = "H"
    CPHASE = "CPHASE"
    CU = "CU"
    TT = "TT"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    controls: frozenset[int] = frozenset()
    targets: tuple[int, ...] = ()
    phase: Fraction | None = None
    matrix: tuple[complex, complex, complex, complex] | None = None
    table: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        kind = self.kind
        object.__setattr__(self, "controls", frozenset(self.controls))
        object.__setattr__(self, "targets", tuple(self.targets))
        lines = list(self.controls) + list(self.targets)
        if any((not isinstance(q, (int, np.integer))) or q < 0 for q in lines):
            raise CircuitError(f"line indices must be non-negative integers: {lines}")
        if len(set(lines)) != len(lines):
            raise CircuitError(f"gate touches a line twice: {lines}")
        if kind is GateKind.SWAP:
            if len(self.targets) != 2 or self.controls:
                raise CircuitError("SWAP takes exactly two lines and no controls")
            object.__setattr__(self, "targets", tuple(sorted(self.targets)))
        elif kind is GateKind.TT:
            k = len(self.targets)
            if self.controls or k == 0:
                raise CircuitError("TT gate needs at least one line and no controls")
            if self.table is None or sorted(self.table) != list(range(1 << k)):
                raise CircuitError("TT table must be a permutation of 0..2^k-1")
            object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        elif len(self.targets) != 1:
            raise CircuitError(f"{kind.value} gate takes exactly one target")
        if kind is GateKind.CPHASE:
            if self.phase is None:
                raise CircuitError("CPHASE needs a phase")
            object.__setattr__(self, "phase", Fraction(self.phase))
        if kind is GateKind.CU:
            if self.matrix is None or len(self.matrix) != 4:
                raise CircuitError("CU needs a 2x2 matrix")
            m = tuple(complex(v) for v in self.matrix)
            object.__setattr__(self, "matrix", m)
            u = np.array(m).reshape(2, 2)
            if not np.allclose(u @ u.conj().T, np.eye(2), atol=UNITARY_TOL, rtol=0):
                raise CircuitError(f"CU matrix is not unitary: {m}")

    def __hash__(self) -> int:
        # gates are hashed constantly by the rewrite caches; compute once
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.controls, self.targets, self.phase, self.matrix, self.table))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def target(self) -> int:
        return self.targets[0]

    @property
    def lines(self) -> frozenset[int]:
        return self.controls | frozenset(self.targets)

    def u2(self) -> np.ndarray:
        """2x2 matrix applied to the target when all controls are 1."""
        return _u2(self)

    def __repr__(self) -> str:
        parts = [self.kind.value]
        if self.controls:
            parts.append("c=" + ",".join(map(str, sorted(self.controls))))
        parts.append("t=" + ",".join(map(str, self.targets)))
        if self.phase is not None:
            parts.append(f"p={self.phase}")
        if self.matrix is not None:
            parts.append("u=" + repr(self.matrix))
        if self.table is not None:
            parts.append("tt=" + repr(self.table))
        return "Gate(" + " ".join(parts) + ")"


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def phase_factor(p: Fraction) -> complex:
    """exp(2*pi*i*p), exact on multiples of a quarter turn."""
    p = p % 1
    exact = {Fraction(0): 1, Fraction(1, 4): 1j, Fraction(1, 2): -1, Fraction(3, 4): -1j}
    if p in exact:
        return complex(exact[p])
    return complex(np.exp(2j * np.pi * float(p)))


@lru_cache(maxsize=None)
def _u2(g: Gate) -> np.ndarray:
    if g.kind is GateKind.MCT:
        return _X
    if g.kind is GateKind.H:
        return _H
    if g.kind is GateKind.CPHASE:
        return np.diag([1, phase_factor(g.phase)]).astype(complex)
    if g.kind is GateKind.CU:
        return np.array(g.matrix).reshape(2, 2)
    raise CircuitError(f"{g.kind.value} has no single-line matrix")


# constructors -------------------------------------------------------------

def mct(controls: Iterable[int], target: int) -> Gate:
    return Gate(GateKind.MCT, frozenset(controls), (target,))


def x(target: int) -> Gate:
    return mct((), target)


def cnot(control: int, target: int) -> Gate:
    return mct((control,), target)


def toffoli(c1: int, c2: int, target: int) -> Gate:
    return mct((c1, c2), target)


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, frozenset(), (a, b))


def h(target: int) -> Gate:
    return Gate(GateKind.H, frozenset(), (target,))


def cphase(phase: Fraction | int, controls: Iterable[int], target: int) -> Gate:
    return Gate(GateKind.CPHASE, frozenset(controls), (target,), phase=Fraction(phase))


def cu(matrix: Sequence[complex], controls: Iterable[int], target: int) -> Gate:
    return Gate(GateKind.CU, frozenset(controls), (target,), matrix=tuple(matrix))


def tt(table: Sequence[int], lines: Sequence[int]) -> Gate:
    return Gate(GateKind.TT, frozenset(), tuple(lines), table=tuple(table))


# circuit ------------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.width, (int, np.integer)) or self.width < 1:
            raise CircuitError(f"width must be a positive integer, got {self.width!r}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if not isinstance(g, Gate):
                raise CircuitError(f"not a gate: {g!r}")
            for q in g.lines:
                if q >= self.width:
                    raise CircuitError(f"line {q} out of range for width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Circuit(self.width, self.gates[i])
        return self.gates[i]

    def with_gates(self, gates: Iterable[Gate]) -> Circuit:
        return Circuit(self.width, tuple(gates), self.name)

    def __add__(self, other: Circuit) -> Circuit:
        return concat(self, other)

    def inverse(self) -> Circuit:
        return circuit_inverse(self)


def gate_inverse(g: Gate) -> Gate:
    if g.kind in (GateKind.MCT, GateKind.SWAP, GateKind.H):
        return g
    if g.kind is GateKind.CPHASE:
        return Gate(GateKind.CPHASE, g.controls, g.targets, phase=-g.phase)
    if g.kind is GateKind.CU:
        u = np.array(g.matrix).reshape(2, 2).conj().T
        return Gate(GateKind.CU, g.controls, g.targets, matrix=tuple(u.reshape(-1)))
    inv = [0] * len(g.table)
    for i, o in enumerate(g.table):
        inv[o] = i
    return Gate(GateKind.TT, frozenset(), g.targets, table=tuple(inv))


def circuit_inverse(c: Circuit) -> Circuit:
    name = f"{c.name}^-1" if c.name else None
    return Circuit(c.width, tuple(gate_inverse(g) for g in reversed(c.gates)), name)


def concat(c1: Circuit, c2: Circuit) -> Circuit:
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    return Circuit(c1.width, c1.gates + c2.gates)


def support(g: Gate) -> frozenset[int]:
    return g.lines


def circuit_support(c: Circuit) -> frozenset[int]:
    out: set[int] = set()
    for g in c.gates:
        out |= g.lines
    return frozenset(out)


def _is_permutation_matrix(m: Sequence[complex]) -> bool:
    vals = np.array(m)
    return bool(np.all((np.abs(vals) < UNITARY_TOL) | (np.abs(vals - 1) < UNITARY_TOL)))


def is_conventional(g: Gate) -> bool:
    if g.kind in (GateKind.MCT, GateKind.SWAP, GateKind.TT):
        return True
    if g.kind is GateKind.CPHASE:
        return g.phase.denominator == 1
    if g.kind is GateKind.CU:
        return _is_permutation_matrix(g.matrix)
    return False


def is_conventional_circuit(c: Circuit) -> bool:
    return all(is_conventional(g) for g in c.gates)


def is_identity_gate(g: Gate) -> bool:
    """Gates whose unitary is exactly the identity."""
    if g.kind is GateKind.CPHASE:
        return g.phase.denominator == 1
    if g.kind is GateKind.CU:
        return bool(np.allclose(np.array(g.matrix), [1, 0, 0, 1], atol=UNITARY_TOL, rtol=0))
    if g.kind is GateKind.TT:
        return g.table == tuple(range(len(g.table)))
    return False


def to_mct(g: Gate) -> list[Gate]:
    """Rewrite a conventional gate as MCT gates (TT gates are returned as is).

    SWAP becomes three CNOTs; a 0-1 CU becomes its MCT (or nothing when it is
    the identity); a CPHASE with integral phase disappears.
    """
    if g.kind in (GateKind.MCT, GateKind.TT):
        return [g]
    if g.kind is GateKind.SWAP:
        a, b = g.targets
        return [cnot(a, b), cnot(b, a), cnot(a, b)]
    if is_identity_gate(g):
        return []
    if g.kind is GateKind.CU and _is_permutation_matrix(g.matrix):
        return [mct(g.controls, g.target)]
    raise CircuitError(f"not a conventional gate: {g!r}")


def lower_to_mct(c: Circuit) -> Circuit:
    """Conventional circuit over MCT (and TT) gates only."""
    out: list[Gate] = []
    for g in c.gates:
        out.extend(to_mct(g))
    return c.with_gates(out)


def remap(g: Gate, mapping: Sequence[int] | dict[int, int]) -> Gate:
    """Relabel the lines of a gate."""
    controls = frozenset(mapping[q] for q in g.controls)
    targets = tuple(mapping[q] for q in g.targets)
    if g.kind is GateKind.SWAP:
        return swap(*targets)
    return Gate(g.kind, controls, targets, g.phase, g.matrix, g.table)


# text format ----------------------------------------------------------------

def default_line_names(n: int) -> list[str]:
    """a, b, ..., z, aa, ab, ... (spreadsheet-style)."""
    names = []
    for i in range(n):
        s = ""
        k = i
        while True:
            s = chr(ord("a") + k % 26) + s
            k = k // 26 - 1
            if k < 0:
                break
        names.append(s)
    return names


_GATE_RE = re.compile(r"^(t|tt)(\d+)$")


def parse_circuit(text: str | io.TextIOBase, name: str | None = None) -> Circuit:
    """Read the line-oriented circuit format (see README)."""
    if not isinstance(text, str):
        text = text.read()
    width: int | None = None
    names: list[str] | None = None
    index: dict[str, int] = {}
    pending: list[tuple[int, list[str]]] = []
    ended = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise CircuitParseError("content after .end", lineno)
        toks = line.split()
        head = toks[0].lower()
        if head == ".numvars":
            if width is not None or pending:
                raise CircuitParseError(".numvars must come first and only once", lineno)
            if len(toks) != 2 or not toks[1].isdigit() or int(toks[1]) < 1:
                raise CircuitParseError("'.numvars N' expects a positive integer", lineno)
            width = int(toks[1])
        elif head == ".variables":
            if names is not None or pending:
                raise CircuitParseError(".variables must precede gates", lineno)
            names = toks[1:]
            if len(set(names)) != len(names):
                raise CircuitParseError("duplicate variable names", lineno)
            if width is not None and len(names) != width:
                raise CircuitParseError(f"expected {width} variable names, got {len(names)}", lineno)
        elif head == ".begin":
            continue
        elif head == ".end":
            ended = True
        elif head.startswith("."):
            continue  # unknown directives (.version, .inputs, ...) are ignored
        else:
            pending.append((lineno, toks))
    if names is None:
        if width is None:
            # no declaration: infer from the highest default name used
            used = [t for _, toks in pending for t in toks[1:] if t.isalpha()]
            defaults = default_line_names(702)
            lookup = {s: i for i, s in enumerate(defaults)}
            hi = max((lookup[t] for t in used if t in lookup), default=0)
            width = hi + 1
        names = default_line_names(width)
    elif width is None:
        width = len(names)
    index = {s: i for i, s in enumerate(names)}

    def lineref(tok: str, lineno: int) -> int:
        if tok in index:
            return index[tok]
        raise CircuitParseError(f"unknown line {tok!r}", lineno)

    gates: list[Gate] = []
    for lineno, toks in pending:
        head = toks[0].lower()
        args = toks[1:]
        try:
            m = _GATE_RE.match(head)
            if m and m.group(1) == "t":
                k = int(m.group(2))
                if k < 1 or len(args) != k:
                    raise CircuitParseError(f"{head} expects {k} lines, got {len(args)}", lineno)
                ls = [lineref(a, lineno) for a in args]
                gates.append(mct(ls[:-1], ls[-1]))
            elif m and m.group(1) == "tt":
                k = int(m.group(2))
                nvals = 1 << k
                if k < 1 or len(args) != nvals + k:
                    raise CircuitParseError(f"{head} expects {nvals} table entries and {k} lines", lineno)
                table = [int(v) for v in args[:nvals]]
                ls = [lineref(a, lineno) for a in args[nvals:]]
                gates.append(tt(table, ls))
            elif head in ("f2", "swap"):
                if len(args) != 2:
                    raise CircuitParseError("f2 expects 2 lines", lineno)
                gates.append(swap(lineref(args[0], lineno), lineref(args[1], lineno)))
            elif head == "h":
                if len(args) != 1:
                    raise CircuitParseError("h expects 1 line", lineno)
                gates.append(h(lineref(args[0], lineno)))
            elif head == "cp":
                if len(args) < 3:
                    raise CircuitParseError("cp expects NUM DEN and at least one line", lineno)
                num, den = int(args[0]), int(args[1])
                if den <= 0:
                    raise CircuitParseError("cp denominator must be positive", lineno)
                ls = [lineref(a, lineno) for a in args[2:]]
                gates.append(cphase(Fraction(num, den), ls[:-1], ls[-1]))
            elif head == "u":
                if len(args) < 9:
                    raise CircuitParseError("u expects 8 reals and at least one line", lineno)
                vals = [float(v) for v in args[:8]]
                mat = [complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]
                ls = [lineref(a, lineno) for a in args[8:]]
                gates.append(cu(mat, ls[:-1], ls[-1]))
            else:
                raise CircuitParseError(f"unknown gate {toks[0]!r}", lineno)
        except CircuitParseError:
            raise
        except (CircuitError, ValueError) as exc:
            raise CircuitParseError(str(exc), lineno) from None
    try:
        return Circuit(width, tuple(gates), name)
    except CircuitError as exc:
        raise CircuitParseError(str(exc)) from None


def _fmt_gate(g: Gate, names: Sequence[str]) -> str:
    ctl = [names[q] for q in sorted(g.controls)]
    tgt = [names[q] for q in g.targets]
    if g.kind is GateKind.MCT:
        return f"t{len(ctl) + 1} " + " ".join(ctl + tgt)
    if g.kind is GateKind.SWAP:
        return "f2 " + " ".join(tgt)
    if g.kind is GateKind.H:
        return "h " + tgt[0]
    if g.kind is GateKind.CPHASE:
        p = g.phase
        return f"cp {p.numerator} {p.denominator} " + " ".join(ctl + tgt)
    if g.kind is GateKind.CU:
        vals = " ".join(f"{v.real!r} {v.imag!r}" for v in g.matrix)
        return f"u {vals} " + " ".join(ctl + tgt)
    k = len(g.targets)
    return f"tt{k} " + " ".join(map(str, g.table)) + " " + " ".join(tgt)


def write_circuit(c: Circuit) -> str:
    names = default_line_names(c.width)
    out = []
    if c.name:
        out.append(f"# {c.name}")
    out.append(f".numvars {c.width}")
    out.append(".variables " + " ".join(names))
    out.append(".begin")
    out.extend(_fmt_gate(g, names) for g in c.gates)
    out.append(".end")
    return "\n".join(out) + "\n"


def read_circuit_file(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read(), name=str(path))


def write_circuit_file(c: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_circuit(c))
