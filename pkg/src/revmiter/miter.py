"""Reversible miters and the circular rotation used while simplifying them."""
from __future__ import annotations

import enum
from typing import Sequence

from .circuit import Circuit, CircuitError, circuit_inverse, concat, is_conventional_circuit
from .semantics import evaluate
from .verdict import bits_of, index_of


class MiterVariant(str, enum.Enum):
    C1_C2inv = "C1_C2inv"
    C2inv_C1 = "C2inv_C1"
    C2_C1inv = "C2_C1inv"
    C1inv_C2 = "C1inv_C2"

    @classmethod
    def parse(cls, text: str) -> MiterVariant:
        for v in cls:
            if v.value.lower() == text.lower():
                return v
        raise ValueError(f"unknown miter variant {text!r}")


def build_miter(c1: Circuit, c2: Circuit, v: MiterVariant = MiterVariant.C1_C2inv) -> Circuit:
    """Concatenation whose identity-ness is equivalent to ``c1 == c2``."""
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    v = MiterVariant(v)
    if v is MiterVariant.C1_C2inv:
        m = concat(c1, circuit_inverse(c2))
    elif v is MiterVariant.C2inv_C1:
        m = concat(circuit_inverse(c2), c1)
    elif v is MiterVariant.C2_C1inv:
        m = concat(c2, circuit_inverse(c1))
    else:
        m = concat(circuit_inverse(c1), c2)
    return Circuit(m.width, m.gates, f"miter[{v.value}]")


def rotate(c: Circuit, k: int) -> Circuit:
    """Move the first ``k`` gates to the end (identity-ness is preserved)."""
    if not 0 <= k <= len(c):
        raise ValueError(f"rotation {k} out of range for {len(c)} gates")
    return c.with_gates(c.gates[k:] + c.gates[:k])


def pull_back(bits: Sequence[int], rotated: Sequence, width: int) -> tuple[int, ...]:
    """Map a witness of a rotated conventional miter back to the unrotated one.

    ``rotated`` lists the gates in the order they were moved to the end.  A
    rotation by gate g turns M into g^-1 . M . g, so a fixed-point failure at x
    of the rotated miter is a failure at g^-1(x) of the original.
    """
    from .circuit import gate_inverse
    back = Circuit(width, tuple(gate_inverse(g) for g in reversed(rotated)))
    return bits_of(evaluate(back, index_of(bits)), width)


def miter_counterexample(c1: Circuit, c2: Circuit, v: MiterVariant,
                         bits: Sequence[int]) -> tuple[int, ...]:
    """Turn an input the miter does not fix into an input c1 and c2 disagree on."""
    if not (is_conventional_circuit(c1) and is_conventional_circuit(c2)):
        raise CircuitError("counterexample mapping needs conventional circuits")
    x = index_of(bits)
    if v is MiterVariant.C2inv_C1:
        x = evaluate(circuit_inverse(c2), x)
    elif v is MiterVariant.C1inv_C2:
        x = evaluate(circuit_inverse(c1), x)
    return bits_of(x, c1.width)
