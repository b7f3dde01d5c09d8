from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from revmiter.circuit import (
    Circuit,
    CircuitError,
    CircuitParseError,
    GateKind,
    circuit_inverse,
    circuit_support,
    cnot,
    concat,
    cphase,
    cu,
    gate_inverse,
    h,
    is_conventional,
    is_conventional_circuit,
    lower_to_mct,
    mct,
    parse_circuit,
    support,
    swap,
    toffoli,
    tt,
    write_circuit,
    x,
)
from revmiter.semantics import permutation_of, unitary
from util import random_quantum, random_reversible


def test_parse_toffoli():
    c = parse_circuit(".numvars 3\nt3 a b c\n")
    assert c.width == 3
    assert c.gates == (toffoli(0, 1, 2),)


def test_parse_without_header():
    c = parse_circuit("t1 a\nt1 a\n")
    assert len(c) == 2
    assert all(g == x(0) for g in c.gates)


def test_parse_full_file_with_comments():
    text = """# demo
.numvars 3
.variables p q r
.begin
t2 p q   # cnot
f2 q r
h r
cp 1 4 p r
u 0 0 1 0 1 0 0 0 q
.end
"""
    c = parse_circuit(text)
    assert [g.kind for g in c.gates] == [GateKind.MCT, GateKind.SWAP, GateKind.H, GateKind.CPHASE, GateKind.CU]
    assert c.gates[3].phase == Fraction(1, 4)
    assert c.gates[3].controls == frozenset({0})


@pytest.mark.parametrize("text", [
    ".numvars 2\nt2 a a\n",
    ".numvars 2\nt2 a c\n",
    ".numvars 2\nzz a\n",
    ".numvars 1\nu 1 0 1 0 0 0 1 0 a\n",
    ".numvars 2\ncp 1 0 a\n",
])
def test_parse_errors_carry_line_numbers(text):
    with pytest.raises(CircuitParseError) as err:
        parse_circuit(text)
    assert err.value.lineno == 2


def test_write_examples():
    assert "t2 a b" in write_circuit(Circuit(2, (cnot(0, 1),)))
    assert "cp 1 4" in write_circuit(Circuit(2, (cphase(Fraction(1, 4), [0], 1),)))
    empty = parse_circuit(write_circuit(Circuit(4, ())))
    assert empty.width == 4 and len(empty) == 0


def test_round_trip_all_kinds():
    rng = random.Random(11)
    for trial in range(60):
        c = random_quantum(rng, rng.randint(1, 6), rng.randint(0, 25))
        if trial % 5 == 0:
            c = c.with_gates(c.gates + (tt([1, 0, 3, 2], [0, c.width - 1]) if c.width > 1 else x(0),))
        back = parse_circuit(write_circuit(c))
        assert back.width == c.width
        assert back.gates == c.gates


def test_many_lines_round_trip():
    c = Circuit(30, (mct([0, 27, 29], 28),))
    assert parse_circuit(write_circuit(c)) == c


def test_inverse_rules():
    assert gate_inverse(toffoli(0, 1, 2)) == toffoli(0, 1, 2)
    assert gate_inverse(h(0)) == h(0)
    assert gate_inverse(swap(0, 1)) == swap(1, 0)
    assert gate_inverse(cphase(Fraction(1, 8), [0], 1)).phase == Fraction(-1, 8)


def test_cu_inverse_is_adjoint():
    s = 2 ** -0.5
    g = cu([s, 1j * s, 1j * s, s], [], 0)
    prod = unitary(Circuit(1, (g, gate_inverse(g))))
    assert np.allclose(prod, np.eye(2), atol=1e-12)


def test_gate_inverse_unitarity_property():
    rng = random.Random(3)
    for _ in range(150):
        c = random_quantum(rng, 3, 1)
        g = c.gates[0]
        prod = unitary(Circuit(3, (g, gate_inverse(g))))
        assert np.max(np.abs(prod - np.eye(8))) < 1e-10


def test_circuit_inverse():
    rng = random.Random(5)
    for _ in range(40):
        c = random_quantum(rng, rng.randint(1, 6), rng.randint(0, 20))
        inv = circuit_inverse(c)
        assert len(inv) == len(c)
        assert circuit_inverse(inv) == c
        u = unitary(concat(c, inv))
        assert np.max(np.abs(u - np.eye(1 << c.width))) < 1e-9


def test_concat_width_mismatch():
    with pytest.raises(CircuitError):
        concat(Circuit(2, ()), Circuit(3, ()))


def test_concat_order():
    a, b = Circuit(2, (cnot(0, 1),)), Circuit(2, (x(1),))
    assert concat(a, b).gates == (cnot(0, 1), x(1))


def test_support():
    assert support(toffoli(0, 1, 2)) == {0, 1, 2}
    assert support(h(3)) == {3}
    assert support(swap(0, 1)) == {0, 1}
    assert circuit_support(Circuit(5, (h(3), cnot(0, 1)))) == {0, 1, 3}


def test_conventional_classification():
    assert is_conventional(toffoli(0, 1, 2))
    assert not is_conventional(h(0))
    assert is_conventional(cphase(Fraction(2, 2), [], 0))
    assert not is_conventional(cphase(Fraction(1, 4), [], 0))
    assert is_conventional(cu([0, 1, 1, 0], [1], 0))
    assert not is_conventional_circuit(Circuit(2, (cnot(0, 1), h(1))))


def test_conventional_matches_unitary_structure():
    rng = random.Random(17)
    for _ in range(200):
        g = random_quantum(rng, 3, 1).gates[0]
        u = unitary(Circuit(3, (g,)))
        perm_like = np.all(np.isclose(np.abs(u), 0) | np.isclose(u, 1)) and np.all(np.isclose(u, 1).sum(axis=0) == 1)
        assert is_conventional(g) == bool(perm_like)


def test_lower_to_mct_preserves_function():
    rng = random.Random(8)
    for _ in range(30):
        c = random_reversible(rng, 5, 20)
        assert permutation_of(lower_to_mct(c)) == permutation_of(c)


def test_bad_gates_rejected():
    with pytest.raises(CircuitError):
        mct([1], 1)
    with pytest.raises(CircuitError):
        Circuit(2, (cnot(0, 2),))
    with pytest.raises(CircuitError):
        cu([1, 1, 0, 1], [], 0)
