from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from revmiter.adaptive import (
    AdaptiveTrace,
    _longest_circular_run,
    adaptive_check,
    portfolio_identity,
    split_conventional_quantum,
)
from revmiter.bench import (
    GroverParts,
    checked_mutant,
    gen_adder,
    gen_qft,
    grover_case_pair,
)
from revmiter.circuit import (
    Circuit,
    CircuitError,
    cnot,
    cphase,
    circuit_inverse,
    h,
    is_conventional,
    toffoli,
    x,
)
from revmiter.miter import MiterVariant, build_miter
from revmiter.semantics import distinguishing_input, unitary, unitary_equiv_identity
from revmiter.verdict import Deadline
from util import random_quantum, random_reversible


@pytest.mark.parametrize("flags,want", [
    ([True, True, True], (0, 3)),
    ([False, True, True, False, True], (1, 2)),
    ([True, True, False, True, False, True], (5, 3)),   # wraps around the seam
    ([True, False, True, True, False, True], (2, 2)),   # tie: earliest start
    ([False, False], (0, 0)),
    ([True, False, True, False], (0, 1)),
])
def test_longest_circular_run(flags, want):
    assert _longest_circular_run(flags) == want


def test_split_examples():
    c = Circuit(3, (cnot(0, 1), toffoli(0, 1, 2)))
    sp = split_conventional_quantum(c)
    assert sp.prefix.gates == c.gates and len(sp.suffix) == 0
    m = Circuit(2, (h(0), x(1), x(1), x(1), h(0)))
    sp = split_conventional_quantum(m)
    assert sp.rotation_applied >= 1
    assert sp.prefix.gates == (x(1),) * 3
    assert sp.suffix.gates == (h(0), h(0))


def test_split_moves_commuting_gate():
    # the CNOT on lines 1,2 commutes with H on line 0 and joins the prefix
    m = Circuit(3, (toffoli(0, 1, 2), h(0), cnot(1, 2), h(0)))
    sp = split_conventional_quantum(m)
    assert all(is_conventional(g) for g in sp.prefix.gates)
    assert sp.moves_applied == 1
    assert sp.suffix.gates == (h(0), h(0))


@pytest.mark.parametrize("seed", range(40))
def test_split_preserves_identity_equivalence(seed):
    rng = random.Random(seed)
    w = rng.randint(2, 4)
    half = random_quantum(rng, w, rng.randint(1, 6), cu_gates=False)
    conv = random_reversible(rng, w, rng.randint(0, 4))
    # equivalent and inequivalent miters alike
    other = half if rng.random() < 0.5 else random_quantum(rng, w, 3, cu_gates=False)
    m = Circuit(w, conv.gates + half.gates + circuit_inverse(other).gates + circuit_inverse(conv).gates)
    rng_shuffle = rng.randrange(len(m))
    m = m.with_gates(m.gates[rng_shuffle:] + m.gates[:rng_shuffle])
    sp = split_conventional_quantum(m)
    assert all(is_conventional(g) for g in sp.prefix.gates)
    joined = Circuit(w, sp.prefix.gates + sp.suffix.gates)
    assert unitary_equiv_identity(m).status == unitary_equiv_identity(joined).status
    assert len(joined) == len(m)


def test_trace_order_enforced():
    t = AdaptiveTrace()
    t.add(1, "a", 0, 0)
    t.add(3, "b", 0, 0, outcome="Equivalent")
    with pytest.raises(ValueError):
        t.add(2, "c", 0, 0)
    assert t.deciding_step == 3
    assert t.step(1).name == "a" and t.step(2) is None
    assert [d["step"] for d in t.as_list()] == [1, 3]


def test_equal_qft_empties_at_step2():
    q = gen_qft(8)
    v, tr = adaptive_check(q, q)
    assert v.is_equivalent and tr.deciding_step == 2
    assert tr.step(2).gates_after == 0
    assert [s.step for s in tr.steps] == [1, 2]
    assert all(s.engine is None for s in tr.steps)


def test_h_versus_not():
    v, tr = adaptive_check(Circuit(1, (h(0),)), Circuit(1, (x(0),)))
    assert v.is_not_equivalent and tr.deciding_step == 6
    assert v.witness is not None
    assert v.counterexample is None


def test_conventional_residue_goes_to_cec():
    a = gen_adder(3)
    d = checked_mutant(a, "diff1", seed=4).circuit
    v, tr = adaptive_check(a, d)
    assert v.is_not_equivalent and tr.deciding_step == 3
    assert tr.step(3).engine == "cec"
    from revmiter.semantics import evaluate
    assert evaluate(a, v.witness) != evaluate(d, v.witness)
    assert v.counterexample is not None


@pytest.mark.parametrize("mode", ["midadd", "middelete"])
@pytest.mark.parametrize("count", [1, 2])
def test_qft_diff(mode, count):
    q = gen_qft(6)
    d = checked_mutant(q, mode, seed=1, count=count).circuit
    v, tr = adaptive_check(q, d)
    assert v.is_not_equivalent
    assert tr.deciding_step in (6, 7)
    w = v.witness
    assert w is not None
    assert np.max(np.abs(unitary(q)[:, w] - unitary(d)[:, w])) > 1e-9


def test_grover_case_study_trace():
    p1, p2 = grover_case_pair()
    v, tr = adaptive_check(p1.circuit, p2.circuit)
    assert v.is_equivalent
    assert tr.deciding_step == 7
    n1 = len(p1.circuit)
    removed = set(range(n1 - len(p1.walsh), n1 + len(p2.walsh)))
    assert not removed & set(tr.step(2).detail["kept"])
    assert tr.step(6).outcome == "classical"
    assert tr.step(7).engine == "cec"


def test_grover_inequivalent_variant():
    p1, p2 = grover_case_pair()
    # drop the final CNOT of the inverse swap chain
    broken = GroverParts(p2.oracle, p2.walsh,
                         p2.reflection.with_gates(p2.reflection.gates[:-1]), p2.search_lines)
    v, tr = adaptive_check(p1.circuit, broken.circuit)
    assert v.is_not_equivalent
    assert distinguishing_input(p1.circuit, broken.circuit) is not None
    w = v.witness
    assert np.max(np.abs(unitary(p1.circuit)[:, w] - unitary(broken.circuit)[:, w])) > 1e-9


@pytest.mark.parametrize("seed", range(30))
def test_adaptive_agrees_with_oracle(seed):
    rng = random.Random(1000 + seed)
    w = rng.randint(1, 4)
    c1 = random_quantum(rng, w, rng.randint(0, 8))
    r = rng.random()
    if r < 0.4:
        c2 = c1
    elif r < 0.7:
        # insert a self-cancelling pair somewhere
        g = random_quantum(rng, w, 1).gates[0]
        k = rng.randint(0, len(c1))
        from revmiter.circuit import gate_inverse
        c2 = c1.with_gates(c1.gates[:k] + (g, gate_inverse(g)) + c1.gates[k:])
    else:
        c2 = random_quantum(rng, w, rng.randint(0, 8))
    variant = rng.choice(list(MiterVariant))
    v, tr = adaptive_check(c1, c2, variant=variant)
    truth = distinguishing_input(c1, c2) is None
    assert not v.is_inconclusive
    assert v.is_equivalent == truth
    assert tr.deciding_step is not None
    if not truth:
        w_ = v.witness
        assert np.max(np.abs(unitary(c1)[:, w_] - unitary(c2)[:, w_])) > 1e-9


def test_width_mismatch():
    with pytest.raises(CircuitError):
        adaptive_check(Circuit(1, ()), Circuit(2, ()))


def test_suffix_too_wide_is_inconclusive():
    w = 6
    # rotation would cancel an H layer conjugating something, so use a bare one
    c1 = Circuit(w, tuple(h(i) for i in range(w)))
    c2 = Circuit(w, ())
    v, tr = adaptive_check(c1, c2, cap=3)
    assert v.is_inconclusive and "cap" in v.reason


def test_portfolio():
    a = gen_adder(4)
    m = build_miter(a, a)
    v = portfolio_identity(m, Deadline(30))
    assert v.is_equivalent and v.stats["portfolio_winner"] in ("sat", "bdd", "cec")
    d = checked_mutant(a, "diff2", seed=0).circuit
    v = portfolio_identity(build_miter(a, d), Deadline(30))
    assert v.is_not_equivalent
    p1, p2 = grover_case_pair()
    v, tr = adaptive_check(p1.circuit, p2.circuit, portfolio=True)
    assert v.is_equivalent and tr.deciding_step == 7


def test_timeout_is_inconclusive():
    p1, p2 = grover_case_pair()
    v, tr = adaptive_check(p1.circuit, p2.circuit, timeout=0.0)
    assert v.is_inconclusive
