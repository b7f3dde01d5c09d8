"""Random circuit generators shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from revmiter.circuit import Circuit, cphase, cu, h, mct, swap


def random_mct(rng: random.Random, width: int, max_controls: int = 3):
    k = rng.randint(0, min(max_controls, width - 1))
    lines = rng.sample(range(width), k + 1)
    return mct(lines[:-1], lines[-1])


def random_reversible(rng: random.Random, width: int, ngates: int, swaps: bool = True) -> Circuit:
    gates = []
    for _ in range(ngates):
        if swaps and width >= 2 and rng.random() < 0.1:
            a, b = rng.sample(range(width), 2)
            gates.append(swap(a, b))
        else:
            gates.append(random_mct(rng, width))
    return Circuit(width, tuple(gates))


def random_unitary2(rng: random.Random) -> list[complex]:
    z = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(4)]).reshape(2, 2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return list(q.reshape(-1))


def random_quantum(rng: random.Random, width: int, ngates: int, cu_gates: bool = True) -> Circuit:
    gates = []
    for _ in range(ngates):
        r = rng.random()
        if r < 0.35:
            gates.append(random_mct(rng, width))
        elif r < 0.55:
            gates.append(h(rng.randrange(width)))
        elif r < 0.8:
            k = rng.randint(1, min(3, width))
            lines = rng.sample(range(width), k)
            gates.append(cphase(Fraction(rng.randint(1, 7), rng.choice([2, 4, 8, 16])), lines[:-1], lines[-1]))
        elif r < 0.9 and width >= 2:
            a, b = rng.sample(range(width), 2)
            gates.append(swap(a, b))
        elif cu_gates:
            k = rng.randint(0, min(2, width - 1))
            lines = rng.sample(range(width), k + 1)
            gates.append(cu(random_unitary2(rng), lines[:-1], lines[-1]))
        else:
            gates.append(h(rng.randrange(width)))
    return Circuit(width, tuple(gates))


# acceptance bookkeeping: one line per criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


class criterion:
    """Context manager that records PASS or FAIL (with a detail string) for one criterion."""

    def __init__(self, name: str):
        self.name = name
        self.detail = ""

    def __enter__(self):
        import time
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time
        took = time.perf_counter() - self.t0
        state = "PASS" if exc_type is None else "FAIL"
        why = f" ({exc})" if exc is not None and str(exc) else ""
        line = f"ACCEPTANCE {state} {self.name}: {self.detail}{why} [{took:.1f}s]"
        ACCEPTANCE.append(line)
        print(line)
        return False
