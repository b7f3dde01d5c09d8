"""CNF encoding of "is this reversible miter the identity?" and the SAT engine.

Variable numbering is fixed: input lines take 1..n (line i is variable
i+1), then one fresh variable per gate target in gate order, then the
mismatch variables in line order.
"""
from __future__ import annotations

import logging
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Sequence

from .cdcl import SatResult, clause_satisfied, parse_solver_output, solve_clauses, write_dimacs
from .circuit import Circuit, CircuitError, Gate, GateKind, is_conventional_circuit, to_mct
from .miter import MiterVariant, build_miter, miter_counterexample, pull_back
from .semantics import evaluate
from .verdict import Deadline, ResourceExhausted, Verdict, bits_of, index_of

log = logging.getLogger(__name__)

SOLVER_ENV = "REVMITER_SOLVER_CMD"


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[list[int]]
    var_origin: dict[int, tuple] = field(default_factory=dict)
    width: int = 0

    def input_var(self, line: int) -> int:
        return line + 1

    def check(self) -> None:
        for cl in self.clauses:
            if not cl:
                raise CircuitError("empty clause in formula")
            for l in cl:
                if not 1 <= abs(l) <= self.num_vars:
                    raise CircuitError(f"literal {l} out of range")


@dataclass
class EncoderState:
    """Current SAT variable of every line, and the next free variable."""
    lines: list[int]
    next_var: int
    gate_index: int = 0

    @classmethod
    def initial(cls, width: int) -> EncoderState:
        return cls(list(range(1, width + 1)), width + 1)


def encode_gate(g: Gate, state: EncoderState, origin: dict[int, tuple] | None = None
                ) -> tuple[list[list[int]], EncoderState]:
    """Clauses tying the fresh target variable to the gate's inputs.

    MCT with c controls gives 2c+2 clauses.  A TT gate gets one fresh variable
    per line and one clause per (input pattern, line).
    """
    lines = list(state.lines)
    nv = state.next_var
    out: list[list[int]] = []
    if g.kind is GateKind.MCT:
        xt = lines[g.target]
        y = nv
        nv += 1
        ctl = [lines[q] for q in sorted(g.controls)]
        for xj in ctl:
            out.append([xj, -xt, y])
            out.append([xj, xt, -y])
        neg = [-xj for xj in ctl]
        out.append(neg + [xt, y])
        out.append(neg + [-xt, -y])
        lines[g.target] = y
        if origin is not None:
            origin[y] = ("gate", state.gate_index, g.target)
    elif g.kind is GateKind.TT:
        k = len(g.targets)
        ins = [lines[q] for q in g.targets]
        ys = list(range(nv, nv + k))
        nv += k
        for p in range(1 << k):
            guard = [(-ins[j] if (p >> (k - 1 - j)) & 1 else ins[j]) for j in range(k)]
            o = g.table[p]
            for j in range(k):
                out.append(guard + [ys[j] if (o >> (k - 1 - j)) & 1 else -ys[j]])
        for j, q in enumerate(g.targets):
            lines[q] = ys[j]
            if origin is not None:
                origin[ys[j]] = ("gate", state.gate_index, q)
    else:
        raise CircuitError(f"gate {g!r} must be lowered to MCT before encoding")
    return out, EncoderState(lines, nv, state.gate_index + 1)


def encode_miter(m: Circuit) -> CnfFormula | None:
    """Formula satisfiable exactly by the inputs the miter does not fix.

    Returns None when no line is ever rewritten, i.e. the miter is trivially
    the identity and no formula is needed.
    """
    if not is_conventional_circuit(m):
        raise CircuitError("SAT encoding needs a conventional circuit")
    origin: dict[int, tuple] = {i + 1: ("input", i) for i in range(m.width)}
    state = EncoderState.initial(m.width)
    clauses: list[list[int]] = []
    for g in m.gates:
        for low in to_mct(g):
            cl, state = encode_gate(low, state, origin)
            clauses.extend(cl)
    nv = state.next_var
    zs = []
    for i in range(m.width):
        x, y = i + 1, state.lines[i]
        if x == y:
            continue
        z = nv
        nv += 1
        zs.append(z)
        origin[z] = ("z", i)
        clauses += [[z, x, -y], [z, -x, y], [-z, x, y], [-z, -x, -y]]
    if not zs:
        return None
    clauses.append(zs)
    return CnfFormula(nv - 1, clauses, origin, m.width)


def export_dimacs(f: CnfFormula) -> str:
    return write_dimacs(f.num_vars, f.clauses)


class ExternalSolverError(RuntimeError):
    pass


def solve_external(f: CnfFormula, solver_cmd: str, timeout: float | None = None) -> SatResult:
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(export_dimacs(f))
        path = fh.name
    try:
        if "{file}" in solver_cmd:
            argv = shlex.split(solver_cmd.replace("{file}", shlex.quote(path)))
        else:
            argv = shlex.split(solver_cmd) + [path]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise ResourceExhausted("external solver timed out") from None
        except OSError as exc:
            raise ExternalSolverError(f"cannot run external solver: {exc}") from None
        res = parse_solver_output(proc.stdout, f.num_vars)
        if res is None:
            raise ExternalSolverError("could not parse external solver output")
        if res.satisfiable and not all(clause_satisfied(c, res.model) for c in f.clauses):
            raise ExternalSolverError("external solver model does not satisfy the formula")
        return res
    finally:
        os.unlink(path)


def solve(f: CnfFormula, deadline: Deadline | None = None, solver_cmd: str | None = None,
          max_conflicts: int | None = None) -> SatResult:
    if solver_cmd:
        return solve_external(f, solver_cmd, None if deadline is None else deadline.remaining())
    return solve_clauses(f.num_vars, f.clauses, deadline, max_conflicts)


def check_identity_sat(m: Circuit, deadline: Deadline | None = None, solver_cmd: str | None = None,
                       max_conflicts: int | None = None) -> Verdict:
    """Is the conventional circuit ``m`` the identity?  Witness bits refer to ``m``."""
    t0 = time.perf_counter()
    f = encode_miter(m)
    if f is None:
        return Verdict.equivalent("sat", vars=0, clauses=0, trivial=True)
    stats = {"vars": f.num_vars, "clauses": len(f.clauses)}
    try:
        r = solve(f, deadline, solver_cmd, max_conflicts)
    except ResourceExhausted as exc:
        return Verdict.inconclusive(str(exc), "sat", **stats)
    except ExternalSolverError as exc:
        return Verdict.inconclusive(str(exc), "sat", **stats)
    stats.update(conflicts=r.conflicts, solve_s=time.perf_counter() - t0)
    if not r.satisfiable:
        return Verdict.equivalent("sat", **stats)
    bits = tuple(int(r.model[i + 1]) for i in range(m.width))
    return Verdict.not_equivalent("sat", bits, index_of(bits), **stats)


def check_sat(c1: Circuit, c2: Circuit, *, variant: MiterVariant = MiterVariant.C1_C2inv,
              simplify: bool = True, timeout: float | None = None, solver_cmd: str | None = None,
              deadline: Deadline | None = None, budget: int | None = None) -> Verdict:
    """SAT-based equivalence check of two conventional circuits."""
    from . import rewrite
    if c1.width != c2.width:
        raise CircuitError(f"width mismatch: {c1.width} vs {c2.width}")
    if not (is_conventional_circuit(c1) and is_conventional_circuit(c2)):
        raise CircuitError("SAT checking needs conventional circuits")
    t0 = time.perf_counter()
    deadline = deadline or Deadline(timeout)
    solver_cmd = solver_cmd or os.environ.get(SOLVER_ENV) or None
    variant = MiterVariant(variant)
    m = build_miter(c1, c2, variant)
    rotated: Sequence[Gate] = ()
    stats: dict = {"miter_gates": len(m)}
    if simplify:
        try:
            m, rep = rewrite.simplify(m, rewrite.DEFAULT_BUDGET if budget is None else budget,
                                      miter=True, deadline=deadline)
        except ResourceExhausted as exc:
            return Verdict.inconclusive(str(exc), "sat", **stats)
        rotated = rep.rotated
        stats["simplified_gates"] = len(m)
    v = check_identity_sat(m, deadline, solver_cmd)
    v.stats.update(stats)
    v.stats["time_s"] = time.perf_counter() - t0
    if v.is_not_equivalent:
        orig = pull_back(v.counterexample, rotated, c1.width)
        cex = miter_counterexample(c1, c2, variant, orig)
        x = index_of(cex)
        if evaluate(c1, x) == evaluate(c2, x):
            raise AssertionError("SAT counterexample does not distinguish the circuits")
        v.counterexample, v.witness = cex, x
    return v
