"""A small conflict-driven clause-learning SAT solver plus DIMACS helpers.

Literals are signed 1-based integers on the outside.  Internally literal
``v`` is stored as ``2v`` and ``-v`` as ``2v+1`` so negation is ``i ^ 1``.
"""
from __future__ import annotations

import heapq
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .verdict import ResourceExhausted


@dataclass
class SatResult:
    satisfiable: bool
    model: tuple[bool, ...] | None = None   # model[v] for v >= 1; model[0] unused
    conflicts: int = 0
    decisions: int = 0

    def value(self, var: int) -> bool:
        if self.model is None:
            raise ValueError("no model for an unsatisfiable result")
        return self.model[var]


def _luby(i: int) -> int:
    # 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ...
    k = 1
    while (1 << k) - 1 < i + 1:
        k += 1
    while True:
        if i + 1 == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i + 1:
            k += 1


def clause_satisfied(clause: Sequence[int], model: Sequence[bool]) -> bool:
    return any(model[abs(l)] == (l > 0) for l in clause)


class CdclSolver:
    RESTART_BASE = 100
    VAR_DECAY = 0.95

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]], deadline=None,
                 max_conflicts: int | None = None):
        self.n = num_vars
        self.deadline = deadline
        self.max_conflicts = max_conflicts
        size = 2 * (num_vars + 1)
        self.lv = [0] * size                 # literal value: 1 true, -1 false, 0 free
        self.level = [0] * (num_vars + 1)
        self.reason: list[int | None] = [None] * (num_vars + 1)
        self.watches: list[list[int]] = [[] for _ in range(size)]
        self.clauses: list[list[int] | None] = []
        self.learnt_ids: list[int] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.activity = [0.0] * (num_vars + 1)
        self.var_inc = 1.0
        self.phase = [False] * (num_vars + 1)
        self.heap = [(0.0, v) for v in range(1, num_vars + 1)]
        heapq.heapify(self.heap)
        self.conflicts = 0
        self.decisions = 0
        self.original: list[list[int]] = []
        self.unsat = False
        for cl in clauses:
            self.original.append(list(cl))
            self._add_input_clause(cl)

    # construction -------------------------------------------------------------
    @staticmethod
    def _lit(l: int) -> int:
        return 2 * l if l > 0 else -2 * l + 1

    def _add_input_clause(self, cl: Sequence[int]) -> None:
        if self.unsat:
            return
        lits: list[int] = []
        seen = set()
        for l in cl:
            if l == 0 or abs(l) > self.n:
                raise ValueError(f"literal {l} out of range 1..{self.n}")
            i = self._lit(l)
            if i ^ 1 in seen:
                return  # tautology
            if i not in seen:
                seen.add(i)
                lits.append(i)
        # drop literals already false at level 0, skip satisfied clauses
        lits = [i for i in lits if self.lv[i] != -1]
        if any(self.lv[i] == 1 for i in lits):
            return
        if not lits:
            self.unsat = True
            return
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.unsat = True
            return
        cr = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(cr)
        self.watches[lits[1]].append(cr)

    # core ---------------------------------------------------------------------
    def _enqueue(self, i: int, reason: int | None) -> None:
        v = i >> 1
        self.lv[i] = 1
        self.lv[i ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(i)

    def _propagate(self) -> int | None:
        lv, clauses, watches, trail = self.lv, self.clauses, self.watches, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            fl = p ^ 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                cr = ws[i]
                i += 1
                c = clauses[cr]
                if c is None:
                    continue
                if c[0] == fl:
                    c[0], c[1] = c[1], fl
                first = c[0]
                if lv[first] == 1:
                    ws[j] = cr
                    j += 1
                    continue
                for k in range(2, len(c)):
                    q = c[k]
                    if lv[q] != -1:
                        c[1] = q
                        c[k] = fl
                        watches[q].append(cr)
                        break
                else:
                    ws[j] = cr
                    j += 1
                    if lv[first] == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return cr
                    self._enqueue(first, cr)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        a = self.activity[v] + self.var_inc
        self.activity[v] = a
        if a > 1e100:
            self.activity = [x * 1e-100 for x in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.lv[2 * u] == 0]
            heapq.heapify(self.heap)
        else:
            heapq.heappush(self.heap, (-a, v))

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen = self._seen
        level = self.level
        cur = len(self.trail_lim)
        learnt = [0]
        counter = 0
        p = -1
        idx = len(self.trail) - 1
        touched = []
        while True:
            c = self.clauses[confl]
            for q in (c if p < 0 else c[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    touched.append(v)
                    self._bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = False
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[v]
        learnt[0] = p ^ 1
        for v in touched:
            seen[v] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for i in range(len(self.trail) - 1, start - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            self.phase[v] = not (lit & 1)
            self.lv[lit] = 0
            self.lv[lit ^ 1] = 0
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick(self) -> int | None:
        heap, lv = self.heap, self.lv
        while heap:
            _, v = heapq.heappop(heap)
            if lv[2 * v] == 0:
                return v
        return None

    def _reduce_db(self) -> None:
        # called at decision level 0 only, so no learnt clause is a live reason
        keep = max(2000, len(self.original))
        if len(self.learnt_ids) <= keep:
            return
        alive = [cr for cr in self.learnt_ids if self.clauses[cr] is not None]
        alive.sort(key=lambda cr: len(self.clauses[cr]))
        for cr in alive[keep // 2:]:
            self.clauses[cr] = None
        self.learnt_ids = alive[: keep // 2]

    def solve(self) -> SatResult:
        if self.unsat:
            return SatResult(False)
        self._seen = [False] * (self.n + 1)
        if self._propagate() is not None:
            return SatResult(False)
        restart_no = 0
        budget = self.RESTART_BASE * _luby(restart_no)
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    return SatResult(False, conflicts=self.conflicts, decisions=self.decisions)
                if self.conflicts & 255 == 0:
                    if self.deadline is not None:
                        self.deadline.check()
                if self.max_conflicts is not None and self.conflicts > self.max_conflicts:
                    raise ResourceExhausted("conflict budget exhausted")
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    cr = len(self.clauses)
                    self.clauses.append(learnt)
                    self.learnt_ids.append(cr)
                    self.watches[learnt[0]].append(cr)
                    self.watches[learnt[1]].append(cr)
                    self._enqueue(learnt[0], cr)
                self.var_inc /= self.VAR_DECAY
                continue
            if since_restart >= budget:
                restart_no += 1
                budget = self.RESTART_BASE * _luby(restart_no)
                since_restart = 0
                self._backtrack(0)
                self._reduce_db()
                continue
            v = self._pick()
            if v is None:
                model = [False] * (self.n + 1)
                for v2 in range(1, self.n + 1):
                    model[v2] = self.lv[2 * v2] == 1
                for cl in self.original:
                    if not clause_satisfied(cl, model):
                        raise AssertionError("solver produced a model that violates a clause")
                return SatResult(True, tuple(model), self.conflicts, self.decisions)
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(2 * v + (0 if self.phase[v] else 1), None)


def solve_clauses(num_vars: int, clauses: Iterable[Sequence[int]], deadline=None,
                  max_conflicts: int | None = None) -> SatResult:
    return CdclSolver(num_vars, clauses, deadline, max_conflicts).solve()


# DIMACS ------------------------------------------------------------------------

def write_dimacs(num_vars: int, clauses: Sequence[Sequence[int]], comments: Sequence[str] = ()) -> str:
    out = io.StringIO()
    for c in comments:
        out.write(f"c {c}\n")
    out.write(f"p cnf {num_vars} {len(clauses)}\n")
    for cl in clauses:
        out.write(" ".join(str(l) for l in cl) + " 0\n")
    return out.getvalue()


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    num_vars = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            l = int(tok)
            if l == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(l)
    if cur:
        clauses.append(cur)
    if num_vars is None:
        raise ValueError("missing DIMACS header")
    return num_vars, clauses


def parse_solver_output(text: str, num_vars: int) -> SatResult | None:
    """Read "s ..." / "v ..." lines; None when the output is not understood."""
    status = None
    vals: dict[int, bool] = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "s" and len(parts) >= 2:
            status = " ".join(parts[1:]).upper()
        elif parts[0] == "v":
            try:
                for tok in parts[1:]:
                    l = int(tok)
                    if l:
                        vals[abs(l)] = l > 0
            except ValueError:
                return None
    if status == "UNSATISFIABLE":
        return SatResult(False)
    if status == "SATISFIABLE":
        model = [False] * (num_vars + 1)
        for v, b in vals.items():
            if 1 <= v <= num_vars:
                model[v] = b
        return SatResult(True, tuple(model))
    return None
