"""Local simplification of circuits and reversible miters.

The driver :func:`simplify` repeats four kinds of step until nothing changes:

1. cancellation of adjacent mutually-inverse gates,
2. a forward scan that commutes a gate towards its inverse (or towards a
   CPHASE it can be fused with), optionally through one complicated MCT swap,
3. template rewriting,
4. for miters only, rotation of the first gate to the end.

Every step except rotation is an exact circuit identity.  Rotation preserves
only whether the circuit is the identity, which is why it is gated on
``miter=True``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    circuit_inverse,
    cnot,
    cphase,
    gate_inverse,
    is_identity_gate,
    mct,
    parse_circuit,
    swap,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 100_000


# gate relations -----------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def _key(g: Gate):
    if g.kind is GateKind.MCT:
        return ("x", g.controls, g.target)
    if g.kind is GateKind.SWAP:
        return ("s", g.targets)
    if g.kind is GateKind.H:
        return ("h", g.target)
    if g.kind is GateKind.CPHASE:
        return ("p", g.lines, g.phase % 1)
    if g.kind is GateKind.TT:
        return ("tt", g.targets, g.table)
    return ("u", g.controls, g.target, g.matrix)


@lru_cache(maxsize=1 << 16)
def _inverse_key(g: Gate):
    return _key(gate_inverse(g))


def is_inverse_pair(g1: Gate, g2: Gate) -> bool:
    """Does g1 followed by g2 multiply to the identity?"""
    if g1.kind is not g2.kind:
        return False
    if g1.kind is GateKind.CU:
        if g1.controls != g2.controls or g1.targets != g2.targets:
            return False
        return bool(np.allclose(g2.u2() @ g1.u2(), np.eye(2), atol=1e-12, rtol=0))
    return _inverse_key(g1) == _key(g2)


_X = np.array([[0, 1], [1, 0]], dtype=complex)


@lru_cache(maxsize=1 << 16)
def _actions(g: Gate) -> dict[int, object]:
    """How a gate acts on each of its lines: 'D' diagonal, 'S' opaque, or a 2x2 matrix."""
    if g.kind in (GateKind.SWAP, GateKind.TT):
        return {q: "S" for q in g.targets}
    act: dict[int, object] = {q: "D" for q in g.controls}
    if g.kind is GateKind.CPHASE:
        act[g.target] = "D"
        return act
    u = g.u2()
    if abs(u[0, 1]) < 1e-15 and abs(u[1, 0]) < 1e-15:
        act[g.target] = "D"
    else:
        act[g.target] = u
    return act


def _matrices_commute(a, b) -> bool:
    if a is b:
        return True
    return bool(np.allclose(a @ b, b @ a, atol=1e-12, rtol=0))


@lru_cache(maxsize=1 << 18)
def can_swap_simple(g1: Gate, g2: Gate) -> bool:
    """Exact commutation test for adjacent gates.

    True when the supports are disjoint, or when on every shared line both
    gates are diagonal, except possibly one shared target line on which both
    act with commuting matrices (e.g. two MCT gates flipping the same target).
    For MCT pairs this is: no target of one is a control of the other.
    """
    shared = g1.lines & g2.lines
    if not shared:
        return True
    a1, a2 = _actions(g1), _actions(g2)
    for q in shared:
        x, y = a1[q], a2[q]
        if isinstance(x, str) and isinstance(y, str):
            if x == "D" and y == "D":
                continue
            return False
        if isinstance(x, str) or isinstance(y, str):
            return False
        if not _matrices_commute(x, y):
            return False
    return True


def swap_complicated(g1: Gate, g2: Gate) -> list[Gate]:
    """Rewrite ``[g1, g2]`` as the equal sequence ``[g2, g3, g1]``.

    Requires two MCT gates where the target of g1 controls g2 and the target
    of g2 does not control g1.  Then g2 moving left past g1 leaves behind
    ``g3 = MCT(controls(g1) | controls(g2) - {target(g1)} -> target(g2))``.
    """
    if g1.kind is not GateKind.MCT or g2.kind is not GateKind.MCT:
        raise CircuitError("complicated swap is defined for MCT gates only")
    t1, t2 = g1.target, g2.target
    if t1 not in g2.controls or t2 in g1.controls:
        raise CircuitError("complicated swap needs target(g1) in controls(g2) "
                           "and target(g2) not in controls(g1)")
    g3 = mct(g1.controls | (g2.controls - {t1}), t2)
    return [g2, g3, g1]


def _complicated_right(g: Gate, h: Gate) -> Gate | None:
    """If ``[g, h] == [h, g3, g]`` by a complicated swap, return g3."""
    if g.kind is not GateKind.MCT or h.kind is not GateKind.MCT:
        return None
    tg, th = g.target, h.target
    if tg in h.controls and th not in g.controls:
        return swap_complicated(g, h)[1]
    if th in g.controls and tg not in h.controls:
        # mirrored case: invert both sides of the rule applied to [h, g]
        return swap_complicated(h, g)[1]
    return None


# templates -----------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    lhs: Circuit
    rhs: Circuit
    name: str = ""

    def __post_init__(self):
        if self.lhs.width != self.rhs.width:
            raise CircuitError(f"template {self.name}: lhs/rhs widths differ")
        if len(self.rhs) > len(self.lhs):
            raise CircuitError(f"template {self.name}: rhs is longer than lhs")


class TemplateError(CircuitError):
    pass


def verify_template(t: Template, tol: float = 1e-10, phase_mode: str = "exact") -> bool:
    from .semantics import unitary
    if t.lhs.width > 6:
        raise TemplateError(f"template {t.name}: wider than 6 lines cannot be verified")
    a, b = unitary(t.lhs), unitary(t.rhs)
    if phase_mode == "global_phase":
        k = np.unravel_index(np.argmax(np.abs(a)), a.shape)
        if abs(b[k]) < tol:
            return False
        b = b * (a[k] / b[k])
    return bool(np.max(np.abs(a - b)) <= tol)


def parse_templates(text: str, phase_mode: str = "exact") -> list[Template]:
    """Parse a template library: blocks of ``.template NAME``, lhs, ``.rhs``, rhs."""
    blocks: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped.lower().startswith(".template"):
            parts = stripped.split(None, 1)
            current = []
            blocks.append((parts[1] if len(parts) > 1 else f"t{len(blocks)}", current))
            continue
        if current is None:
            current = []
            blocks.append(("t0", current))
        current.append(raw)
    out = []
    for name, lines in blocks:
        if not any(l.split("#", 1)[0].strip() for l in lines):
            continue
        split = [i for i, l in enumerate(lines) if l.split("#", 1)[0].strip().lower() == ".rhs"]
        if len(split) != 1:
            raise TemplateError(f"template {name}: expected exactly one .rhs directive")
        head = [l for l in lines[: split[0]] if l.strip().lower().startswith((".numvars", ".variables"))]
        lhs = parse_circuit("\n".join(lines[: split[0]]))
        rhs_text = "\n".join(head + lines[split[0] + 1:])
        rhs = parse_circuit(rhs_text)
        if rhs.width != lhs.width:
            rhs = Circuit(lhs.width, rhs.gates)
        t = Template(lhs, rhs, name)
        if not verify_template(t, phase_mode=phase_mode):
            raise TemplateError(f"template {name}: lhs and rhs are not equivalent")
        out.append(t)
    return out


def load_templates(path=None, phase_mode: str = "exact") -> list[Template]:
    if path is None:
        text = resources.files("revmiter").joinpath("data/templates.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_templates(text, phase_mode=phase_mode)


_DEFAULT_LIB: list[Template] | None = None


def default_templates() -> list[Template]:
    global _DEFAULT_LIB
    if _DEFAULT_LIB is None:
        _DEFAULT_LIB = load_templates()
    return list(_DEFAULT_LIB)


def _match_gate(p: Gate, g: Gate, phi: dict[int, int], used: set[int]) -> list[dict[int, int]]:
    """All extensions of the line map ``phi`` under which pattern p equals g."""
    if p.kind is not g.kind or len(p.controls) != len(g.controls) or len(p.targets) != len(g.targets):
        return []
    if p.kind is GateKind.CPHASE:
        if p.phase % 1 != g.phase % 1:
            return []
        # diagonal: the split between controls and target is irrelevant
        pl, gl = sorted(p.lines), sorted(g.lines)
        return _bind_sets(pl, gl, phi, used)
    if p.kind is GateKind.CU and not np.allclose(p.u2(), g.u2(), atol=1e-12, rtol=0):
        return []
    if p.kind is GateKind.TT and p.table != g.table:
        return []
    target_options = [p.targets]
    if p.kind is GateKind.SWAP:
        target_options.append(p.targets[::-1])
    out = []
    for pts in target_options:
        base = dict(phi)
        busy = set(used)
        ok = True
        for a, b in zip(pts, g.targets):
            if a in base:
                if base[a] != b:
                    ok = False
                    break
            elif b in busy:
                ok = False
                break
            else:
                base[a] = b
                busy.add(b)
        if ok:
            out.extend(_bind_sets(sorted(p.controls), sorted(g.controls), base, busy))
    return out


def _bind_sets(ps: Sequence[int], gs: Sequence[int], phi: dict[int, int], used: set[int]):
    fixed_p = [a for a in ps if a in phi]
    if not {phi[a] for a in fixed_p} <= set(gs):
        return []
    free_p = [a for a in ps if a not in phi]
    free_g = [b for b in gs if b not in {phi[a] for a in fixed_p}]
    if any(b in used for b in free_g):
        return []
    out = []
    for perm in permutations(free_g):
        m = dict(phi)
        m.update(zip(free_p, perm))
        out.append(m)
    return out


def _relabel(g: Gate, phi: dict[int, int]) -> Gate:
    from .circuit import remap
    return remap(g, phi)


def _find_match(items: list, start: int, t: Template, window: int):
    """Match t.lhs at ``start`` allowing commuting gates in between.

    Returns (matched positions, line map) or None.  Gates skipped over must
    commute with every later matched gate so the match can be made contiguous.
    """
    pat = t.lhs.gates
    first = items[start][0]
    for phi in _match_gate(pat[0], first, {}, set()):
        res = _extend(items, [start], 1, pat, phi, window)
        if res is not None:
            return res
    return None


def _extend(items, matched, k, pat, phi, window):
    if k == len(pat):
        return matched, phi
    pos = matched[-1] + 1
    limit = min(len(items), matched[-1] + 1 + window)
    skipped: list[int] = []
    while pos < limit:
        g = items[pos][0]
        used = set(phi.values())
        for ext in _match_gate(pat[k], g, phi, used):
            # every gate skipped so far must commute past this matched gate
            if all(can_swap_simple(items[s][0], g) for s in skipped + _skipped_before(items, matched)):
                res = _extend(items, matched + [pos], k + 1, pat, ext, window)
                if res is not None:
                    return res
        skipped.append(pos)
        pos += 1
    return None


def _skipped_before(items, matched):
    out = []
    for a, b in zip(matched, matched[1:]):
        out.extend(range(a + 1, b))
    return out


def _apply_templates_items(items: list, lib: Sequence[Template], window: int = 6) -> tuple[list, int]:
    hits = 0
    for t in lib:
        if not len(t.lhs):
            continue
        i = 0
        while i < len(items):
            m = _find_match(items, i, t, window)
            if m is None:
                i += 1
                continue
            positions, phi = m
            # lines used by the rhs but absent from the lhs cannot be placed
            rhs_lines = set().union(*(g.lines for g in t.rhs.gates)) if len(t.rhs) else set()
            if not rhs_lines <= set(phi):
                i += 1
                continue
            pset = set(positions)
            between = [items[p] for p in range(positions[0], positions[-1] + 1) if p not in pset]
            repl = [(_relabel(g, phi), -1) for g in t.rhs.gates]
            items[positions[0]:positions[-1] + 1] = repl + between
            hits += 1
    return items, hits


def apply_templates(c: Circuit, lib: Sequence[Template] | None = None, window: int = 6) -> Circuit:
    """Greedy leftmost application of each template in ``lib``."""
    lib = default_templates() if lib is None else lib
    items = [(g, i) for i, g in enumerate(c.gates)]
    items, _ = _apply_templates_items(items, lib, window)
    return c.with_gates(g for g, _ in items)


# passes ----------------------------------------------------------------------

def _cancel_items(items: list) -> tuple[list, int]:
    stack: list = []
    count = 0
    for it in items:
        if stack and is_inverse_pair(stack[-1][0], it[0]):
            stack.pop()
            count += 1
        else:
            stack.append(it)
    return stack, count


def cancel_adjacent_inverses(c: Circuit) -> Circuit:
    """Remove adjacent g, g^-1 pairs until none remain (cascades included)."""
    items, _ = _cancel_items([(g, i) for i, g in enumerate(c.gates)])
    return c.with_gates(g for g, _ in items)


def _fuse(g: Gate, h: Gate) -> Gate | None:
    if g.kind is GateKind.CPHASE and h.kind is GateKind.CPHASE and g.lines == h.lines:
        return cphase(g.phase + h.phase, g.controls, g.target)
    return None


def _commute_items(items: list, complicated: bool) -> tuple[list, int, int]:
    """Move each gate forward through commuting gates to an inverse or fusion partner."""
    cancels = fusions = 0
    i = 0
    while i < len(items):
        g = items[i][0]
        j = i + 1
        pending: tuple[int, Gate] | None = None
        done = False
        while j < len(items):
            h = items[j][0]
            if is_inverse_pair(g, h):
                new = items[:i] + items[i + 1:j] + items[j + 1:]
                if pending is not None:
                    k, g3 = pending
                    # h_k sits at index k-1 once g is removed; g3 goes right after it
                    new.insert(k, (g3, -1))
                items = new
                cancels += 1
                done = True
                break
            if pending is None:
                fused = _fuse(g, h)
                if fused is not None:
                    rest = items[:i] + items[i + 1:j] + items[j + 1:]
                    if not is_identity_gate(fused):
                        rest.insert(j - 1, (fused, -1))
                    items = rest
                    fusions += 1
                    done = True
                    break
            if can_swap_simple(g, h):
                j += 1
                continue
            if complicated and pending is None:
                g3 = _complicated_right(g, h)
                if g3 is not None:
                    pending = (j, g3)
                    j += 1
                    continue
            break
        if not done:
            i += 1
    return items, cancels, fusions


def _drop_identities(items: list) -> tuple[list, int]:
    kept = [it for it in items if not is_identity_gate(it[0])]
    return kept, len(items) - len(kept)


@dataclass
class SimplifyReport:
    gates_before: int
    gates_after: int = 0
    rounds: int = 0
    rotations_used: int = 0
    cancellations: int = 0
    template_hits: int = 0
    rotated: tuple[Gate, ...] = field(default=(), repr=False)
    kept: tuple[int, ...] = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "gates_before": self.gates_before,
            "gates_after": self.gates_after,
            "rounds": self.rounds,
            "rotations_used": self.rotations_used,
            "cancellations": self.cancellations,
            "template_hits": self.template_hits,
        }


def _rotate1(items: list, rotated: list) -> None:
    it = items.pop(0)
    items.append(it)
    rotated.append(it[0])


def _fast_cycle(items: list, rotated: list) -> tuple[int, int]:
    """Rotate through a full cycle, cancelling inverse pairs that meet at the seam.

    Returns (rotations, cancellations).  With no cancellation the list ends
    in its starting orientation.
    """
    rot = cancels = idle = 0
    while len(items) >= 2 and idle < len(items):
        _rotate1(items, rotated)
        rot += 1
        idle += 1
        while len(items) >= 2 and is_inverse_pair(items[-2][0], items[-1][0]):
            items.pop()
            items.pop()
            cancels += 1
            idle = 0
            if len(items) >= 2 and is_inverse_pair(items[-1][0], items[0][0]):
                _rotate1(items, rotated)
                rot += 1
    return rot, cancels


def _full_passes(items: list, lib, complicated: bool, rep: SimplifyReport,
                 rotated: list | None = None) -> list:
    """One round of the linear passes, cheapest first; stops at the first that helps.

    With ``rotated`` given (miter mode) the seam cycle runs right after the
    adjacent cancellation, before any pass that can insert gates.
    """
    before = len(items)
    items, _ = _drop_identities(items)
    items, k = _cancel_items(items)
    rep.cancellations += k
    if len(items) < before:
        return items
    if rotated is not None:
        r, k = _fast_cycle(items, rotated)
        rep.rotations_used += r
        rep.cancellations += k
        if k:
            return items
    items, k, f = _commute_items(items, complicated)
    rep.cancellations += k
    rep.template_hits += f
    if len(items) < before:
        return items
    if lib:
        items, k = _apply_templates_items(items, lib)
        rep.template_hits += k
    return items


def simplify(c: Circuit, budget: int = DEFAULT_BUDGET, *, miter: bool = False,
             templates: Sequence[Template] | None = None, complicated: bool = True,
             slow_rotations: int = 256, deadline=None) -> tuple[Circuit, SimplifyReport]:
    """Iterate local rewrites to a fixed point or until ``budget`` rounds.

    With ``miter=True`` the circuit is treated as circular (only valid when
    the question is whether it equals the identity).  Once the linear passes
    stall, a cheap full rotation cycle cancels pairs meeting at the seam; if
    that also stalls, up to ``slow_rotations`` single rotations (never more
    than the gate count) are each followed by the full passes, and the
    circuit is turned back to its starting orientation when none helps.

    ``report.rotated`` lists the gates moved to the end, in order, and
    ``report.kept`` gives for every output gate its index in ``c`` (-1 for
    gates created by rewriting).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    lib = default_templates() if templates is None else list(templates)
    items = [(g, i) for i, g in enumerate(c.gates)]
    rep = SimplifyReport(gates_before=len(items))
    rotated: list[Gate] = []

    def tick() -> bool:
        if deadline is not None:
            deadline.check()
        if rep.rounds >= budget:
            return False
        rep.rounds += 1
        return True

    while tick():
        before = len(items)
        items = _full_passes(items, lib, complicated, rep, rotated if miter else None)
        if len(items) < before:
            continue
        if not miter or len(items) < 2:
            break
        progressed = False
        turns = 0
        while turns < min(slow_rotations, len(items) - 1) and tick():
            _rotate1(items, rotated)
            rep.rotations_used += 1
            turns += 1
            n = len(items)
            items = _full_passes(items, lib, complicated, rep)
            if len(items) < n:
                progressed = True
                break
        if progressed:
            continue
        # restore the orientation the slow rotations started from
        for _ in range((len(items) - turns) % len(items) if items else 0):
            _rotate1(items, rotated)
            rep.rotations_used += 1
        break
    out = c.with_gates(g for g, _ in items)
    rep.gates_after = len(out)
    rep.rotated = tuple(rotated)
    rep.kept = tuple(o for _, o in items)
    return out, rep


def simplify_miter(m: Circuit, budget: int = DEFAULT_BUDGET, **kw) -> tuple[Circuit, SimplifyReport]:
    return simplify(m, budget, miter=True, **kw)


def best_variant_simplification(c1: Circuit, c2: Circuit, budget: int = DEFAULT_BUDGET, **kw):
    """Try all four miter variants and keep the shortest simplified miter."""
    from .miter import MiterVariant, build_miter
    best = None
    for v in MiterVariant:
        s, rep = simplify(build_miter(c1, c2, v), budget, miter=True, **kw)
        if best is None or len(s) < len(best[1]):
            best = (v, s, rep)
    return best
