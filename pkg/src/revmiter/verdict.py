"""Uniform result type returned by every checking engine."""
from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Sequence


class Status(str, enum.Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    status: Status
    method: str = ""
    counterexample: tuple[int, ...] | None = None
    witness: int | None = None
    reason: str = ""
    stats: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def equivalent(cls, method: str = "", **stats) -> Verdict:
        return cls(Status.EQUIVALENT, method, stats=stats)

    @classmethod
    def not_equivalent(cls, method: str = "", counterexample: Sequence[int] | None = None,
                       witness: int | None = None, reason: str = "", **stats) -> Verdict:
        cex = tuple(int(b) for b in counterexample) if counterexample is not None else None
        return cls(Status.NOT_EQUIVALENT, method, cex, witness, reason, stats)

    @classmethod
    def inconclusive(cls, reason: str, method: str = "", **stats) -> Verdict:
        return cls(Status.INCONCLUSIVE, method, reason=reason, stats=stats)

    @property
    def is_equivalent(self) -> bool:
        return self.status is Status.EQUIVALENT

    @property
    def is_not_equivalent(self) -> bool:
        return self.status is Status.NOT_EQUIVALENT

    @property
    def is_inconclusive(self) -> bool:
        return self.status is Status.INCONCLUSIVE

    def counterexample_bits(self) -> str | None:
        if self.counterexample is None:
            return None
        return "".join(str(b) for b in self.counterexample)


class ResourceExhausted(Exception):
    """Raised inside an engine when its timeout, cancel flag or size cap trips."""


class Deadline:
    """Cooperative timeout / cancellation shared by engines."""

    def __init__(self, timeout: float | None = None, cancel: threading.Event | None = None):
        self.expires = None if timeout is None else time.monotonic() + timeout
        self.cancel = cancel

    def expired(self) -> bool:
        if self.cancel is not None and self.cancel.is_set():
            return True
        return self.expires is not None and time.monotonic() > self.expires

    def check(self) -> None:
        if self.expired():
            raise ResourceExhausted("timeout" if not (self.cancel and self.cancel.is_set()) else "cancelled")

    def remaining(self) -> float | None:
        if self.expires is None:
            return None
        return max(0.0, self.expires - time.monotonic())


def bits_of(value: int, width: int) -> tuple[int, ...]:
    """Line bits of a basis index (line 0 is the most significant bit)."""
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def index_of(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | (int(b) & 1)
    return v
