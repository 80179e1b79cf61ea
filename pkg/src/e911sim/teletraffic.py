"""Analytic teletraffic helpers: Erlang-B, SR offered load, grade of service."""
from __future__ import annotations

import math
from dataclasses import dataclass

NENA_GOS = 0.01


@dataclass(frozen=True)
class OfferedLoad:
    erlangs: float
    trunk_count: int

    @property
    def per_trunk(self) -> float:
        return self.erlangs / self.trunk_count if self.trunk_count else math.inf

    @property
    def overloaded(self) -> bool:
        """More than one Erlang offered per trunk on average."""
        return self.per_trunk > 1.0


def erlang_b(c: int, a: float) -> float:
    """Blocking probability of an M/M/c/c loss system offered `a` Erlangs."""
    if isinstance(c, bool) or int(c) != c or c < 1:
        raise ValueError(f"trunk count must be an integer >= 1, got {c!r}")
    if not a >= 0 or math.isinf(a):
        raise ValueError(f"offered load must be finite and >= 0, got {a!r}")
    b = 1.0
    for k in range(1, int(c) + 1):
        b = a * b / (k + a * b)
    return b


def offered_load(occupancy_s: float, window_s: float, trunk_count: int) -> OfferedLoad:
    if window_s <= 0:
        raise ValueError("window must be > 0")
    return OfferedLoad(occupancy_s / window_s, trunk_count)


def sr_offered_load(ledger, sr: str, t0: float, t1: float) -> OfferedLoad:
    """Offered load on an SR's access side over [t0, t1).

    `ledger` is an engine ResourceLedger; trunk count is the SR's total
    delivery multiplicity (access and delivery sides assumed equal).
    """
    if sr not in ledger.sr_trunks:
        raise KeyError(f"unknown SR {sr!r}")
    return offered_load(ledger.access_occupancy(sr, t0, t1), t1 - t0, ledger.sr_trunks[sr])


@dataclass(frozen=True)
class GradeOfService:
    offered: int
    blocked: int

    @property
    def gos(self) -> float:
        return self.blocked / self.offered if self.offered else 0.0

    @property
    def exceeds_p01(self) -> bool:
        return self.gos > NENA_GOS


def gos(offered: int, blocked: int) -> GradeOfService:
    if offered < 0 or blocked < 0:
        raise ValueError("counts must be >= 0")
    return GradeOfService(offered, blocked)
