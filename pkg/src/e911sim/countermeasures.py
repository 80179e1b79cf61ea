"""Simulated mitigations: identifier blacklist, on-device call firewall, and
trust-ranked PSAP queueing.

The blacklist sits at network entry: rejected attempts consume no SR or PSAP
resources. The firewall is modeled as perfect suppression at the handset
(a trusted layer the bot cannot bypass). Priority queueing reorders a PSAP's
progress-tone queue by identifier trust.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BlacklistConfig:
    enabled: bool = False
    threshold: int = 5
    window_s: float = 3600.0

    def __post_init__(self):
        if self.threshold < 1 or self.window_s <= 0:
            raise ConfigError("blacklist threshold must be >= 1 and window > 0")


@dataclass(frozen=True)
class FirewallConfig:
    enabled: bool = False
    max_calls: int = 4
    window_s: float = 600.0
    # human redial streaks can exceed M per W; off keeps legitimate callers unaffected
    legit_subject: bool = False

    def __post_init__(self):
        if self.max_calls < 1 or self.window_s <= 0:
            raise ConfigError("firewall max_calls must be >= 1 and window > 0")


@dataclass(frozen=True)
class PriorityConfig:
    enabled: bool = False


@dataclass(frozen=True)
class CountermeasureConfig:
    blacklist: BlacklistConfig = field(default_factory=BlacklistConfig)
    firewall: FirewallConfig = field(default_factory=FirewallConfig)
    priority_queue: PriorityConfig = field(default_factory=PriorityConfig)

    @classmethod
    def from_dict(cls, d: dict | None) -> "CountermeasureConfig":
        d = dict(d or {})
        parts = {"blacklist": BlacklistConfig, "firewall": FirewallConfig, "priority_queue": PriorityConfig}
        unknown = set(d) - set(parts)
        if unknown:
            raise ConfigError(f"unknown countermeasure keys: {sorted(unknown)}")
        kw = {}
        for name, klass in parts.items():
            sub = d.get(name) or {}
            try:
                kw[name] = klass(**sub)
            except TypeError as exc:
                raise ConfigError(f"countermeasures.{name}: {exc}") from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def any_enabled(self) -> bool:
        return self.blacklist.enabled or self.firewall.enabled or self.priority_queue.enabled


class BlacklistDb:
    """Shared database of abusive identifiers, keyed by IMSI (else IMEI)."""

    def __init__(self, threshold: int = 5, window_s: float = 3600.0):
        self.threshold = threshold
        self.window_s = window_s
        self.entries: dict[str, list] = {}  # key -> [offenses, first_seen, blocked]

    def check(self, key: str, t: float) -> bool:
        """True admits the attempt, False rejects it."""
        e = self.entries.get(key)
        if e is not None and e[2]:
            return False
        if e is None or t - e[1] > self.window_s:
            e = self.entries[key] = [0, t, False]
        e[0] += 1
        if e[0] >= self.threshold:
            e[2] = True
        return True

    def is_blocked(self, key: str) -> bool:
        e = self.entries.get(key)
        return bool(e and e[2])


def blacklist_check(db: BlacklistDb, identifier, t: float) -> bool:
    return db.check(identifier.key, t)


class CallFirewall:
    """Caps each device at `max_calls` emergency calls per sliding window."""

    def __init__(self, max_calls: int = 4, window_s: float = 600.0):
        self.max_calls = max_calls
        self.window_s = window_s
        self.history: dict[object, deque] = {}

    def allow(self, device, t: float) -> bool:
        h = self.history.get(device)
        if h is None:
            h = self.history[device] = deque()
        w = self.window_s
        # same expression as next_allowed, so a reschedule always gets through
        while h and h[0] + w <= t:
            h.popleft()
        if len(h) >= self.max_calls:
            return False
        h.append(t)
        return True

    def next_allowed(self, device, t: float) -> float:
        """Earliest time a currently-suppressed device may call again."""
        h = self.history.get(device)
        if not h or len(h) < self.max_calls:
            return t
        return h[0] + self.window_s


def firewall_filter(firewall: CallFirewall | None, device, t: float) -> bool:
    """True lets the call out of the handset; a disabled firewall allows all."""
    return True if firewall is None else firewall.allow(device, t)


# Queue entries are (rank, seq, call) tuples; seq is unique so calls are
# never compared.


def priority_insert(queue: list, entry: tuple, capacity: int, enabled: bool = True):
    """Insert into a bounded PSAP queue.

    Returns (accepted, displaced). With priority disabled the queue is plain
    FIFO and a full queue rejects the arrival. With priority enabled a full
    queue displaces its lowest-ranked (latest) occupant when the arrival
    outranks it.
    """
    if not enabled:
        entry = (0,) + tuple(entry[1:])
    if len(queue) < capacity:
        bisect.insort(queue, entry)
        return True, None
    if enabled and queue and entry[0] < queue[-1][0]:
        displaced = queue.pop()
        bisect.insort(queue, entry)
        return True, displaced
    return False, None


def displacement_candidate(queue: list, rank: int, eligible: Callable[[object], bool]) -> int | None:
    """Index of the lowest-ranked queued entry outranked by `rank` whose call
    passes `eligible`, scanning from the back (lowest rank, latest arrival)."""
    for i in range(len(queue) - 1, -1, -1):
        r, _, call = queue[i]
        if r <= rank:
            return None
        if eligible(call):
            return i
    return None
