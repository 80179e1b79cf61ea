"""Legitimate caller traffic and bot identity models.

Bots are modeled only by the identifiers they expose per call:

  NA          registered device, fixed IMSI + IMEI
  A           no-SIM state, fixed IMEI only
  AStarMask   no-SIM state, fresh random (Luhn-valid) IMEI on every call
  AStarSpoof  random unknown IMSI, re-attached every N calls at a time cost
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .topology import Topology, TopologyError, apportion, vol_sr

BUSY_HOUR_FRACTION = 0.15
P_WIRELESS = 0.7
P_RECALL = 0.85
REDIAL_MEAN_S = 20.0
SETUP_OVERHEAD_S = 4.0
BOT_SERVICE_MEAN_S = 6.0
SPOOF_PERIOD = 3
ATTACH_OVERHEAD_S = 2.0  # not given in the literature; "slower" than masking

WIRELINE = 0
WIRELESS = 1
ORIGIN_NAMES = ("wireline", "wireless")


class TrafficError(ValueError):
    pass


class Trust(enum.IntEnum):
    """Identifier reliability. Lower value = more trusted (priority rank)."""

    REGISTERED_IMSI = 0
    IMEI_ONLY = 1
    UNKNOWN = 2


class BotType(str, enum.Enum):
    NA = "NA"
    A = "A"
    ASTAR_MASK = "AStarMask"
    ASTAR_SPOOF = "AStarSpoof"


@dataclass(frozen=True)
class CallerProfile:
    origin_class: str = "wireless"
    p_recall: float = P_RECALL
    redial_delay_mean: float = REDIAL_MEAN_S
    setup_overhead: float = SETUP_OVERHEAD_S

    def __post_init__(self):
        if not 0.0 <= self.p_recall <= 1.0:
            raise TrafficError("p_recall must lie in [0, 1]")
        if self.redial_delay_mean < 0 or self.setup_overhead < 0:
            raise TrafficError("delays must be >= 0")


class Identifier(NamedTuple):
    imsi: str | None
    imei: str | None
    trust: Trust

    @property
    def key(self) -> str:
        """Blacklist key: IMSI when exposed, else IMEI."""
        return self.imsi if self.imsi is not None else self.imei


# ---------------------------------------------------------------------------
# identifiers


_PLAIN = {str(d): d for d in range(10)}
_DOUBLED = {str(d): (2 * d if d < 5 else 2 * d - 9) for d in range(10)}


def luhn_check_digit(body: str) -> int:
    """Check digit that makes body + digit pass the Luhn (mod 10) test."""
    rev = body[::-1]
    total = sum(map(_DOUBLED.__getitem__, rev[0::2])) + sum(map(_PLAIN.__getitem__, rev[1::2]))
    return -total % 10


def luhn_valid(number: str) -> bool:
    return len(number) > 1 and number.isdigit() and luhn_check_digit(number[:-1]) == int(number[-1])


def random_valid_imei(rng: random.Random) -> str:
    body = f"{rng.randrange(10**14):014d}"
    return body + str(luhn_check_digit(body))


def random_imsi(rng: random.Random) -> str:
    return f"{rng.randrange(10**15):015d}"


# ---------------------------------------------------------------------------
# bots


@dataclass(eq=False, slots=True)
class BotAgent:
    bot_type: BotType
    home_sr: str
    fixed_imsi: str
    fixed_imei: str
    spoof_period: int = SPOOF_PERIOD
    attach_overhead: float = ATTACH_OVERHEAD_S
    call_service_mean: float = BOT_SERVICE_MEAN_S
    state: str = "idle"
    calls_made: int = 0
    current: Identifier | None = None
    # engine bookkeeping
    bot_id: int = -1
    psap: int = -1
    sr_index: int = -1
    att: object = None

    def __post_init__(self):
        self.bot_type = BotType(self.bot_type)
        if self.spoof_period < 1:
            raise TrafficError("spoof_period must be >= 1")

    def pending_overhead(self) -> float:
        """Extra pre-call delay the *next* call will cost (detach + attach)."""
        if self.bot_type == BotType.ASTAR_SPOOF and self.calls_made % self.spoof_period == 0:
            return self.attach_overhead
        return 0.0


def make_bot(bot_type: BotType | str, home_sr: str, rng: random.Random, **kw) -> BotAgent:
    return BotAgent(BotType(bot_type), home_sr, random_imsi(rng), random_valid_imei(rng), **kw)


def bot_next_identity(agent: BotAgent, rng: random.Random) -> tuple[Identifier, float]:
    """Advance the bot by one call; returns (exposed identifier, attach overhead)."""
    overhead = 0.0
    t = agent.bot_type
    if t == BotType.NA:
        ident = agent.current or Identifier(agent.fixed_imsi, agent.fixed_imei, Trust.REGISTERED_IMSI)
        agent.state = "attached"
    elif t == BotType.A:
        ident = agent.current or Identifier(None, agent.fixed_imei, Trust.IMEI_ONLY)
        agent.state = "detached"
    elif t == BotType.ASTAR_MASK:
        ident = Identifier(None, random_valid_imei(rng), Trust.IMEI_ONLY)
        agent.state = "detached"
    else:
        if agent.calls_made % agent.spoof_period == 0 or agent.current is None:
            ident = Identifier(random_imsi(rng), random_valid_imei(rng), Trust.UNKNOWN)
            overhead = agent.attach_overhead
        else:
            ident = agent.current
        agent.state = "attached"
    agent.current = ident
    agent.calls_made += 1
    return ident, overhead


# ---------------------------------------------------------------------------
# arrivals


def lambda_sr(daily_volume: float, busy_hour_fraction: float = BUSY_HOUR_FRACTION) -> float:
    """Busy-hour legitimate arrival rate in calls/second."""
    if daily_volume < 0 or busy_hour_fraction < 0:
        raise TrafficError("daily_volume and busy_hour_fraction must be >= 0")
    return daily_volume * busy_hour_fraction / 3600.0


def next_legitimate_arrival(rng: random.Random, rate: float, p_wireless: float = P_WIRELESS) -> tuple[float, int | None]:
    """Exponential inter-arrival time and origin class (WIRELINE / WIRELESS).

    A zero rate yields (inf, None): no arrival is ever scheduled.
    """
    if rate <= 0:
        return math.inf, None
    dt = rng.expovariate(rate)
    return dt, WIRELESS if rng.random() < p_wireless else WIRELINE


def allocate_by_volume(volumes: dict[str, float], n_bot: int, seed: int = 0) -> dict[str, int]:
    if n_bot < 0:
        raise TrafficError("n_bot must be >= 0")
    keys = list(volumes)
    if not keys or sum(volumes.values()) <= 0:
        raise TrafficError("all SR volumes are zero; bot allocation is undefined")
    counts = apportion(n_bot, [volumes[k] for k in keys], np.random.default_rng(seed))
    return dict(zip(keys, counts))


def allocate_bots(topology: Topology, n_bot: int, seed: int = 0) -> dict[str, int]:
    """Bots per SR, proportional to each SR's legitimate daily volume."""
    return allocate_by_volume({s: vol_sr(topology, s) for s in topology.srs}, n_bot, seed)


@dataclass
class ArrivalPlan:
    rates: dict[str, float]
    p_wireless: float = P_WIRELESS
    bots: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if any(r < 0 for r in self.rates.values()):
            raise TrafficError("arrival rates must be >= 0")

    @property
    def n_bot(self) -> int:
        return sum(self.bots.values())


def build_plan(
    topology: Topology,
    n_bot: int = 0,
    seed: int = 0,
    busy_hour_fraction: float = BUSY_HOUR_FRACTION,
    p_wireless: float = P_WIRELESS,
) -> ArrivalPlan:
    rates = {s: lambda_sr(vol_sr(topology, s), busy_hour_fraction) for s in topology.srs}
    bots = allocate_bots(topology, n_bot, seed) if n_bot else {s: 0 for s in topology.srs}
    return ArrivalPlan(rates, p_wireless, bots)


__all__ = [
    "ArrivalPlan", "BotAgent", "BotType", "CallerProfile", "Identifier", "TopologyError",
    "Trust", "allocate_bots", "allocate_by_volume", "bot_next_identity", "build_plan",
    "lambda_sr", "luhn_check_digit", "luhn_valid", "make_bot", "next_legitimate_arrival",
    "random_imsi", "random_valid_imei",
]
