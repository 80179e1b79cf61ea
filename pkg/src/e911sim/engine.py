"""Discrete-event simulation of 911 call handling under a telephony DDoS.

Each attempt (first call, redial, or bot call) enters at its TS, holds the
TS-SR access path for the signaling setup time, is routed by its SR to the
caller's jurisdiction PSAP and then either seizes a delivery trunk or is
blocked. A caller holding a trunk is answered by a free call taker or waits
on the trunk in the PSAP queue. Blocked legitimate callers redial with
probability p_recall; bots redial forever.

Events are processed in (time, sequence) order, so a run is a pure function
of (topology, scenario, traffic config, seed).
"""
from __future__ import annotations

import bisect
import csv
import heapq
import math
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import countermeasures as cm
from .metrics import MetricsReport, RunRecords, aggregate
from .topology import NodeType, Signaling, Topology, TrunkClass, TrunkRole, validate, vol_sr
from .traffic import (
    WIRELESS,
    WIRELINE,
    ArrivalPlan,
    BotType,
    Trust,
    bot_next_identity,
    build_plan,
    make_bot,
    next_legitimate_arrival,
)
from . import traffic as tr

SETUP_TIME_S = {Signaling.SS7: 0.1, Signaling.MF: 3.9}

# event kinds
ARRIVAL, REDIAL, BOT_CALL, SETUP, SERVICE_DONE, DDOS_START, SIM_END = range(7)
EVENT_NAMES = ("Arrival", "RedialDue", "BotNextCall", "SetupComplete", "ServiceDone", "DdosStart", "SimEnd")

OUTCOMES = (
    "answered", "blocked_trunk", "blocked_queue", "blocked_countermeasure",
    "abandoned_in_queue", "gave_up",
)
TRACE_COLUMNS = ("t", "seq", "kind", "caller_id", "is_bot", "attempt", "sr", "psap", "outcome")


class EngineError(RuntimeError):
    pass


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    duration_s: float = 3600.0
    ddos_start_s: float = 300.0
    n_bot: int = 0
    bot_type: BotType = BotType.ASTAR_MASK
    signaling: Signaling | None = None  # None: use the topology's
    countermeasures: cm.CountermeasureConfig = field(default_factory=cm.CountermeasureConfig)
    seed: int = 0
    warmup_s: float = 300.0
    bucket_s: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "bot_type", BotType(self.bot_type))
        if self.signaling is not None:
            object.__setattr__(self, "signaling", Signaling(self.signaling))
        if self.ddos_start_s < 0 or (self.n_bot and self.ddos_start_s > self.duration_s):
            raise ValueError("need 0 <= ddos_start_s <= duration_s")
        if self.n_bot < 0:
            raise ValueError("n_bot must be >= 0")
        if not 0 <= self.warmup_s < self.duration_s:
            raise ValueError("need 0 <= warmup_s < duration_s")
        if self.bucket_s <= 0:
            raise ValueError("bucket_s must be > 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bot_type"] = self.bot_type.value
        d["signaling"] = self.signaling.value if self.signaling else None
        d["countermeasures"] = self.countermeasures.to_dict()
        return d


@dataclass(frozen=True)
class TrafficConfig:
    busy_hour_fraction: float = tr.BUSY_HOUR_FRACTION
    p_wireless: float = tr.P_WIRELESS
    p_recall: float = tr.P_RECALL
    redial_mean_s: float = tr.REDIAL_MEAN_S
    setup_overhead_s: float = tr.SETUP_OVERHEAD_S
    bot_service_mean_s: float = tr.BOT_SERVICE_MEAN_S
    spoof_period: int = tr.SPOOF_PERIOD
    attach_overhead_s: float = tr.ATTACH_OVERHEAD_S
    service_dist: str = "exponential"  # or "deterministic"

    def __post_init__(self):
        if self.service_dist not in ("exponential", "deterministic"):
            raise ValueError(f"unknown service_dist {self.service_dist!r}")
        if not 0 <= self.p_recall <= 1 or not 0 <= self.p_wireless <= 1:
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass
class RunResult:
    report: MetricsReport
    records: RunRecords
    trace: list | None = None
    ledger: "ResourceLedger | None" = None


class Caller:
    __slots__ = ("id", "origin", "sr", "psap", "t_first", "attempts", "t_answered",
                 "t_ended", "outcome", "key")

    def __init__(self, cid, origin, sr, psap, t):
        self.id = cid
        self.origin = origin
        self.sr = sr
        self.psap = psap
        self.t_first = t
        self.attempts = 0
        self.t_answered = None
        self.t_ended = None
        self.outcome = None
        self.key = f"9{cid:014d}"  # synthetic registered IMSI


class Attempt:
    __slots__ = ("who", "is_bot", "origin", "sr", "psap", "served", "group", "t_start",
                 "t_seize", "rank", "n", "in_window")

    def __init__(self, who, is_bot, origin, sr, psap, t, rank, n, in_window):
        self.who = who
        self.is_bot = is_bot
        self.origin = origin
        self.sr = sr
        self.psap = psap
        self.served = -1
        self.group = -1
        self.t_start = t
        self.t_seize = 0.0
        self.rank = rank
        self.n = n
        self.in_window = in_window


class ResourceLedger:
    """Trunk, call-taker and queue state plus access-side occupancy."""

    def __init__(self, topo: Topology, duration: float, bucket_s: float):
        self.psap_ids = topo.psaps
        self.sr_ids = topo.srs
        pidx = {p: i for i, p in enumerate(self.psap_ids)}
        self.tg_ids = []
        self.tg_mult = []
        self.tg_class = []
        # per PSAP, per origin: ordered candidate trunk groups
        self.candidates = [[[], []] for _ in self.psap_ids]
        self.sr_of_psap = [None] * len(self.psap_ids)
        self.psaps_by_sr: dict[str, set[str]] = {}
        for i, g in enumerate(topo.trunk_groups):
            if g.role != TrunkRole.DELIVERY:
                continue
            psap = g.endpoint_a if g.endpoint_a in pidx else g.endpoint_b
            p = pidx[psap]
            k = len(self.tg_ids)
            self.tg_ids.append(i)
            self.tg_mult.append(g.multiplicity)
            self.tg_class.append(g.trunk_class)
            if self.sr_of_psap[p] is None:
                self.sr_of_psap[p] = g.other(psap)
            self.psaps_by_sr.setdefault(g.other(psap), set()).add(psap)
        for k, cls in enumerate(self.tg_class):
            g = topo.trunk_groups[self.tg_ids[k]]
            p = pidx[g.endpoint_a if g.endpoint_a in pidx else g.endpoint_b]
            if cls == TrunkClass.WIRELINE_ONLY:
                self.candidates[p][WIRELINE].append(k)
            elif cls == TrunkClass.WIRELESS_ONLY:
                self.candidates[p][WIRELESS].append(k)
        for k, cls in enumerate(self.tg_class):
            g = topo.trunk_groups[self.tg_ids[k]]
            p = pidx[g.endpoint_a if g.endpoint_a in pidx else g.endpoint_b]
            if cls == TrunkClass.SHARED:
                self.candidates[p][WIRELINE].append(k)
                self.candidates[p][WIRELESS].append(k)
        self.candidate_sets = [[frozenset(c[0]), frozenset(c[1])] for c in self.candidates]
        self.tg_busy = [0] * len(self.tg_ids)
        self.tg_busy_s = [0.0] * len(self.tg_ids)
        self.tg_last = [0.0] * len(self.tg_ids)

        cfgs = [topo.psap_configs[p] for p in self.psap_ids]
        self.takers = [c.call_takers for c in cfgs]
        self.takers_busy = [0] * len(cfgs)
        self.queue_cap = [c.queue_capacity for c in cfgs]
        self.queues = [[] for _ in cfgs]
        self.svc_mean = [(c.service_time_mean_wireline, c.service_time_mean_wireless) for c in cfgs]
        self.partner = [pidx[c.overflow_partner] if c.overflow_partner in pidx else -1 for c in cfgs]

        self.sr_trunks = {s: topo.sr_trunk_count(s) for s in self.sr_ids}
        self.duration = duration
        self.bucket_s = bucket_s
        self.n_buckets = int(math.ceil(duration / bucket_s))
        self.occ = [[0.0] * self.n_buckets for _ in self.sr_ids]

    def seize(self, g: int, t: float) -> None:
        self.tg_busy_s[g] += self.tg_busy[g] * (t - self.tg_last[g])
        self.tg_last[g] = t
        self.tg_busy[g] += 1

    def release(self, g: int, t: float) -> None:
        self.tg_busy_s[g] += self.tg_busy[g] * (t - self.tg_last[g])
        self.tg_last[g] = t
        self.tg_busy[g] -= 1

    def charge(self, sr: int, t0: float, t1: float) -> None:
        """Add access-path occupancy over [t0, t1) to an SR's time buckets."""
        if t1 > self.duration:
            t1 = self.duration
        if t1 <= t0:
            return
        bw = self.bucket_s
        b0 = int(t0 / bw)
        b1 = int(t1 / bw)
        row = self.occ[sr]
        if b0 == b1 or (b1 == b0 + 1 and t1 == b1 * bw):
            row[b0] += t1 - t0
            return
        row[b0] += (b0 + 1) * bw - t0
        for b in range(b0 + 1, min(b1, self.n_buckets)):
            row[b] += bw
        if b1 < self.n_buckets:
            row[b1] += t1 - b1 * bw

    def access_occupancy(self, sr: str, t0: float, t1: float) -> float:
        """Occupancy-seconds in [t0, t1); partial buckets prorated."""
        row = self.occ[self.sr_ids.index(sr)]
        bw = self.bucket_s
        total = 0.0
        for b, v in enumerate(row):
            lo, hi = b * bw, (b + 1) * bw
            overlap = min(hi, t1) - max(lo, t0)
            if overlap > 0:
                total += v * overlap / bw
        return total

    def check(self) -> None:
        for g, busy in enumerate(self.tg_busy):
            if not 0 <= busy <= self.tg_mult[g]:
                raise EngineError(f"trunk group {self.tg_ids[g]} busy={busy} outside [0, {self.tg_mult[g]}]")
        for p, busy in enumerate(self.takers_busy):
            if not 0 <= busy <= self.takers[p]:
                raise EngineError(f"PSAP {self.psap_ids[p]} takers_busy={busy} outside [0, {self.takers[p]}]")
            q = self.queues[p]
            if len(q) > self.queue_cap[p]:
                raise EngineError(f"PSAP {self.psap_ids[p]} queue over capacity")
            if q and busy < self.takers[p]:
                raise EngineError(f"PSAP {self.psap_ids[p]} has a waiting caller and a free call taker")


def _cid(who, is_bot: bool) -> str:
    return f"B{who.bot_id}" if is_bot else str(who.id)


def _streams(seed: int) -> list[random.Random]:
    children = np.random.SeedSequence(seed).spawn(4)
    return [random.Random(int(c.generate_state(2, np.uint64)[0])) for c in children]


def route(ledger: ResourceLedger, psap: int, origin: int) -> tuple[int, int] | None:
    """Pick (psap, trunk group) for an attempt, or None when busy.

    Dedicated trunks of the caller's class are preferred, shared trunks are
    the fallback; a full primary re-offers once to its overflow partner.
    """
    busy = ledger.tg_busy
    mult = ledger.tg_mult
    for g in ledger.candidates[psap][origin]:
        if busy[g] < mult[g]:
            return psap, g
    q = ledger.partner[psap]
    if q >= 0:
        for g in ledger.candidates[q][origin]:
            if busy[g] < mult[g]:
                return q, g
    return None


def route_call(ledger: ResourceLedger, sr: str, psap: str, origin: int) -> tuple[str, TrunkClass] | None:
    """Id-level routing query: (psap chosen, trunk class used) or None (busy)."""
    if psap not in ledger.psaps_by_sr.get(sr, ()):
        raise EngineError(f"PSAP {psap!r} is not served by SR {sr!r}")
    got = route(ledger, ledger.psap_ids.index(psap), origin)
    if got is None:
        return None
    p, g = got
    return ledger.psap_ids[p], ledger.tg_class[g]


def run(
    topology: Topology,
    scenario: Scenario,
    plan: ArrivalPlan | None = None,
    traffic: TrafficConfig | None = None,
    trace: bool = False,
    script: list | None = None,
    check: bool = False,
) -> RunResult:
    """Simulate one scenario.

    `script`, when given, replaces Poisson arrivals with a list of
    (time, origin, psap_id) legitimate first attempts. `check` asserts the
    resource invariants after every event (slow; for tests).
    """
    traffic = traffic or TrafficConfig()
    problems = validate(topology)
    if problems:
        raise PlanError("topology does not validate: " + "; ".join(map(str, problems[:5])))
    if plan is None:
        plan = build_plan(topology, scenario.n_bot, scenario.seed,
                          traffic.busy_hour_fraction, traffic.p_wireless)
    srs = topology.srs
    bad = [s for s in list(plan.rates) + list(plan.bots) if s not in srs]
    if bad:
        raise PlanError(f"arrival plan references unknown SRs: {sorted(set(bad))}")
    if scenario.n_bot and plan.n_bot != scenario.n_bot:
        raise PlanError(f"plan allocates {plan.n_bot} bots but scenario asks for {scenario.n_bot}")

    signaling = scenario.signaling or topology.signaling
    setup = SETUP_TIME_S[signaling]
    T = float(scenario.duration_s)
    warmup = float(scenario.warmup_s)
    bw = float(scenario.bucket_s)
    led = ResourceLedger(topology, T, bw)
    sr_index = {s: i for i, s in enumerate(srs)}
    psap_index = {p: i for i, p in enumerate(led.psap_ids)}

    # PSAP choice within each SR, weighted by volume
    sr_psaps = []
    sr_cum = []
    for s in srs:
        ps = [psap_index[p] for p in topology.psaps_of_sr[s]]
        w = [topology.psap_configs[led.psap_ids[p]].daily_call_volume for p in ps]
        if ps and sum(w) <= 0:
            w = [1.0] * len(ps)
        cum = list(np.cumsum(w)) if ps else []
        sr_psaps.append(ps)
        sr_cum.append([float(x) for x in cum])

    def pick_psap(rng, si):
        ps = sr_psaps[si]
        if not ps:
            raise PlanError(f"SR {srs[si]} serves no PSAP")
        cum = sr_cum[si]
        return ps[min(bisect.bisect_right(cum, rng.random() * cum[-1]), len(ps) - 1)]

    rng_arr, rng_legit, rng_bot, rng_ident = _streams(scenario.seed)

    cmc = scenario.countermeasures
    blacklist = cm.BlacklistDb(cmc.blacklist.threshold, cmc.blacklist.window_s) if cmc.blacklist.enabled else None
    firewall = cm.CallFirewall(cmc.firewall.max_calls, cmc.firewall.window_s) if cmc.firewall.enabled else None
    prio = cmc.priority_queue.enabled
    legit_fw = firewall if cmc.firewall.legit_subject else None

    p_recall = traffic.p_recall
    redial_rate = 1.0 / traffic.redial_mean_s if traffic.redial_mean_s > 0 else math.inf
    overhead = traffic.setup_overhead_s
    p_wireless = plan.p_wireless
    deterministic = traffic.service_dist == "deterministic"
    bot_mean = traffic.bot_service_mean_s

    heap: list = []
    seq = 0
    push = heapq.heappush
    pop = heapq.heappop

    rows = [] if trace else None
    n_b = led.n_buckets
    s_legit = [0] * n_b
    s_bot = [0] * n_b
    s_blocks = [0] * n_b
    s_answers = [0] * n_b
    s_bot_answers = [0] * n_b
    s_active = [0] * n_b

    offered = [0] * len(led.psap_ids)
    blocked = [0] * len(led.psap_ids)
    sr_blk_n = [0] * len(srs)
    sr_blk_s = [0.0] * len(srs)
    sr_win_occ = [0.0] * len(srs)
    bot_counts = dict(attempts=0, answered=0, blocked=0, rejected_blacklist=0,
                      suppressed_firewall=0, displaced=0)
    legit_counts = dict(rejected_blacklist=0, suppressed_firewall=0, displaced=0)
    callers: list[Caller] = []
    holding: dict[int, Attempt] = {}  # id(attempt) -> attempt, for end-of-run accounting
    trust_of_bot = {
        BotType.NA: Trust.REGISTERED_IMSI, BotType.A: Trust.IMEI_ONLY,
        BotType.ASTAR_MASK: Trust.IMEI_ONLY, BotType.ASTAR_SPOOF: Trust.UNKNOWN,
    }

    occ_rows = led.occ
    inv_bw = 1.0 / bw
    last_b = n_b - 1

    def occupy(si, t0, t1):
        """Charge access-path occupancy [t0, t1) to an SR."""
        if t1 > T:
            t1 = T
        if t1 <= t0:
            return
        b0 = int(t0 * inv_bw)
        if b0 == int(t1 * inv_bw) and b0 <= last_b:
            occ_rows[si][b0] += t1 - t0
        else:
            led.charge(si, t0, t1)
        a = t0 if t0 > warmup else warmup
        if t1 > a:
            sr_win_occ[si] += t1 - a

    def log(t, s, kind, who, is_bot, n, si, p, outcome=""):
        rows.append((t, s, kind, _cid(who, is_bot), int(is_bot), n, srs[si] if si is not None else "",
                     led.psap_ids[p] if p is not None and p >= 0 else "", outcome))

    # -- initial events ------------------------------------------------------
    push(heap, (T, seq, SIM_END, None)); seq += 1
    if script is not None:
        for (t, origin, psap_id) in sorted(script, key=lambda x: x[0]):
            origin = WIRELESS if origin in (WIRELESS, "wireless") else WIRELINE
            p = psap_index[psap_id]
            si = sr_index[led.sr_of_psap[p]]
            push(heap, (float(t), seq, ARRIVAL, (si, origin, p))); seq += 1
    else:
        for s in srs:
            dt, origin = next_legitimate_arrival(rng_arr, plan.rates.get(s, 0.0), p_wireless)
            if dt < T:
                push(heap, (dt, seq, ARRIVAL, (sr_index[s], origin, -1))); seq += 1

    bots = []
    n_bot = plan.n_bot if scenario.n_bot else 0
    bot_rank = int(trust_of_bot[scenario.bot_type])
    spoofing = scenario.bot_type == BotType.ASTAR_SPOOF
    attach = traffic.attach_overhead_s
    period = traffic.spoof_period
    # identities are only drawn when something looks at them; they use their
    # own random stream, so skipping them leaves every other draw unchanged
    observe_identity = blacklist is not None or rows is not None
    # offenses only count while an attack is under way
    bl_from = scenario.ddos_start_s if n_bot else math.inf
    if n_bot:
        push(heap, (scenario.ddos_start_s, seq, DDOS_START, None)); seq += 1
        for s in srs:
            for _ in range(plan.bots.get(s, 0)):
                b = make_bot(scenario.bot_type, s, rng_ident, spoof_period=period,
                             attach_overhead=attach, call_service_mean=bot_mean)
                b.bot_id = len(bots)
                b.sr_index = sr_index[s]
                b.psap = pick_psap(rng_bot, b.sr_index)
                b.att = Attempt(b, True, WIRELESS, b.sr_index, b.psap, 0.0, bot_rank, 0, False)
                bots.append(b)
        for b in bots:
            # random phase within one redial cycle so bots are not synchronized
            t0 = scenario.ddos_start_s + rng_bot.random() * overhead + b.pending_overhead()
            if t0 < T:
                push(heap, (t0, seq, BOT_CALL, b)); seq += 1

    # -- helpers -------------------------------------------------------------
    def legit_blocked(t, c, si, p):
        nonlocal seq
        if rng_legit.random() < p_recall:
            nt = t + rng_legit.expovariate(redial_rate) + overhead if redial_rate != math.inf else t + overhead
            if nt < T:
                push(heap, (nt, seq, REDIAL, c)); seq += 1
            # a redial past the horizon leaves the caller unresolved (censored)
        else:
            c.outcome = "gave_up"
            c.t_ended = t
            if rows is not None:
                log(t, seq, "GaveUp", c, False, c.attempts, si, p, "gave_up")
                seq += 1

    def after_block(t, att, outcome):
        nonlocal seq
        si = att.sr
        if att.in_window and outcome != "blocked_countermeasure":
            sr_blk_n[si] += 1
            sr_blk_s[si] += setup
        b = int(t * inv_bw)
        s_blocks[b if b < n_b else last_b] += 1
        if att.is_bot:
            if att.in_window:
                bot_counts["blocked"] += 1
            bot = att.who
            nt = t + overhead
            if spoofing and bot.calls_made % period == 0:
                nt += attach
            if nt < T:
                push(heap, (nt, seq, BOT_CALL, bot)); seq += 1
        else:
            legit_blocked(t, att.who, si, att.psap)

    def answer(t, att, p):
        nonlocal seq
        led.takers_busy[p] += 1
        b = int(t * inv_bw)
        if b > last_b:
            b = last_b
        s_answers[b] += 1
        if att.is_bot:
            svc = bot_mean if deterministic else rng_bot.expovariate(bot_rate)
            s_bot_answers[b] += 1
            if att.in_window:
                bot_counts["answered"] += 1
        else:
            mean = led.svc_mean[p][att.origin]
            svc = mean if deterministic else rng_legit.expovariate(1.0 / mean)
            c = att.who
            c.t_answered = t
            c.outcome = "answered"
        if rows is not None:
            log(t, seq, "Answered", att.who, att.is_bot, att.n, att.sr, p, "answered")
            seq += 1
        push(heap, (t + svc, seq, SERVICE_DONE, att)); seq += 1

    def drop_holder(t, att, outcome):
        """Release the trunk of a queued attempt that loses its place."""
        nonlocal seq
        led.release(att.group, t)
        holding.pop(id(att), None)
        occupy(att.sr, att.t_seize, t)
        if att.in_window:
            blocked[att.served] += 1
        if att.is_bot:
            bot_counts["displaced"] += att.in_window
        else:
            legit_counts["displaced"] += att.in_window
        if rows is not None:
            log(t, seq, "Displaced", att.who, att.is_bot, att.n, att.sr, att.served, outcome)
            seq += 1
        after_block(t, att, outcome)

    def reject(t, att):
        nonlocal seq
        if att.is_bot:
            bot_counts["rejected_blacklist"] += att.in_window
        else:
            legit_counts["rejected_blacklist"] += att.in_window
        if rows is not None:
            log(t, seq, "Rejected", att.who, att.is_bot, att.n, att.sr, att.psap, "blocked_countermeasure")
            seq += 1
        after_block(t, att, "blocked_countermeasure")

    def legit_attempt(t, c):
        nonlocal seq
        att = Attempt(c, False, c.origin, c.sr, c.psap, t, 0, c.attempts, c.t_first >= warmup)
        b = int(t * inv_bw)
        s_legit[b if b < n_b else last_b] += 1
        if blacklist is not None and t >= bl_from and not blacklist.check(c.key, t):
            reject(t, att)
            return
        occupy(c.sr, t, t + setup)
        push(heap, (t + setup, seq, SETUP, att)); seq += 1

    bot_rate = 1.0 / bot_mean
    offered_ = offered
    blocked_ = blocked
    busy = led.tg_busy
    mult = led.tg_mult
    cands = led.candidates
    queues = led.queues
    takers = led.takers
    takers_busy = led.takers_busy
    qcap = led.queue_cap
    partner = led.partner

    # -- main loop -----------------------------------------------------------
    t = 0.0
    while heap:
        t, s, kind, obj = pop(heap)
        if kind == SETUP:
            att = obj
            p = att.psap
            inw = att.in_window
            at = len(rows) if rows is not None else 0
            if inw:
                offered_[p] += 1
            got = None
            origin = att.origin
            for g in cands[p][origin]:
                if busy[g] < mult[g]:
                    got = (p, g)
                    break
            if got is None and prio and qcap[p] > 0:
                cset = led.candidate_sets[p][origin]
                i = cm.displacement_candidate(queues[p], att.rank, lambda a: a.group in cset)
                if i is not None:
                    victim = queues[p].pop(i)[2]
                    got = (p, victim.group)
                    drop_holder(t, victim, "blocked_queue")
            if got is None:
                if inw:
                    blocked_[p] += 1
                q = partner[p]
                if q >= 0:
                    # overflow: one re-offer to the pre-designated partner
                    if inw:
                        offered_[q] += 1
                    for g in cands[q][origin]:
                        if busy[g] < mult[g]:
                            got = (q, g)
                            break
                    if got is None and inw:
                        blocked_[q] += 1
            if got is None:
                result = "blocked_trunk"
                after_block(t, att, "blocked_trunk")
            else:
                q, g = got
                led.seize(g, t)
                att.group = g
                att.served = q
                att.t_seize = t
                holding[id(att)] = att
                if takers_busy[q] < takers[q] and not queues[q]:
                    result = "connected"
                    answer(t, att, q)
                else:
                    ok, victim = cm.priority_insert(queues[q], (att.rank if prio else 0, s, att),
                                                    qcap[q], prio)
                    if ok:
                        result = "queued"
                        if victim is not None:
                            drop_holder(t, victim[2], "blocked_queue")
                    else:
                        led.release(g, t)
                        holding.pop(id(att), None)
                        if inw:
                            blocked_[q] += 1
                        result = "blocked_queue"
                        after_block(t, att, "blocked_queue")
            if rows is not None:
                rows.insert(at, (t, s, "SetupComplete", _cid(att.who, att.is_bot), int(att.is_bot),
                                 att.n, srs[att.sr], led.psap_ids[p], result))
        elif kind == BOT_CALL:
            bot = obj
            if firewall is not None and not firewall.allow(bot.bot_id, t):
                if t >= warmup:
                    bot_counts["suppressed_firewall"] += 1
                nt = firewall.next_allowed(bot.bot_id, t)
                if nt < T:
                    push(heap, (nt, seq, BOT_CALL, bot)); seq += 1
                continue
            att = bot.att
            inw = t >= warmup
            att.t_start = t
            att.in_window = inw
            att.served = -1
            att.group = -1
            b = int(t * inv_bw)
            s_bot[b if b < n_b else last_b] += 1
            if observe_identity:
                ident, _ = bot_next_identity(bot, rng_ident)
            else:
                bot.calls_made += 1
            att.n = bot.calls_made
            if rows is not None:
                log(t, s, "BotNextCall", bot, True, att.n, att.sr, att.psap)
            if blacklist is not None and t >= bl_from and not blacklist.check(ident.key, t):
                reject(t, att)
                continue
            if inw:
                bot_counts["attempts"] += 1
            occupy(att.sr, t, t + setup)
            push(heap, (t + setup, seq, SETUP, att)); seq += 1
        elif kind == SERVICE_DONE:
            att = obj
            q = att.served
            led.release(att.group, t)
            holding.pop(id(att), None)
            takers_busy[q] -= 1
            occupy(att.sr, att.t_seize, t)
            if rows is not None:
                log(t, s, "ServiceDone", att.who, att.is_bot, att.n, att.sr, q, "completed")
            if att.is_bot:
                bot = att.who
                nt = t + overhead
                if spoofing and bot.calls_made % period == 0:
                    nt += attach
                if nt < T:
                    push(heap, (nt, seq, BOT_CALL, bot)); seq += 1
            else:
                att.who.t_ended = t
            if queues[q]:
                nxt = queues[q].pop(0)[2]
                answer(t, nxt, q)
        elif kind == ARRIVAL:
            si, origin, p = obj
            if p < 0:
                p = pick_psap(rng_arr, si)
                dt, nxt_origin = next_legitimate_arrival(rng_arr, plan.rates[srs[si]], p_wireless)
                if t + dt < T:
                    push(heap, (t + dt, seq, ARRIVAL, (si, nxt_origin, -1))); seq += 1
            c = Caller(len(callers), origin, si, p, t)
            callers.append(c)
            c.attempts = 1
            if rows is not None:
                log(t, s, "Arrival", c, False, 1, si, p)
            if legit_fw is not None and not legit_fw.allow(("L", c.id), t):
                legit_counts["suppressed_firewall"] += t >= warmup
                legit_blocked(t, c, si, p)
                continue
            legit_attempt(t, c)
        elif kind == REDIAL:
            c = obj
            c.attempts += 1
            if rows is not None:
                log(t, s, "RedialDue", c, False, c.attempts, c.sr, c.psap)
            if legit_fw is not None and not legit_fw.allow(("L", c.id), t):
                legit_counts["suppressed_firewall"] += c.t_first >= warmup
                legit_blocked(t, c, c.sr, c.psap)
                continue
            legit_attempt(t, c)
        elif kind == DDOS_START:
            if rows is not None:
                rows.append((t, s, "DdosStart", "", 0, 0, "", "", ""))
        elif kind == SIM_END:
            if rows is not None:
                rows.append((t, s, "SimEnd", "", 0, 0, "", "", ""))
            break
        if check:
            led.check()

    # -- end of run ----------------------------------------------------------
    for att in holding.values():
        occupy(att.sr, att.t_seize, T)
    for g in range(len(led.tg_busy)):
        led.tg_busy_s[g] += led.tg_busy[g] * (T - led.tg_last[g])
        led.tg_last[g] = T
    if n_bot:
        b0 = min(int(scenario.ddos_start_s * inv_bw), last_b)
        for b in range(b0, n_b):
            s_active[b] = n_bot

    psap_ids = led.psap_ids
    records = RunRecords(
        callers=callers,
        window=(warmup, T),
        bucket_s=bw,
        psap_offered={psap_ids[i]: offered[i] for i in range(len(psap_ids))},
        psap_blocked={psap_ids[i]: blocked[i] for i in range(len(psap_ids))},
        sr_occupancy_s={srs[i]: sr_win_occ[i] for i in range(len(srs))},
        sr_trunks=dict(led.sr_trunks),
        sr_blocked_attempts={srs[i]: sr_blk_n[i] for i in range(len(srs))},
        sr_blocked_setup_s={srs[i]: sr_blk_s[i] for i in range(len(srs))},
        bot_counts={**bot_counts, **{f"legit_{k}": v for k, v in legit_counts.items()}},
        series=dict(
            t_start=[i * bw for i in range(n_b)],
            legit_arrivals=s_legit, bot_arrivals=s_bot, blocks=s_blocks,
            answers=s_answers, bot_answers=s_bot_answers, active_bots=s_active,
        ),
    )
    report = aggregate(records, topology, scenario)
    return RunResult(report, records, rows, led)


def write_trace(rows: list, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(rows)
