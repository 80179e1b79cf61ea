"""E911 network topology: typed multigraph of CO/MSC/SR/PSAP nodes.

Topologies are immutable once built. They can be loaded from / written to a
single JSON document, validated against the structural constraints of the
E911 model, and synthesized from published aggregate statistics (country
scale from per-state stats, or a state-scale network from a handful of
totals).
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

# Per-PSAP provisioning rates (country-level configuration table).
CONSOLES_PER_10K = 1.1925
TRUNKS_PER_10K = 1.7053
TRUNK_CLASS_RATIO = (0.1602, 0.0951, 0.7448)  # wireline, wireless, shared
SHARED_ONLY_FRACTION = 0.60
NATIONAL_WIRELESS_FRACTION = 0.728

DEFAULT_SVC_WIRELINE_S = 60.0
DEFAULT_SVC_WIRELESS_S = 90.0

NC_DEFAULTS = dict(
    n_psaps=188,
    n_srs=20,
    total_call_takers=775,
    daily_volume=23_048.0,
    queue_psap_fraction=0.67,
    mean_queue_len=1.4,
)


class TopologyError(ValueError):
    """Raised for invalid arguments to topology operations."""


class NodeType(str, enum.Enum):
    PSAP = "PSAP"
    SR = "SR"
    CO = "CO"
    MSC = "MSC"


class TrunkClass(str, enum.Enum):
    WIRELINE_ONLY = "wireline_only"
    WIRELESS_ONLY = "wireless_only"
    SHARED = "shared"


class TrunkRole(str, enum.Enum):
    ACCESS = "access"
    DELIVERY = "delivery"
    TANDEM = "tandem"


class Signaling(str, enum.Enum):
    SS7 = "SS7"
    MF = "MF"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeType
    name: str = ""
    population_served: int | None = None
    community: str | None = None


@dataclass(frozen=True)
class TrunkGroup:
    endpoint_a: str
    endpoint_b: str
    multiplicity: int
    trunk_class: TrunkClass = TrunkClass.SHARED
    role: TrunkRole = TrunkRole.DELIVERY

    def other(self, node_id: str) -> str:
        return self.endpoint_b if node_id == self.endpoint_a else self.endpoint_a

    def label(self, index: int | None = None) -> str:
        prefix = f"trunk_group[{index}] " if index is not None else "trunk_group "
        return f"{prefix}{self.endpoint_a}--{self.endpoint_b} ({self.role.value})"


@dataclass(frozen=True)
class PsapConfig:
    call_takers: int
    queue_capacity: int = 0
    service_time_mean_wireline: float = DEFAULT_SVC_WIRELINE_S
    service_time_mean_wireless: float = DEFAULT_SVC_WIRELESS_S
    overflow_partner: str | None = None
    daily_call_volume: float = 0.0


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    trunk_groups: tuple[TrunkGroup, ...]
    psap_configs: Mapping[str, PsapConfig]
    signaling: Signaling = Signaling.SS7

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def ids_of(self, kind: NodeType) -> list[str]:
        return [n.id for n in self.nodes if n.kind == kind]

    @property
    def psaps(self) -> list[str]:
        return self.ids_of(NodeType.PSAP)

    @property
    def srs(self) -> list[str]:
        return self.ids_of(NodeType.SR)

    @cached_property
    def delivery_groups(self) -> dict[str, list[int]]:
        """PSAP id -> indices of its delivery trunk groups, in file order."""
        out: dict[str, list[int]] = {p: [] for p in self.psaps}
        for i, tg in enumerate(self.trunk_groups):
            if tg.role != TrunkRole.DELIVERY:
                continue
            for end in (tg.endpoint_a, tg.endpoint_b):
                if end in out:
                    out[end].append(i)
        return out

    @cached_property
    def psaps_of_sr(self) -> dict[str, list[str]]:
        """SR id -> PSAPs sharing a delivery trunk group with it (Gamma_PSAP(s))."""
        out: dict[str, list[str]] = {s: [] for s in self.srs}
        for psap, groups in self.delivery_groups.items():
            for i in groups:
                sr = self.trunk_groups[i].other(psap)
                if sr in out and psap not in out[sr]:
                    out[sr].append(psap)
        return out

    def delivery_trunks(self, psap: str) -> int:
        return sum(self.trunk_groups[i].multiplicity for i in self.delivery_groups.get(psap, ()))

    def sr_trunk_count(self, sr: str) -> int:
        """Total delivery multiplicity at an SR (also its assumed access capacity)."""
        return sum(
            tg.multiplicity
            for tg in self.trunk_groups
            if tg.role == TrunkRole.DELIVERY and sr in (tg.endpoint_a, tg.endpoint_b)
        )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.message}"


_ACCESS_KINDS = {NodeType.CO, NodeType.MSC}


def _expected_role(ka: NodeType, kb: NodeType) -> TrunkRole | None:
    kinds = {ka, kb}
    if ka == kb == NodeType.SR:
        return TrunkRole.TANDEM
    if NodeType.SR in kinds and len(kinds) == 2:
        other = (kinds - {NodeType.SR}).pop()
        return TrunkRole.DELIVERY if other == NodeType.PSAP else TrunkRole.ACCESS
    return None


def validate(topology: Topology) -> list[Violation]:
    """Check every structural invariant; returns one Violation per problem found."""
    out: list[Violation] = []
    seen: set[str] = set()
    for n in topology.nodes:
        if n.id in seen:
            out.append(Violation(f"node {n.id}", "duplicate id"))
        seen.add(n.id)
        if n.population_served is not None:
            if n.kind != NodeType.PSAP:
                out.append(Violation(f"node {n.id}", "population_served on non-PSAP node"))
            elif n.population_served <= 0:
                out.append(Violation(f"node {n.id}", "population_served must be > 0"))

    nodes = topology.node_map
    degree: dict[str, set[TrunkRole]] = {n.id: set() for n in topology.nodes}
    for i, tg in enumerate(topology.trunk_groups):
        label = tg.label(i)
        if tg.endpoint_a not in nodes or tg.endpoint_b not in nodes:
            out.append(Violation(label, "endpoint references unknown node"))
            continue
        if tg.multiplicity < 1:
            out.append(Violation(label, f"multiplicity {tg.multiplicity} < 1"))
        role = _expected_role(nodes[tg.endpoint_a].kind, nodes[tg.endpoint_b].kind)
        if role is None:
            out.append(Violation(label, "CO, MSC and PSAP nodes may only connect to SR nodes"))
            continue
        if role != tg.role:
            out.append(Violation(label, f"role {tg.role.value} but endpoints imply {role.value}"))
        degree[tg.endpoint_a].add(role)
        degree[tg.endpoint_b].add(role)

    for n in topology.nodes:
        if n.kind in _ACCESS_KINDS and TrunkRole.ACCESS not in degree[n.id]:
            out.append(Violation(f"node {n.id}", f"{n.kind.value} has no access trunk group"))
        if n.kind == NodeType.PSAP:
            if TrunkRole.DELIVERY not in degree[n.id]:
                out.append(Violation(f"node {n.id}", "PSAP has no delivery trunk group"))
            if n.id not in topology.psap_configs:
                out.append(Violation(f"node {n.id}", "PSAP has no configuration"))

    for pid, cfg in topology.psap_configs.items():
        subject = f"psap_config {pid}"
        if pid not in nodes or nodes[pid].kind != NodeType.PSAP:
            out.append(Violation(subject, "configuration for a node that is not a PSAP"))
            continue
        if cfg.call_takers < 1:
            out.append(Violation(subject, "call_takers must be >= 1"))
        if cfg.queue_capacity < 0:
            out.append(Violation(subject, "queue_capacity must be >= 0"))
        trunks = topology.delivery_trunks(pid)
        room = max(0, trunks - cfg.call_takers)
        if cfg.queue_capacity > room:
            out.append(Violation(
                subject,
                f"queue_capacity {cfg.queue_capacity} exceeds delivery trunks {trunks} "
                f"minus call takers {cfg.call_takers}",
            ))
        if cfg.service_time_mean_wireline <= 0 or cfg.service_time_mean_wireless <= 0:
            out.append(Violation(subject, "service time means must be > 0"))
        if cfg.daily_call_volume < 0:
            out.append(Violation(subject, "daily_call_volume must be >= 0"))
        partner = cfg.overflow_partner
        if partner is not None:
            if partner == pid:
                out.append(Violation(subject, "overflow_partner is the PSAP itself"))
            elif partner not in nodes or nodes[partner].kind != NodeType.PSAP:
                out.append(Violation(subject, f"overflow_partner {partner} is not a PSAP"))
    return out


# ---------------------------------------------------------------------------
# queries


def vol_sr(topology: Topology, sr: str) -> float:
    """Daily inbound volume of an SR: sum of its PSAPs' daily volumes."""
    node = topology.node_map.get(sr)
    if node is None or node.kind != NodeType.SR:
        raise TopologyError(f"{sr!r} is not an SR node")
    return float(sum(topology.psap_configs[p].daily_call_volume for p in topology.psaps_of_sr[sr]))


# ---------------------------------------------------------------------------
# JSON / CSV


def to_dict(topology: Topology) -> dict:
    nodes = []
    for n in topology.nodes:
        d: dict = {"id": n.id, "kind": n.kind.value, "name": n.name}
        if n.population_served is not None:
            d["population"] = n.population_served
        if n.community is not None:
            d["community"] = n.community
        nodes.append(d)
    groups = [
        {"a": tg.endpoint_a, "b": tg.endpoint_b, "multiplicity": tg.multiplicity,
         "class": tg.trunk_class.value, "role": tg.role.value}
        for tg in topology.trunk_groups
    ]
    configs = {}
    for pid, c in topology.psap_configs.items():
        d = {
            "call_takers": c.call_takers,
            "queue_capacity": c.queue_capacity,
            "svc_wireline_s": c.service_time_mean_wireline,
            "svc_wireless_s": c.service_time_mean_wireless,
            "daily_volume": c.daily_call_volume,
        }
        if c.overflow_partner is not None:
            d["overflow_partner"] = c.overflow_partner
        configs[pid] = d
    return {"signaling": topology.signaling.value, "nodes": nodes,
            "trunk_groups": groups, "psap_configs": configs}


def from_dict(doc: Mapping) -> Topology:
    try:
        nodes = tuple(
            Node(
                id=str(d["id"]),
                kind=NodeType(d["kind"]),
                name=d.get("name", ""),
                population_served=d.get("population"),
                community=d.get("community"),
            )
            for d in doc["nodes"]
        )
        groups = tuple(
            TrunkGroup(
                endpoint_a=str(d["a"]),
                endpoint_b=str(d["b"]),
                multiplicity=int(d["multiplicity"]),
                trunk_class=TrunkClass(d.get("class", "shared")),
                role=TrunkRole(d["role"]),
            )
            for d in doc["trunk_groups"]
        )
        configs = {
            str(pid): PsapConfig(
                call_takers=int(c["call_takers"]),
                queue_capacity=int(c.get("queue_capacity", 0)),
                service_time_mean_wireline=float(c.get("svc_wireline_s", DEFAULT_SVC_WIRELINE_S)),
                service_time_mean_wireless=float(c.get("svc_wireless_s", DEFAULT_SVC_WIRELESS_S)),
                overflow_partner=c.get("overflow_partner"),
                daily_call_volume=float(c.get("daily_volume", 0.0)),
            )
            for pid, c in doc["psap_configs"].items()
        }
        signaling = Signaling(doc.get("signaling", "SS7"))
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"malformed topology document: {exc!r}") from exc
    return Topology(nodes, groups, configs, signaling)


def dumps(topology: Topology) -> str:
    return json.dumps(to_dict(topology), indent=2, sort_keys=True) + "\n"


def save(topology: Topology, path: str | Path) -> None:
    Path(path).write_text(dumps(topology))


def load(path: str | Path) -> Topology:
    return from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class StateStats:
    state: str
    population: int
    annual_call_volume: float | None = None
    wireless_fraction: float | None = None

    def __post_init__(self):
        if self.population <= 0:
            raise TopologyError(f"state {self.state}: population must be > 0")
        if self.wireless_fraction is not None and not 0.0 <= self.wireless_fraction <= 1.0:
            raise TopologyError(f"state {self.state}: wireless_fraction outside [0, 1]")


@dataclass(frozen=True)
class RegistryEntry:
    psap_name: str
    state: str
    local_population: int


def _blank_float(s: str | None) -> float | None:
    s = (s or "").strip()
    return float(s) if s else None


def read_state_stats(path: str | Path) -> list[StateStats]:
    with open(path, newline="") as fh:
        return [
            StateStats(
                state=row["state"].strip(),
                population=int(float(row["population"])),
                annual_call_volume=_blank_float(row.get("annual_volume")),
                wireless_fraction=_blank_float(row.get("wireless_fraction")),
            )
            for row in csv.DictReader(fh)
        ]


def read_registry(path: str | Path) -> list[RegistryEntry]:
    with open(path, newline="") as fh:
        return [
            RegistryEntry(row["psap_name"].strip(), row["state"].strip(),
                          int(float(row["local_population"])))
            for row in csv.DictReader(fh)
        ]


# ---------------------------------------------------------------------------
# synthesis helpers


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def apportion(total: int, weights: Sequence[float], tie_rng: np.random.Generator | None = None) -> list[int]:
    """Largest-remainder apportionment of an integer total by weights.

    Exact remainder ties are broken by `tie_rng` when given, else by index.
    """
    if total < 0:
        raise TopologyError("cannot apportion a negative total")
    wsum = float(sum(weights))
    if wsum <= 0:
        raise TopologyError("weights must have a positive sum")
    quotas = [total * w / wsum for w in weights]
    counts = [int(math.floor(q)) for q in quotas]
    left = total - sum(counts)
    rema = [q - c for q, c in zip(quotas, counts)]
    tiebreak = tie_rng.permutation(len(weights)) if tie_rng is not None else range(len(weights))
    order = sorted(range(len(weights)), key=lambda i: (-round(rema[i], 12), tiebreak[i]))
    for i in order[:left]:
        counts[i] += 1
    return counts


def _delivery_groups(psap: str, sr: str, trunks: int, shared_only: bool) -> list[TrunkGroup]:
    if shared_only:
        split = [0, 0, trunks]
    else:
        split = apportion(trunks, TRUNK_CLASS_RATIO)
    out = []
    for cls, m in zip((TrunkClass.WIRELINE_ONLY, TrunkClass.WIRELESS_ONLY, TrunkClass.SHARED), split):
        if m > 0:
            out.append(TrunkGroup(sr, psap, m, cls, TrunkRole.DELIVERY))
    return out


def _access_groups(sr: str, co: str, msc: str, trunks: int, wireless_fraction: float) -> list[TrunkGroup]:
    # both entry switches need at least one trunk, so tiny SRs get 2 in total
    total = max(trunks, 2)
    msc_n = min(max(round_half_up(total * wireless_fraction), 1), total - 1)
    return [
        TrunkGroup(co, sr, total - msc_n, TrunkClass.WIRELINE_ONLY, TrunkRole.ACCESS),
        TrunkGroup(msc, sr, msc_n, TrunkClass.WIRELESS_ONLY, TrunkRole.ACCESS),
    ]


def regression_fill(stats: Iterable[StateStats]) -> list[StateStats]:
    """Fill missing annual volumes by OLS on population; missing wireless
    fractions get the national mean."""
    stats = list(stats)
    known = [s for s in stats if s.annual_call_volume is not None]
    if len(known) < 2:
        raise TopologyError("regression_fill needs at least 2 states with annual_call_volume")
    x = np.array([s.population for s in known], dtype=float)
    y = np.array([s.annual_call_volume for s in known], dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    out = []
    for s in stats:
        vol = s.annual_call_volume
        if vol is None:
            vol = max(0.0, float(intercept + slope * s.population))
        wf = s.wireless_fraction if s.wireless_fraction is not None else NATIONAL_WIRELESS_FRACTION
        out.append(StateStats(s.state, s.population, vol, wf))
    return out


def synthesize_country(
    stats: Iterable[StateStats],
    registry: Iterable[RegistryEntry | tuple],
    seed: int = 0,
    signaling: Signaling = Signaling.SS7,
) -> Topology:
    """Country-scale topology: one SR, CO and MSC per state, PSAPs from a registry."""
    stats = {s.state: s for s in stats}
    entries = [e if isinstance(e, RegistryEntry) else RegistryEntry(*e) for e in registry]
    for s in stats.values():
        if s.annual_call_volume is None or s.wireless_fraction is None:
            raise TopologyError(f"state {s.state} is incomplete; run regression_fill first")
    state_pop: dict[str, int] = {}
    for e in entries:
        if e.state not in stats:
            raise TopologyError(f"registry entry {e.psap_name!r} references unknown state {e.state!r}")
        if e.local_population <= 0:
            raise TopologyError(f"registry entry {e.psap_name!r} has non-positive population")
        state_pop[e.state] = state_pop.get(e.state, 0) + e.local_population

    rng = np.random.default_rng(seed)
    shared_only = rng.random(len(entries)) < SHARED_ONLY_FRACTION

    nodes: list[Node] = []
    groups: list[TrunkGroup] = []
    configs: dict[str, PsapConfig] = {}
    sr_trunks: dict[str, int] = {}
    served = [st for st in stats if st in state_pop]  # states with no registry PSAP get no SR
    for state in served:
        nodes.append(Node(f"SR-{state}", NodeType.SR, f"{state} selective router"))
        sr_trunks[f"SR-{state}"] = 0
    for i, e in enumerate(entries):
        pid = f"P{i:05d}"
        sr = f"SR-{e.state}"
        takers = max(1, round_half_up(CONSOLES_PER_10K * e.local_population / 1e4))
        trunks = max(1, round_half_up(TRUNKS_PER_10K * e.local_population / 1e4))
        daily = stats[e.state].annual_call_volume / 365.0 * e.local_population / state_pop[e.state]
        nodes.append(Node(pid, NodeType.PSAP, e.psap_name, e.local_population, e.psap_name))
        groups.extend(_delivery_groups(pid, sr, trunks, bool(shared_only[i])))
        configs[pid] = PsapConfig(
            call_takers=takers,
            queue_capacity=max(0, trunks - takers),
            daily_call_volume=daily,
        )
        sr_trunks[sr] += trunks
    for state in served:
        s = stats[state]
        sr, co, msc = f"SR-{state}", f"CO-{state}", f"MSC-{state}"
        nodes.append(Node(co, NodeType.CO, f"{state} central office"))
        nodes.append(Node(msc, NodeType.MSC, f"{state} mobile switching center"))
        groups.extend(_access_groups(sr, co, msc, sr_trunks[sr], s.wireless_fraction))
    return Topology(tuple(nodes), tuple(groups), configs, signaling)


def synthesize_nc_like(
    n_psaps: int = NC_DEFAULTS["n_psaps"],
    n_srs: int = NC_DEFAULTS["n_srs"],
    total_call_takers: int = NC_DEFAULTS["total_call_takers"],
    daily_volume: float = NC_DEFAULTS["daily_volume"],
    queue_psap_fraction: float = NC_DEFAULTS["queue_psap_fraction"],
    mean_queue_len: float = NC_DEFAULTS["mean_queue_len"],
    seed: int = 0,
    wireless_fraction: float = 0.7,
    signaling: Signaling = Signaling.SS7,
) -> Topology:
    """State-scale topology matching published aggregates.

    PSAPs are spread over the SRs by a seeded partition (every SR gets at
    least one), call takers are drawn from a skewed distribution with a
    floor of one, and volume follows call takers. Delivery trunks equal
    call takers plus queue slots, split into classes like the country model.
    """
    if min(n_psaps, n_srs, total_call_takers) <= 0 or daily_volume <= 0 or mean_queue_len <= 0:
        raise TopologyError("all aggregates must be positive")
    if not 0.0 <= queue_psap_fraction <= 1.0:
        raise TopologyError("queue_psap_fraction must lie in [0, 1]")
    if n_psaps < n_srs:
        raise TopologyError("need at least one PSAP per SR")
    if total_call_takers < n_psaps:
        raise TopologyError("total_call_takers < n_psaps: each PSAP needs at least one call taker")

    rng = np.random.default_rng(seed)
    per_sr = 1 + rng.multinomial(n_psaps - n_srs, rng.dirichlet(np.ones(n_srs)))
    weights = rng.lognormal(0.0, 1.0, n_psaps)
    takers = 1 + rng.multinomial(total_call_takers - n_psaps, weights / weights.sum())

    n_queued = round_half_up(queue_psap_fraction * n_psaps)
    queue = np.zeros(n_psaps, dtype=int)
    if n_queued:
        slots = max(n_queued, round_half_up(mean_queue_len * n_queued))
        chosen = rng.choice(n_psaps, size=n_queued, replace=False)
        queue[chosen] = 1 + rng.multinomial(slots - n_queued, np.full(n_queued, 1.0 / n_queued))
    shared_only = rng.random(n_psaps) < SHARED_ONLY_FRACTION

    nodes: list[Node] = []
    groups: list[TrunkGroup] = []
    configs: dict[str, PsapConfig] = {}
    k = 0
    for s in range(n_srs):
        sr, co, msc = f"SR{s:02d}", f"CO{s:02d}", f"MSC{s:02d}"
        nodes.append(Node(sr, NodeType.SR, f"selective router {s}"))
        sr_total = 0
        for _ in range(per_sr[s]):
            pid = f"P{k:03d}"
            trunks = int(takers[k] + queue[k])
            nodes.append(Node(pid, NodeType.PSAP, f"psap {k}", community=pid))
            groups.extend(_delivery_groups(pid, sr, trunks, bool(shared_only[k])))
            configs[pid] = PsapConfig(
                call_takers=int(takers[k]),
                queue_capacity=int(queue[k]),
                daily_call_volume=float(daily_volume) * float(takers[k]) / total_call_takers,
            )
            sr_total += trunks
            k += 1
        nodes.append(Node(co, NodeType.CO, f"central office {s}"))
        nodes.append(Node(msc, NodeType.MSC, f"mobile switching center {s}"))
        groups.extend(_access_groups(sr, co, msc, sr_total, wireless_fraction))
    return Topology(tuple(nodes), tuple(groups), configs, signaling)
