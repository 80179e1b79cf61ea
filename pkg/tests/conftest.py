import pytest

from e911sim.topology import (
    Node,
    NodeType,
    PsapConfig,
    Signaling,
    Topology,
    TrunkClass,
    TrunkGroup,
    TrunkRole,
)

A, D, TD = TrunkRole.ACCESS, TrunkRole.DELIVERY, TrunkRole.TANDEM
WL, WS, SH = TrunkClass.WIRELINE_ONLY, TrunkClass.WIRELESS_ONLY, TrunkClass.SHARED


def fig1_topology() -> Topology:
    """Two SRs joined by a tandem link, COs and an MSC in front, three PSAPs behind."""
    nodes = (
        Node("CO1", NodeType.CO, "central office 1"),
        Node("CO2", NodeType.CO, "central office 2"),
        Node("MSC1", NodeType.MSC, "mobile switching center"),
        Node("SR1", NodeType.SR, "selective router 1"),
        Node("SR2", NodeType.SR, "selective router 2"),
        Node("P1", NodeType.PSAP, "psap 1", 40_000, "north"),
        Node("P2", NodeType.PSAP, "psap 2", 60_000, "south"),
        Node("P3", NodeType.PSAP, "psap 3", 25_000, "east"),
    )
    groups = (
        TrunkGroup("CO1", "SR1", 4, WL, A),
        TrunkGroup("MSC1", "SR1", 6, WS, A),
        TrunkGroup("CO2", "SR2", 3, WL, A),
        TrunkGroup("MSC1", "SR2", 3, WS, A),
        TrunkGroup("SR1", "SR2", 2, SH, TD),
        TrunkGroup("SR1", "P1", 4, SH, D),
        TrunkGroup("SR1", "P2", 1, WL, D),
        TrunkGroup("SR1", "P2", 5, SH, D),
        TrunkGroup("SR2", "P3", 3, SH, D),
    )
    configs = {
        "P1": PsapConfig(call_takers=2, queue_capacity=2, daily_call_volume=100.0),
        "P2": PsapConfig(call_takers=4, queue_capacity=1, daily_call_volume=250.0, overflow_partner="P1"),
        "P3": PsapConfig(call_takers=2, queue_capacity=0, daily_call_volume=80.0),
    }
    return Topology(nodes, groups, configs, Signaling.SS7)


def single_psap(
    trunks=1,
    takers=1,
    queue=0,
    svc=60.0,
    volume=100.0,
    trunk_class=SH,
    extra_groups=(),
) -> Topology:
    """One CO + MSC -> one SR -> one PSAP."""
    nodes = (
        Node("CO", NodeType.CO),
        Node("MSC", NodeType.MSC),
        Node("SR", NodeType.SR),
        Node("P", NodeType.PSAP, "psap"),
    )
    groups = (
        TrunkGroup("CO", "SR", max(trunks, 1), WL, A),
        TrunkGroup("MSC", "SR", max(trunks, 1), WS, A),
        TrunkGroup("SR", "P", trunks, trunk_class, D),
    ) + tuple(extra_groups)
    configs = {"P": PsapConfig(takers, queue, svc, svc, None, volume)}
    return Topology(nodes, groups, configs)


@pytest.fixture
def fig1():
    return fig1_topology()


# acceptance results, printed once at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
