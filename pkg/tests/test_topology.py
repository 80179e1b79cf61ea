import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fig1_topology
from e911sim import topology as tp
from e911sim.topology import (
    Node,
    NodeType,
    PsapConfig,
    RegistryEntry,
    StateStats,
    TopologyError,
    TrunkClass,
    TrunkGroup,
    TrunkRole,
)


def test_fig1_validates_cleanly(fig1):
    assert tp.validate(fig1) == []


def test_co_psap_trunk_group_is_one_violation(fig1):
    bad = dataclasses.replace(
        fig1, trunk_groups=fig1.trunk_groups + (TrunkGroup("CO1", "P1", 2, TrunkClass.SHARED, TrunkRole.DELIVERY),)
    )
    report = tp.validate(bad)
    assert len(report) == 1
    assert "CO1--P1" in report[0].subject


def test_queue_longer_than_spare_trunks(fig1):
    # P1: 4 delivery trunks, 2 takers -> room for 2 queued callers, not 3
    configs = dict(fig1.psap_configs)
    configs["P1"] = dataclasses.replace(configs["P1"], queue_capacity=3)
    report = tp.validate(dataclasses.replace(fig1, psap_configs=configs))
    assert len(report) == 1
    assert "P1" in report[0].subject and "queue_capacity 3" in report[0].message


def _mutations():
    def dup_id(t):
        return dataclasses.replace(t, nodes=t.nodes + (Node("P1", NodeType.PSAP),))

    def wrong_role(t):
        g = list(t.trunk_groups)
        g[0] = dataclasses.replace(g[0], role=TrunkRole.DELIVERY)
        return dataclasses.replace(t, trunk_groups=tuple(g))

    def zero_mult(t):
        g = list(t.trunk_groups)
        g[5] = dataclasses.replace(g[5], multiplicity=0)
        return dataclasses.replace(t, trunk_groups=tuple(g))

    def orphan_msc(t):
        return dataclasses.replace(t, nodes=t.nodes + (Node("MSC9", NodeType.MSC),))

    def psap_without_config(t):
        c = dict(t.psap_configs)
        del c["P3"]
        return dataclasses.replace(t, psap_configs=c)

    def population_on_sr(t):
        n = list(t.nodes)
        n[3] = dataclasses.replace(n[3], population_served=10)
        return dataclasses.replace(t, nodes=tuple(n))

    def zero_takers(t):
        c = dict(t.psap_configs)
        c["P3"] = dataclasses.replace(c["P3"], call_takers=0)
        return dataclasses.replace(t, psap_configs=c)

    def bad_partner(t):
        c = dict(t.psap_configs)
        c["P3"] = dataclasses.replace(c["P3"], overflow_partner="SR1")
        return dataclasses.replace(t, psap_configs=c)

    def negative_service(t):
        c = dict(t.psap_configs)
        c["P1"] = dataclasses.replace(c["P1"], service_time_mean_wireless=0.0)
        return dataclasses.replace(t, psap_configs=c)

    def psap_psap_link(t):
        return dataclasses.replace(
            t, trunk_groups=t.trunk_groups + (TrunkGroup("P1", "P2", 1, TrunkClass.SHARED, TrunkRole.DELIVERY),)
        )

    return [dup_id, wrong_role, zero_mult, orphan_msc, psap_without_config, population_on_sr,
            zero_takers, bad_partner, negative_service, psap_psap_link]


@given(st.sampled_from(_mutations()))
def test_any_single_injected_violation_is_reported(mutate):
    assert tp.validate(mutate(fig1_topology()))


def test_vol_sr(fig1):
    assert tp.vol_sr(fig1, "SR1") == 350.0
    assert tp.vol_sr(fig1, "SR2") == 80.0


def test_vol_sr_without_psaps(fig1):
    t = dataclasses.replace(fig1, nodes=fig1.nodes + (Node("SR9", NodeType.SR),))
    assert tp.vol_sr(t, "SR9") == 0


@pytest.mark.parametrize("bad", ["P1", "nope"])
def test_vol_sr_rejects_non_sr(fig1, bad):
    with pytest.raises(TopologyError):
        tp.vol_sr(fig1, bad)


def test_json_round_trip(fig1, tmp_path):
    path = tmp_path / "t.json"
    tp.save(fig1, path)
    again = tp.load(path)
    assert again == fig1
    doc = json.loads(path.read_text())
    assert set(doc) == {"signaling", "nodes", "trunk_groups", "psap_configs"}
    assert doc["psap_configs"]["P2"]["overflow_partner"] == "P1"
    assert {"a", "b", "multiplicity", "class", "role"} == set(doc["trunk_groups"][0])


# -- regression fill ---------------------------------------------------------


def _normal_equations(points):
    """OLS intercept/slope from the 2x2 normal equations, solved by Cramer's rule."""
    n = len(points)
    sx = sum(x for x, _ in points)
    sy = sum(y for _, y in points)
    sxx = sum(x * x for x, _ in points)
    sxy = sum(x * y for x, y in points)
    det = n * sxx - sx * sx
    return (sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det


def test_regression_exact_line():
    out = tp.regression_fill([
        StateStats("a", 1_000_000, 1_000_000, 0.7),
        StateStats("b", 2_000_000, 2_000_000, 0.6),
        StateStats("c", 1_500_000),
    ])
    assert out[2].annual_call_volume == pytest.approx(1_500_000)
    assert out[2].wireless_fraction == 0.728
    assert out[0] == StateStats("a", 1_000_000, 1_000_000, 0.7)


def test_regression_collinear_against_normal_equations():
    pts = [(1e6, 1.5e6), (2e6, 2.5e6), (4e6, 4.5e6)]
    stats = [StateStats(str(i), int(x), y) for i, (x, y) in enumerate(pts)] + [StateStats("m", 3_000_000)]
    b0, b1 = _normal_equations(pts)
    assert b0 + b1 * 3e6 == pytest.approx(3.5e6)
    assert tp.regression_fill(stats)[-1].annual_call_volume == pytest.approx(b0 + b1 * 3e6, rel=1e-9)


def test_regression_noisy_against_normal_equations():
    pts = [(0.6e6, 0.41e6), (1.9e6, 1.2e6), (5.2e6, 4.4e6), (9.9e6, 7.1e6), (3.3e6, 2.0e6)]
    stats = [StateStats(str(i), int(x), y) for i, (x, y) in enumerate(pts)] + [StateStats("m", 7_000_000)]
    b0, b1 = _normal_equations(pts)
    assert tp.regression_fill(stats)[-1].annual_call_volume == pytest.approx(b0 + b1 * 7e6, rel=1e-9)


def test_regression_clamps_negative_fill():
    out = tp.regression_fill([StateStats("a", 2_000_000, 10.0), StateStats("b", 3_000_000, 2_000_000.0),
                              StateStats("c", 100)])
    assert out[-1].annual_call_volume == 0.0


def test_regression_needs_two_states():
    with pytest.raises(TopologyError):
        tp.regression_fill([StateStats("a", 10, 5.0), StateStats("b", 20)])


def test_state_stats_invariants():
    with pytest.raises(TopologyError):
        StateStats("a", 0)
    with pytest.raises(TopologyError):
        StateStats("a", 10, wireless_fraction=1.2)


# -- synthesis ---------------------------------------------------------------

TWO_STATES = [StateStats("AA", 100_000, 365_000.0, 0.7), StateStats("BB", 300_000, 730_000.0, 0.75)]
REGISTRY = [
    RegistryEntry("aa-west", "AA", 30_000),
    RegistryEntry("aa-east", "AA", 70_000),
    RegistryEntry("bb-one", "BB", 100_000),
    RegistryEntry("bb-two", "BB", 200_000),
]


def test_country_psap_provisioning():
    t = tp.synthesize_country(TWO_STATES, REGISTRY, seed=1)
    bb_one = t.psap_configs["P00002"]
    assert bb_one.call_takers == 12  # round(1.1925 * 10)
    assert t.delivery_trunks("P00002") == 17  # round(1.7053 * 10)


def test_country_proportional_split():
    t = tp.synthesize_country(TWO_STATES, REGISTRY, seed=1)
    assert t.psap_configs["P00000"].daily_call_volume == pytest.approx(300.0)
    assert t.psap_configs["P00001"].daily_call_volume == pytest.approx(700.0)


def test_country_structure():
    t = tp.synthesize_country(TWO_STATES, REGISTRY, seed=3)
    assert tp.validate(t) == []
    assert sorted(t.srs) == ["SR-AA", "SR-BB"]
    assert len(t.psaps) == 4
    for sr in t.srs:
        access = sum(g.multiplicity for g in t.trunk_groups if g.role == TrunkRole.ACCESS and sr in (g.endpoint_a, g.endpoint_b))
        assert access == max(t.sr_trunk_count(sr), 2)


def test_country_unknown_state():
    with pytest.raises(TopologyError):
        tp.synthesize_country(TWO_STATES, [RegistryEntry("x", "ZZ", 100)])


@settings(max_examples=25, deadline=None)
@given(
    pops=st.lists(st.integers(500, 400_000), min_size=1, max_size=12),
    annual=st.floats(1_000, 5e6),
    seed=st.integers(0, 2**32 - 1),
)
def test_country_conserves_volume_and_validates(pops, annual, seed):
    stats = [StateStats("S", sum(pops), annual, 0.7)]
    reg = [RegistryEntry(f"p{i}", "S", p) for i, p in enumerate(pops)]
    t = tp.synthesize_country(stats, reg, seed=seed)
    assert tp.validate(t) == []
    total = sum(c.daily_call_volume for c in t.psap_configs.values())
    assert abs(total - annual / 365) < 1.0
    assert tp.dumps(t) == tp.dumps(tp.synthesize_country(stats, reg, seed=seed))


def test_country_scale_registry():
    stats = tp.regression_fill([StateStats(f"S{i}", 1_000_000 + i, 900_000.0 + i if i % 3 else None) for i in range(51)])
    reg = [RegistryEntry(f"psap{i}", f"S{i % 51}", 5_000 + 37 * i) for i in range(7227)]
    t = tp.synthesize_country(stats, reg, seed=0)
    assert len(t.psaps) == 7227
    assert len(t.srs) == 51


def test_nc_like_defaults():
    t = tp.synthesize_nc_like(seed=7)
    assert tp.validate(t) == []
    assert len(t.psaps) == 188 and len(t.srs) == 20
    assert sum(c.call_takers for c in t.psap_configs.values()) == 775
    assert sum(tp.vol_sr(t, s) for s in t.srs) == pytest.approx(23_048)
    queued = [c.queue_capacity for c in t.psap_configs.values() if c.queue_capacity > 0]
    assert len(queued) == round(0.67 * 188)
    assert sum(queued) / len(queued) == pytest.approx(1.4, abs=0.01)


def test_nc_like_degenerate():
    t = tp.synthesize_nc_like(n_psaps=1, n_srs=1, total_call_takers=2, daily_volume=58, seed=0)
    (p,) = t.psaps
    assert t.psap_configs[p].call_takers == 2
    assert t.psap_configs[p].daily_call_volume == 58


def test_nc_like_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    tp.save(tp.synthesize_nc_like(seed=11), a)
    tp.save(tp.synthesize_nc_like(seed=11), b)
    assert a.read_bytes() == b.read_bytes()
    assert tp.dumps(tp.synthesize_nc_like(seed=12)) != a.read_text()


def test_nc_like_needs_a_taker_per_psap():
    with pytest.raises(TopologyError):
        tp.synthesize_nc_like(n_psaps=10, n_srs=2, total_call_takers=9)


@settings(max_examples=20, deadline=None)
@given(
    n_srs=st.integers(1, 6),
    extra_psaps=st.integers(0, 30),
    extra_takers=st.integers(0, 60),
    seed=st.integers(0, 2**32 - 1),
)
def test_nc_like_always_valid(n_srs, extra_psaps, extra_takers, seed):
    n_psaps = n_srs + extra_psaps
    t = tp.synthesize_nc_like(n_psaps=n_psaps, n_srs=n_srs, total_call_takers=n_psaps + extra_takers,
                              daily_volume=1000.0, seed=seed)
    assert tp.validate(t) == []
    assert sum(c.call_takers for c in t.psap_configs.values()) == n_psaps + extra_takers
    # each PSAP hangs off exactly one SR, so SR volumes partition the total
    assert sum(tp.vol_sr(t, s) for s in t.srs) == pytest.approx(1000.0)


def test_apportion_largest_remainder():
    assert tp.apportion(17, [0.1602, 0.0951, 0.7448]) == [3, 1, 13]  # quotas 2.72, 1.62, 12.66
    assert tp.apportion(2, [0.1602, 0.0951, 0.7448]) == [0, 0, 2]
    assert sum(tp.apportion(5, [1, 1, 1])) == 5
