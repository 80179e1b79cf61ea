import csv
import json
from types import SimpleNamespace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fig1_topology
from e911sim.engine import Scenario, run
from e911sim.metrics import RunRecords, aggregate, bucket_rate, emit, load_summary


def caller(origin, outcome, attempts=1, t_first=0.0, t_answered=None):
    return SimpleNamespace(origin=origin, outcome=outcome, attempts=attempts, t_first=t_first,
                           t_answered=t_answered)


def records(callers, window=(0.0, 3600.0)):
    return RunRecords(
        callers=callers, window=window, bucket_s=60.0,
        psap_offered={"P1": 100, "P2": 50}, psap_blocked={"P1": 1, "P2": 2},
        sr_occupancy_s={"SR1": 7200.0}, sr_trunks={"SR1": 1},
        sr_blocked_attempts={"SR1": 3}, sr_blocked_setup_s={"SR1": 0.3},
        bot_counts={"answered": 10}, series={"t_start": [0.0, 60.0], "blocks": [1, 2]},
    )


def test_give_up_fraction_definition():
    cs = [caller(1, "gave_up", 3) for _ in range(20)] + [caller(1, "answered", 1, 0, 5) for _ in range(80)]
    r = aggregate(records(cs))
    assert r.callers["all"].give_up_fraction == 0.20
    assert r.callers["wireline"].callers == 0


def test_attempts_until_answered():
    r = aggregate(records([caller(0, "answered", 3, 10, 40), caller(0, "answered", 1, 0, 0.1)]))
    assert r.callers["all"].mean_attempts_until_answered == 2.0
    assert r.callers["all"].mean_service_time_s == pytest.approx(15.05)


def test_censored_and_warmup_excluded():
    cs = [caller(0, None, 2, 500), caller(0, "answered", 1, 100, 101), caller(1, "gave_up", 4, 400)]
    r = aggregate(records(cs, window=(300.0, 3600.0)))
    a = r.callers["all"]
    assert (a.callers, a.censored, a.gave_up, a.answered) == (1, 1, 1, 0)
    assert r.volume_inflation_pct == pytest.approx(300.0)


def test_psap_and_sr_rows():
    r = aggregate(records([]))
    p1, p2 = r.psaps
    assert (p1.gos, p1.exceeds_p01) == (0.01, False)
    assert (p2.gos, p2.exceeds_p01) == (0.04, True)
    (sr,) = r.srs
    assert sr.erlangs == 2.0 and sr.overloaded
    assert r.overloaded_sr_fraction == 1.0
    assert r.bots["answered_per_hour"] == pytest.approx(10.0)


def test_empty_records_flagged():
    r = aggregate(records([]))
    assert r.empty
    assert r.callers["all"].give_up_fraction == 0.0


@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from(["answered", "gave_up", None]), st.integers(1, 9))))
def test_class_counts_add_up(rows):
    cs = [caller(o, out, n, 0.0, 1.0 if out == "answered" else None) for o, out, n in rows]
    r = aggregate(records(cs)).callers
    w, s, a = r["wireline"], r["wireless"], r["all"]
    for field in ("callers", "answered", "gave_up", "censored", "attempts"):
        assert getattr(w, field) + getattr(s, field) == getattr(a, field)
    assert a.answered + a.gave_up == a.callers
    if a.callers:
        weighted = (w.give_up_fraction * w.callers + s.give_up_fraction * s.callers) / a.callers
        assert a.give_up_fraction == pytest.approx(weighted)


@pytest.fixture(scope="module")
def attacked():
    return run(fig1_topology(), Scenario(duration_s=900, ddos_start_s=300, warmup_s=120, n_bot=30, seed=2)).report


def test_emit_round_trip(attacked, tmp_path):
    emit(attacked, tmp_path)
    assert load_summary(tmp_path / "summary.json") == attacked
    again = tmp_path / "again"
    emit(load_summary(tmp_path / "summary.json"), again)
    assert (again / "summary.json").read_bytes() == (tmp_path / "summary.json").read_bytes()


def test_emit_csvs(attacked, tmp_path):
    emit(attacked, tmp_path)
    psap_rows = list(csv.DictReader(open(tmp_path / "per_psap.csv")))
    assert len(psap_rows) == 3
    sr_rows = list(csv.DictReader(open(tmp_path / "per_sr.csv")))
    assert [r["sr"] for r in sr_rows] == ["SR1", "SR2"]
    ts = list(csv.DictReader(open(tmp_path / "timeseries.csv")))
    starts = [float(r["t_start"]) for r in ts]
    assert len(ts) == 15 and all(b - a == 60.0 for a, b in zip(starts, starts[1:]))
    assert set(ts[0]) == {"t_start", "legit_arrivals", "bot_arrivals", "blocks", "answers", "bot_answers", "active_bots"}
    assert json.loads((tmp_path / "summary.json").read_text())["bucket_s"] == 60.0


def test_emit_unwritable_names_path(attacked, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit(attacked, blocker / "sub")


def test_bucket_rate(attacked):
    s = attacked.series
    total = sum(v for t, v in zip(s["t_start"], s["bot_arrivals"]) if t >= 300)
    assert bucket_rate(attacked, "bot_arrivals", 300) == pytest.approx(total * 3600 / 600)
    assert bucket_rate(attacked, "bot_arrivals", 0, 300) == 0.0
