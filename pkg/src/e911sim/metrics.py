"""Aggregation of simulation records into caller, PSAP and SR metrics, plus
report files (summary.json and plot-ready CSVs)."""
from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .teletraffic import gos, offered_load

CLASSES = ("wireline", "wireless", "all")


@dataclass
class RunRecords:
    """Everything the engine hands over for aggregation.

    Per-attempt detail is pre-counted by the engine (bot traffic runs to
    millions of attempts); per-caller detail is kept for legitimate callers.
    """

    callers: list
    window: tuple[float, float]
    bucket_s: float
    psap_offered: dict[str, int]
    psap_blocked: dict[str, int]
    sr_occupancy_s: dict[str, float]
    sr_trunks: dict[str, int]
    sr_blocked_attempts: dict[str, int]
    sr_blocked_setup_s: dict[str, float]
    bot_counts: dict[str, int]
    series: dict[str, list]


@dataclass
class ClassStats:
    callers: int = 0
    answered: int = 0
    gave_up: int = 0
    censored: int = 0
    attempts: int = 0
    give_up_fraction: float = 0.0
    mean_attempts_until_answered: float = 0.0
    mean_service_time_s: float = 0.0
    std_service_time_s: float = 0.0


@dataclass
class PsapStats:
    psap: str
    offered: int
    blocked: int
    gos: float
    exceeds_p01: bool


@dataclass
class SrStats:
    sr: str
    trunks: int
    occupancy_s: float
    erlangs: float
    erlangs_per_trunk: float
    overloaded: bool
    blocked_attempts: int
    blocked_setup_occupancy_s: float


@dataclass
class MetricsReport:
    window_s: float
    bucket_s: float
    callers: dict[str, ClassStats]
    psaps: list[PsapStats]
    srs: list[SrStats]
    overloaded_sr_fraction: float
    volume_inflation_pct: float
    bots: dict[str, float]
    series: dict[str, list]
    empty: bool = False
    scenario: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["callers"] = {k: ClassStats(**v) for k, v in d["callers"].items()}
        d["psaps"] = [PsapStats(**p) for p in d["psaps"]]
        d["srs"] = [SrStats(**s) for s in d["srs"]]
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def give_up(self) -> float:
        return self.callers["all"].give_up_fraction


def _class_stats(callers: list) -> ClassStats:
    s = ClassStats()
    waits = []
    answered_attempts = 0
    for c in callers:
        if c.outcome is None:
            s.censored += 1
            continue
        s.callers += 1
        s.attempts += c.attempts
        if c.outcome == "answered":
            s.answered += 1
            answered_attempts += c.attempts
            waits.append(c.t_answered - c.t_first)
        else:
            s.gave_up += 1
    if s.callers:
        s.give_up_fraction = s.gave_up / s.callers
    if s.answered:
        s.mean_attempts_until_answered = answered_attempts / s.answered
        s.mean_service_time_s = statistics.fmean(waits)
        s.std_service_time_s = statistics.pstdev(waits) if len(waits) > 1 else 0.0
    return s


def aggregate(records: RunRecords, topology=None, scenario=None) -> MetricsReport:
    t0, t1 = records.window
    window = t1 - t0
    measured = [c for c in records.callers if c.t_first >= t0]
    by_class = {
        "wireline": _class_stats([c for c in measured if c.origin == 0]),
        "wireless": _class_stats([c for c in measured if c.origin == 1]),
        "all": _class_stats(measured),
    }

    psaps = []
    for p in sorted(records.psap_offered):
        g = gos(records.psap_offered[p], records.psap_blocked[p])
        psaps.append(PsapStats(p, g.offered, g.blocked, g.gos, g.exceeds_p01))

    srs = []
    for s in sorted(records.sr_occupancy_s):
        load = offered_load(records.sr_occupancy_s[s], window, records.sr_trunks[s]) if window > 0 else None
        srs.append(SrStats(
            sr=s,
            trunks=records.sr_trunks[s],
            occupancy_s=records.sr_occupancy_s[s],
            erlangs=load.erlangs if load else 0.0,
            erlangs_per_trunk=load.per_trunk if load else 0.0,
            overloaded=bool(load and load.overloaded),
            blocked_attempts=records.sr_blocked_attempts[s],
            blocked_setup_occupancy_s=records.sr_blocked_setup_s[s],
        ))
    overloaded = sum(s.overloaded for s in srs) / len(srs) if srs else 0.0

    # censored callers are left out, as in the per-class attempt counts
    n_callers = by_class["all"].callers
    attempts = by_class["all"].attempts
    inflation = (attempts / n_callers - 1.0) * 100.0 if n_callers else 0.0

    bots = dict(records.bot_counts)
    bots["answered_per_hour"] = bots.get("answered", 0) * 3600.0 / window if window > 0 else 0.0

    return MetricsReport(
        window_s=window,
        bucket_s=records.bucket_s,
        callers=by_class,
        psaps=psaps,
        srs=srs,
        overloaded_sr_fraction=overloaded,
        volume_inflation_pct=inflation,
        bots=bots,
        series={k: list(v) for k, v in records.series.items()},
        empty=not measured,
        scenario=scenario.to_dict() if scenario is not None and hasattr(scenario, "to_dict") else {},
    )


PSAP_COLUMNS = ("psap", "offered", "blocked", "gos", "exceeds_p01")
SR_COLUMNS = tuple(f.name for f in fields(SrStats))
SERIES_COLUMNS = ("t_start", "legit_arrivals", "bot_arrivals", "blocks", "answers", "bot_answers", "active_bots")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit(report: MetricsReport, out_dir: str | Path) -> list[Path]:
    """Write summary.json, per_psap.csv, per_sr.csv and timeseries.csv."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / n for n in ("summary.json", "per_psap.csv", "per_sr.csv", "timeseries.csv")]
        paths[0].write_text(report.dumps())
        _write_csv(paths[1], PSAP_COLUMNS, ([getattr(p, c) for c in PSAP_COLUMNS] for p in report.psaps))
        _write_csv(paths[2], SR_COLUMNS, ([getattr(s, c) for c in SR_COLUMNS] for s in report.srs))
        s = report.series
        n = len(s.get("t_start", []))
        _write_csv(paths[3], SERIES_COLUMNS, ([s[c][i] for c in SERIES_COLUMNS] for i in range(n)))
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror or exc}") from exc
    return paths


def load_summary(path: str | Path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text()))


def bucket_rate(report: MetricsReport, column: str, t_from: float, t_to: float = math.inf) -> float:
    """Per-hour rate of a time-series column over buckets starting in [t_from, t_to)."""
    s = report.series
    total = 0
    n = 0
    for t, v in zip(s["t_start"], s[column]):
        if t_from <= t < t_to and t + report.bucket_s <= _series_end(report):
            total += v
            n += 1
    return total * 3600.0 / (n * report.bucket_s) if n else 0.0


def _series_end(report: MetricsReport) -> float:
    return report.scenario.get("duration_s", math.inf)
