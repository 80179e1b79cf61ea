"""Command line: synthesize topologies and run seeded scenarios or sweeps.

    e911sim run --scenario s.json --out results/ [--seed N] [--bots N]
                [--signaling ss7|mf] [--trace]
    e911sim synth nc_like --out topo.json [--seed N]
    e911sim synth country --out topo.json --stats states.csv --registry psaps.csv

Exit status: 0 ok, 1 runtime failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import countermeasures as cm
from . import topology as tp
from .engine import PlanError, Scenario, TrafficConfig, run, write_trace
from .metrics import MetricsReport, emit
from .traffic import BotType

SIM_KEYS = ("duration_s", "ddos_start_s", "n_bot", "bot_type", "signaling", "seed", "warmup_s", "bucket_s")
TRAFFIC_KEYS = tuple(f.name for f in fields(TrafficConfig))
TOP_KEYS = ("topology", "sim", "traffic", "countermeasures", "sweep")
NC_KEYS = ("n_psaps", "n_srs", "total_call_takers", "daily_volume", "queue_psap_fraction",
           "mean_queue_len", "seed", "wireless_fraction", "signaling")
SWEEP_COLUMNS = (
    "n_bot", "seed", "callers", "censored", "give_up_all", "give_up_wireline", "give_up_wireless",
    "mean_attempts_until_answered", "mean_service_time_s", "std_service_time_s",
    "volume_inflation_pct", "overloaded_sr_fraction",
)


class InputError(ValueError):
    """Bad scenario, flags or input files (exit status 2)."""


@dataclass
class ScenarioFile:
    topology: object
    sim: dict = field(default_factory=dict)
    traffic: dict = field(default_factory=dict)
    countermeasures: dict = field(default_factory=dict)
    sweep: dict | None = None
    base_dir: Path = Path(".")


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _reject_unknown(d, allowed, where: str, text: str) -> None:
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected an object")
    for k in d:
        if k not in allowed:
            line = _line_of(text, k)
            at = f"line {line}: " if line else ""
            raise InputError(f"{at}unknown key {k!r} in {where}")


def parse_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    _reject_unknown(doc, TOP_KEYS, "scenario", text)
    if "topology" not in doc:
        raise InputError(f"{path}: missing required key 'topology'")
    _reject_unknown(doc.get("sim", {}), SIM_KEYS, "sim", text)
    _reject_unknown(doc.get("traffic", {}), TRAFFIC_KEYS, "traffic", text)
    _reject_unknown(doc.get("countermeasures", {}), ("blacklist", "firewall", "priority_queue"),
                    "countermeasures", text)
    sweep = doc.get("sweep")
    if sweep is not None:
        _reject_unknown(sweep, ("n_bot",), "sweep", text)
        nb = sweep.get("n_bot")
        if not isinstance(nb, list) or not nb or not all(isinstance(x, int) and x >= 0 for x in nb):
            raise InputError("sweep.n_bot must be a non-empty list of integers >= 0")
    topo = doc["topology"]
    if isinstance(topo, dict):
        kind = topo.get("synth")
        if kind == "nc_like":
            _reject_unknown(topo, ("synth",) + NC_KEYS, "topology", text)
        elif kind == "country":
            _reject_unknown(topo, ("synth", "stats", "registry", "seed", "signaling"), "topology", text)
        else:
            raise InputError(f"topology.synth must be 'country' or 'nc_like', got {kind!r}")
    elif not isinstance(topo, str):
        raise InputError("topology must be a file path or a synth object")
    return ScenarioFile(topo, doc.get("sim", {}), doc.get("traffic", {}),
                        doc.get("countermeasures", {}), sweep, path.parent)


def build_topology(spec, base_dir: Path) -> tp.Topology:
    if isinstance(spec, str):
        p = Path(spec)
        return tp.load(p if p.is_absolute() else base_dir / p)
    spec = dict(spec)
    kind = spec.pop("synth")
    if kind == "nc_like":
        return tp.synthesize_nc_like(**spec)
    stats_path, reg_path = spec.get("stats"), spec.get("registry")
    if not stats_path or not reg_path:
        raise InputError("country synthesis needs 'stats' and 'registry' CSV paths")
    resolve = lambda s: Path(s) if Path(s).is_absolute() else base_dir / s  # noqa: E731
    stats = tp.regression_fill(tp.read_state_stats(resolve(stats_path)))
    reg = tp.read_registry(resolve(reg_path))
    return tp.synthesize_country(stats, reg, seed=spec.get("seed", 0),
                                 signaling=tp.Signaling(spec.get("signaling", "SS7")))


def derive_seed(master: int, index: int) -> int:
    """Independent per-run seed for sweep member `index`."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


@dataclass
class RunJob:
    topology: tp.Topology
    scenario: Scenario
    traffic: TrafficConfig
    out_dir: Path
    effective: dict
    trace: bool


def _execute(job: RunJob) -> dict:
    res = run(job.topology, job.scenario, traffic=job.traffic, trace=job.trace)
    emit(res.report, job.out_dir)
    (job.out_dir / "effective_config.json").write_text(json.dumps(job.effective, indent=2, sort_keys=True) + "\n")
    if job.trace:
        write_trace(res.trace, job.out_dir / "trace.csv")
    return _sweep_row(job.scenario, res.report)


def _sweep_row(sc: Scenario, r: MetricsReport) -> dict:
    c = r.callers
    return dict(
        n_bot=sc.n_bot, seed=sc.seed, callers=c["all"].callers, censored=c["all"].censored,
        give_up_all=c["all"].give_up_fraction, give_up_wireline=c["wireline"].give_up_fraction,
        give_up_wireless=c["wireless"].give_up_fraction,
        mean_attempts_until_answered=c["all"].mean_attempts_until_answered,
        mean_service_time_s=c["all"].mean_service_time_s, std_service_time_s=c["all"].std_service_time_s,
        volume_inflation_pct=r.volume_inflation_pct, overloaded_sr_fraction=r.overloaded_sr_fraction,
    )


def plan_runs(sf: ScenarioFile, out: Path, seed=None, bots=None, signaling=None, trace=False):
    """Resolve overrides into concrete jobs (no files are touched)."""
    topology = build_topology(sf.topology, sf.base_dir)
    problems = tp.validate(topology)
    if problems:
        raise InputError("topology does not validate: " + "; ".join(map(str, problems[:5])))
    sim = dict(sf.sim)
    if seed is not None:
        sim["seed"] = seed
    if signaling is not None:
        sim["signaling"] = signaling.upper()
    sim.setdefault("signaling", topology.signaling.value)
    if bots is not None:
        counts, sweeping = [bots], False
    elif sf.sweep is not None:
        counts, sweeping = list(sf.sweep["n_bot"]), True
    else:
        counts, sweeping = [sim.get("n_bot", 0)], False
    master = sim.get("seed", 0)
    traffic = TrafficConfig(**sf.traffic)
    cmc = cm.CountermeasureConfig.from_dict(sf.countermeasures)

    jobs = []
    for i, n in enumerate(counts):
        s = {**sim, "n_bot": n, "seed": derive_seed(master, i) if sweeping else master}
        scenario = Scenario(**s, countermeasures=cmc)
        d = out / f"n_bot_{n}" if sweeping else out
        effective = {
            "topology": "../topology.json" if sweeping else "topology.json",
            "sim": {k: v for k, v in scenario.to_dict().items() if k in SIM_KEYS},
            "traffic": asdict(traffic),
            "countermeasures": cmc.to_dict(),
        }
        jobs.append(RunJob(topology, scenario, traffic, d, effective, trace))
    return topology, jobs, sweeping


def cmd_run(args) -> int:
    out = Path(args.out)
    try:
        sf = parse_scenario(args.scenario)
        topology, jobs, sweeping = plan_runs(sf, out, args.seed, args.bots, args.signaling, args.trace)
    except (InputError, tp.TopologyError, cm.ConfigError, PlanError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out.mkdir(parents=True, exist_ok=True)
        tp.save(topology, out / "topology.json")
        for j in jobs:
            j.out_dir.mkdir(parents=True, exist_ok=True)
        if len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
                rows = list(pool.map(_execute, jobs))
        else:
            rows = [_execute(jobs[0])]
        if sweeping:
            top = dict(jobs[0].effective, topology="topology.json")
            top["sim"] = {k: v for k, v in top["sim"].items() if k not in ("n_bot", "seed")}
            top["sim"]["seed"] = sf.sim.get("seed", 0) if args.seed is None else args.seed
            top["sweep"] = {"n_bot": [j.scenario.n_bot for j in jobs]}
            (out / "effective_config.json").write_text(json.dumps(top, indent=2, sort_keys=True) + "\n")
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, SWEEP_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    except Exception as exc:  # runtime failure
        print(f"error: run failed: {exc}", file=sys.stderr)
        return 1
    for r in rows:
        print(f"n_bot={r['n_bot']} give_up={r['give_up_all']:.4f} "
              f"wireline={r['give_up_wireline']:.4f} wireless={r['give_up_wireless']:.4f}")
    return 0


def cmd_synth(args) -> int:
    try:
        if args.kind == "nc_like":
            topo = tp.synthesize_nc_like(seed=args.seed)
        else:
            if not args.stats or not args.registry:
                raise InputError("synth country needs --stats and --registry")
            stats = tp.regression_fill(tp.read_state_stats(args.stats))
            topo = tp.synthesize_country(stats, tp.read_registry(args.registry), seed=args.seed)
        problems = tp.validate(topo)
        if problems:
            raise InputError("synthesized topology does not validate: " + "; ".join(map(str, problems[:5])))
    except (InputError, tp.TopologyError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        tp.save(topo, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return 1
    trunks = sum(g.multiplicity for g in topo.trunk_groups)
    volume = sum(c.daily_call_volume for c in topo.psap_configs.values())
    print(f"{len(topo.psaps)} PSAPs, {len(topo.srs)} SRs, {len(topo.nodes)} nodes, "
          f"{trunks} trunks, {volume:.1f} calls/day -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="e911sim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file (single run or n_bot sweep)")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--bots", type=int)
    r.add_argument("--signaling", choices=("ss7", "mf"), type=str.lower)
    r.add_argument("--trace", action="store_true", help="also write the per-event trace.csv")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="synthesize a topology file")
    s.add_argument("kind", choices=("country", "nc_like"))
    s.add_argument("--out", required=True)
    s.add_argument("--stats")
    s.add_argument("--registry")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "bots", None) is not None and args.bots < 0:
        print("error: --bots must be >= 0", file=sys.stderr)
        return 2
    return args.func(args)


__all__ = ["InputError", "ScenarioFile", "build_parser", "derive_seed", "main", "parse_scenario"]
