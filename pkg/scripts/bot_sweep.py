#!/usr/bin/env python3
"""Give-up fraction, attempts and time-to-answer versus botnet size on the
NC-like topology, averaged over seeds.

    python scripts/bot_sweep.py --bots 0 1000 6000 25000 50000 --seeds 3 --out sweep.csv
"""
import argparse
import csv
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product

from e911sim import Scenario, run, synthesize_nc_like
from e911sim.cli import derive_seed

COLUMNS = ("n_bot", "seed", "give_up_all", "give_up_wireline", "give_up_wireless",
           "mean_attempts_until_answered", "mean_service_time_s", "volume_inflation_pct",
           "overloaded_sr_fraction")


def one(job):
    topo, n_bot, seed, duration, bot_type = job
    r = run(topo, Scenario(duration_s=duration, ddos_start_s=300, warmup_s=300, n_bot=n_bot,
                           bot_type=bot_type, seed=seed)).report
    c = r.callers
    return dict(n_bot=n_bot, seed=seed, give_up_all=c["all"].give_up_fraction,
                give_up_wireline=c["wireline"].give_up_fraction, give_up_wireless=c["wireless"].give_up_fraction,
                mean_attempts_until_answered=c["all"].mean_attempts_until_answered,
                mean_service_time_s=c["all"].mean_service_time_s,
                volume_inflation_pct=r.volume_inflation_pct, overloaded_sr_fraction=r.overloaded_sr_fraction)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bots", type=int, nargs="+", default=[0, 1000, 6000, 25000, 50000])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--master-seed", type=int, default=0)
    ap.add_argument("--duration", type=float, default=1200.0)
    ap.add_argument("--bot-type", default="AStarMask")
    ap.add_argument("--topology-seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--out", default="bot_sweep.csv")
    a = ap.parse_args(argv)

    topo = synthesize_nc_like(seed=a.topology_seed)
    seeds = [derive_seed(a.master_seed, i) for i in range(a.seeds)]
    jobs = [(topo, n, s, a.duration, a.bot_type) for n, s in product(a.bots, seeds)]
    with ProcessPoolExecutor(a.jobs) as pool:
        rows = list(pool.map(one, jobs))
    with open(a.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    print(f"{'n_bot':>7} {'give-up':>8} {'wireline':>9} {'wireless':>9} {'attempts':>9} {'t_answer':>9}")
    for n in a.bots:
        sel = [r for r in rows if r["n_bot"] == n]
        m = {k: statistics.fmean(r[k] for r in sel) for k in COLUMNS[2:]}
        print(f"{n:>7} {m['give_up_all']:>8.3f} {m['give_up_wireline']:>9.3f} {m['give_up_wireless']:>9.3f} "
              f"{m['mean_attempts_until_answered']:>9.2f} {m['mean_service_time_s']:>9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
