#!/usr/bin/env python3
"""Legitimate give-up and answered bot calls per hour under each mitigation,
for every bot type, on the NC-like topology.

    python scripts/countermeasure_compare.py --bots 3000 --seeds 5
"""
import argparse
import csv
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product

from e911sim import Scenario, run, synthesize_nc_like
from e911sim import countermeasures as cm
from e911sim.metrics import bucket_rate

MITIGATIONS = {
    "none": cm.CountermeasureConfig(),
    "blacklist": cm.CountermeasureConfig(blacklist=cm.BlacklistConfig(True)),
    "priority": cm.CountermeasureConfig(priority_queue=cm.PriorityConfig(True)),
    "firewall": cm.CountermeasureConfig(firewall=cm.FirewallConfig(True)),
}
BOT_TYPES = ("NA", "A", "AStarMask", "AStarSpoof")


def one(job):
    topo, bot_type, name, seed, n_bot, duration = job
    sc = Scenario(duration_s=duration, ddos_start_s=300, warmup_s=300, n_bot=n_bot, bot_type=bot_type,
                  seed=seed, countermeasures=MITIGATIONS[name])
    r = run(topo, sc).report
    return dict(bot_type=bot_type, mitigation=name, seed=seed, give_up=r.give_up,
                bot_answers_per_hour=bucket_rate(r, "bot_answers", 420))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bots", type=int, default=3000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--duration", type=float, default=1200.0)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--out", default="countermeasures.csv")
    a = ap.parse_args(argv)

    topo = synthesize_nc_like(seed=7)
    jobs = [(topo, bt, m, s, a.bots, a.duration) for bt, m, s in product(BOT_TYPES, MITIGATIONS, range(a.seeds))]
    with ProcessPoolExecutor(a.jobs) as pool:
        rows = list(pool.map(one, jobs))
    with open(a.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    print(f"{'bot type':<11}" + "".join(f"{m:>20}" for m in MITIGATIONS))
    for bt in BOT_TYPES:
        cells = []
        for m in MITIGATIONS:
            sel = [r for r in rows if r["bot_type"] == bt and r["mitigation"] == m]
            g = statistics.fmean(r["give_up"] for r in sel)
            b = statistics.fmean(r["bot_answers_per_hour"] for r in sel)
            cells.append(f"{g:>8.3f} / {b:>9.0f}")
        print(f"{bt:<11}" + "".join(f"{c:>20}" for c in cells))
    print("cells: legitimate give-up / answered bot calls per hour")
    return 0


if __name__ == "__main__":
    sys.exit(main())
