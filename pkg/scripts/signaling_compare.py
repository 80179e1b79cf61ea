#!/usr/bin/env python3
"""Fraction of overloaded selective routers under MF and SS7 setup times."""
import argparse
import sys

from e911sim import Scenario, run, synthesize_nc_like


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bots", type=int, nargs="+", default=[0, 1000, 3000, 6000])
    ap.add_argument("--duration", type=float, default=900.0)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args(argv)

    topo = synthesize_nc_like(seed=7)
    print(f"{'n_bot':>7} {'SS7 overloaded':>15} {'MF overloaded':>14} {'SS7 give-up':>12} {'MF give-up':>11}")
    for n in a.bots:
        r = {sig: run(topo, Scenario(duration_s=a.duration, n_bot=n, signaling=sig, seed=a.seed)).report
             for sig in ("SS7", "MF")}
        print(f"{n:>7} {r['SS7'].overloaded_sr_fraction:>15.2f} {r['MF'].overloaded_sr_fraction:>14.2f} "
              f"{r['SS7'].give_up:>12.3f} {r['MF'].give_up:>11.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
