"""Storage before and after purging, and how k trades storage for undo reach.

For each k, runs a delete-heavy workload, settles, purges and reports the
stored edges + values relative to the unpurged size, plus how often the
five most recent local operations fell outside the undo window during a
workload with periodic heartbeats.

    python scripts/gc_storage.py --seeds 5 --ks 0 5 20 50
"""

import argparse
from collections import Counter

from xmlcrdt.simulator import (
    DELETE_HEAVY_MIX,
    FuzzConfig,
    fuzz_steps,
    make_simulation,
    settle_and_purge,
)


def run(seed: int, k: int, ops: int, heartbeat_prob: float) -> Counter:
    c = Counter()
    cfg = FuzzConfig(seed=seed, replicas=3, ops=ops, k=k, fifo=True, mix=DELETE_HEAVY_MIX,
                     heartbeat_prob=heartbeat_prob, purge_prob=0.05, trace=False)
    sim = make_simulation(cfg)

    def hook(sim, site, op):
        r = sim.replica(site)
        for o in r.local[-5:]:
            c["checks"] += 1
            c["outside"] += not r.gc.can_undo(o.ts)

    fuzz_steps(sim, cfg, ops, hook=hook)
    _, before, after, _, failures = settle_and_purge(sim)
    c["before"] += sum(before.values())
    c["after"] += sum(after.values())
    c["failures"] += len(failures)
    return c


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--ops", type=int, default=500)
    p.add_argument("--ks", type=int, nargs="+", default=[0, 5, 20, 50])
    p.add_argument("--heartbeat-prob", type=float, default=0.3)
    args = p.parse_args()
    print(f"{'k':>4} {'before':>8} {'after':>8} {'kept':>6} {'recent outside window':>22}")
    bad = 0
    for k in args.ks:
        total = Counter()
        for seed in range(args.seeds):
            total += run(seed, k, args.ops, args.heartbeat_prob)
        bad += total["failures"]
        print(f"{k:>4} {total['before']:>8} {total['after']:>8} "
              f"{total['after'] / max(total['before'], 1):>6.1%} "
              f"{total['outside']:>10}/{total['checks']}")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
