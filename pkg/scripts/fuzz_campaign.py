"""Run many fuzz seeds and tabulate convergence, size and timing.

    python scripts/fuzz_campaign.py --seeds 100 --mode undo
"""

import argparse
import statistics
import time

from xmlcrdt.simulator import FuzzConfig, run_fuzz


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--replicas", type=int, default=4)
    p.add_argument("--ops", type=int, default=200)
    p.add_argument("--mode", choices=("undo", "lww"), default="undo")
    p.add_argument("--fifo", action="store_true")
    args = p.parse_args()

    start = time.perf_counter()
    reports = [
        run_fuzz(FuzzConfig(seed=s, replicas=args.replicas, ops=args.ops, mode=args.mode,
                            fifo=args.fifo, trace=False))
        for s in range(args.seeds)
    ]
    elapsed = time.perf_counter() - start
    diverged = [r.seed for r in reports if not r.converged]
    print(f"converged {args.seeds - len(diverged)}/{args.seeds} in {elapsed:.1f}s")
    for field in ("operations", "deliveries", "edges", "values", "visible_nodes"):
        xs = [getattr(r, field) for r in reports]
        print(f"  {field:<14} mean {statistics.mean(xs):8.1f}  max {max(xs)}")
    print(f"  clock violations {sum(r.clock_violations for r in reports)}")
    if diverged:
        print(f"diverged seeds: {diverged}")
    return 1 if diverged else 0


if __name__ == "__main__":
    raise SystemExit(main())
