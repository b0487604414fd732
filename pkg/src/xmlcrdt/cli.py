"""Command-line entry point.

Exit codes: 0 success, 1 assertion or convergence failure, 2 usage or parse
error.  Standard output carries only the requested artifact; diagnostics go
to standard error.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional, Sequence

from .model import CrdtError
from .scenario import ScenarioParseError, load_scenario, run_scenario, simulation_for
from .simulator import FuzzConfig, run_figure1, run_fuzz, run_gc_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioParseError as exc:
        _err(f"{path}: {exc}")
    except OSError as exc:
        _err(f"{path}: {exc.strerror}")
    return None


def cmd_replay(args) -> int:
    scn = _load(args.path)
    if scn is None:
        return EXIT_USAGE
    result = run_scenario(scn, out=sys.stdout)
    sim = result.sim
    if result.error:
        _err(result.error)
    if args.output == "xml":
        for s in sim.sites:
            print(f"[{s}] {sim.render(s).decode()}")
    elif args.output == "trace":
        print("\n".join(sim.trace))
    passed = sum(ok for ok, _ in result.checks)
    print(f"{passed}/{len(result.checks)} assertions passed")
    if not result.ok:
        if args.output != "trace":
            _err("trace:\n  " + "\n  ".join(sim.trace))
        return EXIT_FAIL
    return EXIT_OK


def cmd_render(args) -> int:
    scn = _load(args.path)
    if scn is None:
        return EXIT_USAGE
    sim = simulation_for(scn)
    if args.site not in sim.sites:
        _err(f"unknown site {args.site}; scenario has sites {list(sim.sites)}")
        return EXIT_USAGE
    result = run_scenario(scn, sim=sim)
    if result.error:
        _err(result.error)
        return EXIT_FAIL
    sys.stdout.write(sim.render(args.site).decode("utf-8") + "\n")
    return EXIT_OK


def _fuzz_config(args) -> FuzzConfig:
    return FuzzConfig(seed=args.seed, replicas=args.replicas, ops=args.ops,
                      mode=args.mode, k=args.k, fifo=args.fifo,
                      trace=args.output == "trace")


def cmd_fuzz(args) -> int:
    config = _fuzz_config(args)
    start = time.perf_counter()
    try:
        report = run_fuzz(config)
    except CrdtError as exc:
        _err(f"engine error: {exc}")
        report = None
    _err(f"wall time {time.perf_counter() - start:.3f}s")
    if report is None or not report.converged:
        if report is not None:
            print(report.summary())
            for s, xml in sorted(report.renders.items()):
                print(f"[{s}] {xml.decode()}")
        _err("reproduce with: xmlcrdt fuzz " + " ".join(
            f"--{k} {v}" for k, v in (("seed", args.seed), ("replicas", args.replicas),
                                      ("ops", args.ops), ("mode", args.mode), ("k", args.k)))
             + (" --fifo" if args.fifo else "") + " --output trace")
        return EXIT_FAIL
    print(report.summary())
    if args.output == "xml":
        print(report.renders[1].decode())
    elif args.output == "trace":
        print("\n".join(report.trace))
    return EXIT_OK


def cmd_figure1(args) -> int:
    report = run_figure1()
    for site in sorted(report.effects):
        effects = ", ".join(f"@add {a} @del {d}" for a, d in sorted(report.effects[site]))
        print(f"replica {site}: {effects}")
    print(f"interleavings checked: {report.interleavings}")
    print("render: " + " | ".join(x.decode() for x in sorted(report.renders)))
    if args.output == "trace":
        print("\n".join(report.canonical_trace))
    for f in report.failures:
        _err(f)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_gc(args) -> int:
    prelude = None
    if args.path is not None:
        scn = _load(args.path)
        if scn is None:
            return EXIT_USAGE
        if not scn.fifo:
            _err("gc scenarios need fifo yes")
            return EXIT_USAGE
        config = FuzzConfig(seed=scn.seed, replicas=scn.replicas, mode=scn.mode, k=scn.k,
                            fifo=True, ops=0)

        def prelude(sim, scn=scn):
            result = run_scenario(scn, sim=sim)
            if not result.ok:
                raise CrdtError(result.error or "scenario assertion failed")
    else:
        config = FuzzConfig(seed=args.seed, replicas=args.replicas, ops=args.ops,
                            mode=args.mode, k=args.k, fifo=True, mix=None,
                            trace=False)
        if args.mode == "undo":
            from .simulator import DELETE_HEAVY_MIX
            config.mix = DELETE_HEAVY_MIX
    try:
        report = run_gc_scenario(config, further_ops=args.further, prelude=prelude)
    except CrdtError as exc:
        _err(f"error: {exc}")
        return EXIT_FAIL
    for s in sorted(report.storage_before):
        st = report.purged[s]
        print(f"replica {s}: M={report.M[s]} storage {report.storage_before[s]} -> "
              f"{report.storage_after[s]} (edges -{st.edges}, values -{st.values})")
    print(f"renders unchanged by purge: {report.renders_unchanged}")
    print(f"converged after further edits: {report.converged_after}")
    for f in report.failures:
        _err(f)
    return EXIT_OK if report.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xmlcrdt", description="Replicated XML editing with undo.")
    sub = p.add_subparsers(dest="command", required=True)

    def output(sp, default="stats"):
        sp.add_argument("--output", choices=("xml", "stats", "trace"), default=default)

    sp = sub.add_parser("replay", help="run a scenario file and check its assertions")
    sp.add_argument("path")
    output(sp)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("render", help="print a replica's canonical XML after a scenario")
    sp.add_argument("path")
    sp.add_argument("--site", type=int, default=1)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("fuzz", help="random edits and deliveries, then check convergence")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicas", type=int, default=4)
    sp.add_argument("--ops", type=int, default=200)
    sp.add_argument("--mode", choices=("undo", "lww"), default="undo")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--fifo", action="store_true", help="FIFO channels (enables gc bookkeeping)")
    output(sp)
    sp.set_defaults(func=cmd_fuzz)

    sp = sub.add_parser("figure1", help="concurrent undo of add and delete, every interleaving")
    output(sp)
    sp.set_defaults(func=cmd_figure1)

    sp = sub.add_parser("gc", help="workload, heartbeats, purge; check transparency")
    sp.add_argument("path", nargs="?")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicas", type=int, default=3)
    sp.add_argument("--ops", type=int, default=500)
    sp.add_argument("--mode", choices=("undo", "lww"), default="undo")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--further", type=int, default=100, help="edits after the purge")
    output(sp)
    sp.set_defaults(func=cmd_gc)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "replicas", 1) < 1 or getattr(args, "ops", 0) < 0 or getattr(args, "k", 0) < 0:
        _err("replicas must be >= 1, ops and k >= 0")
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
