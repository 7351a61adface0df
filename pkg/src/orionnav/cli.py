"""Command-line entry points: run one scenario, run a suite, serve a live
run, or replay a recorded planner transcript."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import library
from .harness import (
    Report,
    RunRow,
    load_scenario,
    run_scenario,
    run_suite,
    save_scenario,
    write_report,
)
from .llm_gateway import EndpointConfig, ReplayCompleter, complete, load_transcript
from .planner import LlmBackend


def _resolve_scenario(ref: str):
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    return library.get_scenario(ref)


def _cmd_run(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    seeds = [args.seed] if args.seed is not None else scenario.seeds
    completer = None
    if args.planner == "llm":
        endpoint = EndpointConfig.from_env(model=args.planner_model)
        if endpoint is None:
            print("error: llm backend needs ORION_LLM_URL", file=sys.stderr)
            return 2
        completer = lambda messages: complete(messages, endpoint)
    any_fail = False
    for seed in seeds:
        metrics = run_scenario(
            scenario,
            seed,
            args.planner,
            out_dir=args.out,
            llm_completer=completer,
            frontier_mode=args.frontier_score,
        )
        for i, m in enumerate(metrics):
            status = "ok" if m.success else f"FAIL({m.failure_category})"
            print(
                f"{scenario.name} seed={seed} task={i} {status} "
                f"steps={m.planner_steps} ticks={m.sim_ticks} path={m.path_length:.1f}m "
                f"coverage={m.coverage:.2f}"
            )
            any_fail |= not m.success
    return 1 if any_fail else 0


def _cmd_suite(args) -> int:
    ref = args.manifest
    if ref in library.SUITES:
        scenarios = library.get_suite(ref)
    else:
        with open(ref, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        scenarios = [_resolve_scenario(entry) for entry in manifest["scenarios"]]
    seeds = [int(s) for s in args.seed] if args.seed else None
    backends = args.planner if args.planner else None
    report = run_suite(scenarios, seeds=seeds, backends=backends, out_dir=args.out)
    if args.out:
        write_report(report, args.out)
    for backend, agg in sorted(report.aggregates().items()):
        print(
            f"{backend}: {agg['successes']}/{agg['runs']} "
            f"(rate {agg['success_rate']:.2f}, mean steps {agg['mean_planner_steps']:.2f})"
        )
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    scenario = _resolve_scenario(args.scenario)
    server = serve(scenario, seed=args.seed, port=args.port)
    print(f"serving {scenario.name} on 127.0.0.1:{server.port} (ctrl-c to stop)")
    try:
        import time

        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        server.stop()
    return 0


def _cmd_replay(args) -> int:
    records = load_transcript(args.transcript)
    meta = records[0] if records and "scenario" in records[0] else None
    calls = records[1:] if meta else records
    if meta is None and args.scenario is None:
        print("error: transcript has no scenario header; pass --scenario", file=sys.stderr)
        return 2
    scenario = _resolve_scenario(args.scenario or meta["scenario"])
    seed = args.seed if args.seed is not None else (meta or {}).get("seed", scenario.seeds[0])
    backend = LlmBackend(ReplayCompleter(calls))
    metrics = run_scenario(scenario, seed, "llm", out_dir=args.out, llm_completer=backend.completer)
    ok = all(m.success for m in metrics)
    print(f"replay {scenario.name} seed={seed}: {'ok' if ok else 'FAILED'}")
    return 0 if ok else 1


def _cmd_export(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    save_scenario(scenario, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="orion", description="Language-driven navigation stack")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("scenario", help="scenario file or bundled scenario name")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--planner", default="oracle", choices=["oracle", "llm", "frontier", "objectmap"])
    p_run.add_argument("--planner-model", default=None)
    p_run.add_argument("--frontier-score", default="intent", choices=["intent", "literal"])
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run a suite manifest or bundled suite")
    p_suite.add_argument("manifest", help="manifest JSON or one of: " + ", ".join(sorted(library.SUITES)))
    p_suite.add_argument("--seed", action="append")
    p_suite.add_argument("--planner", action="append")
    p_suite.add_argument("--out", default=None)
    p_suite.set_defaults(func=_cmd_suite)

    p_serve = sub.add_parser("serve", help="serve a live run over the wire protocol")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.set_defaults(func=_cmd_serve)

    p_replay = sub.add_parser("replay", help="re-run a scenario from a recorded LLM transcript")
    p_replay.add_argument("transcript")
    p_replay.add_argument("--scenario", default=None)
    p_replay.add_argument("--seed", type=int, default=None)
    p_replay.add_argument("--out", default=None)
    p_replay.set_defaults(func=_cmd_replay)

    p_export = sub.add_parser("export", help="write a bundled scenario to a JSON file")
    p_export.add_argument("scenario")
    p_export.add_argument("out")
    p_export.set_defaults(func=_cmd_export)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
