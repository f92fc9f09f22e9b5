"""Command-line interface: headless runs, the API server, population export.

Exit codes: 0 success, 1 data/scenario error (one-line diagnostic on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import TwinnerError
from .population import MarginalSpec, build_households, sample_adults, write_population_csv
from .scenario import ScenarioConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinner",
        description="Agent-based social digital twin: run scenarios, serve the API, export populations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headless and write results")
    run.add_argument("--scenario", required=True, help="scenario JSON file")
    run.add_argument("--days", type=int, help="override the scenario's day count")
    run.add_argument("--seed", type=int, help="override the scenario's seed")
    run.add_argument("--out", required=True, help="results JSON output path")
    run.add_argument("--events", help="event CSV output path (default: <out>.events.csv)")
    run.add_argument("--llm", choices=["stub", "http"], default="stub")

    serve = sub.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--llm", choices=["stub", "http"], default="stub")
    serve.add_argument("--token", help="require this bearer token on every endpoint")
    serve.add_argument("--scenario", help="scenario JSON to load at startup")
    serve.add_argument("--ui", help="serve a built web UI from this directory")

    synth = sub.add_parser("synth", help="generate a synthetic population CSV")
    synth.add_argument("--marginals", required=True, help="marginals JSON file")
    synth.add_argument("--size", type=int, required=True, help="number of adults")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True, help="population CSV output path")
    synth.add_argument(
        "--households",
        action="store_true",
        help="also group adults into households and generate their children",
    )
    synth.add_argument(
        "--buildings", help="buildings file; allocates households (implies --households)"
    )

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ScenarioConfig.from_json_file(args.scenario)
    if args.days is not None:
        config.days = args.days
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    result = run_experiment(config)
    out = Path(args.out)
    events = Path(args.events) if args.events else out.with_suffix(".events.csv")
    result.write_results_json(out)
    result.write_events_csv(events)
    report = result.metrics
    print(
        f"day {report.day}: {report.dropouts_total}/{report.students_total} dropouts "
        f"(rate {report.dropout_rate:.3f}); results in {out}, events in {events}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .interlocutor import make_backend
    from .scenario import ScenarioConfig
    from .service import ServiceState, create_app

    state = ServiceState(backend=make_backend(args.llm), api_token=args.token)
    if args.scenario:
        counts = state.load(ScenarioConfig.from_json_file(args.scenario))
        print(f"loaded scenario: {counts}")
    app = create_app(state, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    marginals = MarginalSpec.from_json_file(args.marginals)
    adults = sample_adults(marginals, args.size, args.seed)
    households: list = []
    children: list = []
    allocation: dict[int, int] = {}
    if adults and (args.households or args.buildings):
        households, children = build_households(adults, marginals, args.seed + 1)
        if args.buildings:
            from .ingest import load_buildings_any
            from .population import allocate_households

            allocation = allocate_households(
                households, load_buildings_any(args.buildings), args.seed + 2
            )
    write_population_csv(args.out, adults + children, households, allocation)
    print(f"wrote {len(adults) + len(children)} persons to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "synth":
            return _cmd_synth(args)
    except (TwinnerError, OSError, json.JSONDecodeError) as exc:
        print(f"twinner {args.command}: {exc}", file=sys.stderr)
        return 1
    return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
