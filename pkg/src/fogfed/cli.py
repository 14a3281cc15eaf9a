"""Command-line entry point: ``fogfed run | preset | verify-trace``.

Log verbosity comes from ``FOGFED_LOG`` (a standard logging level name,
default ``WARNING``). Exit status is 0 only when the scenario finished within
its tick budget and the config was valid.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .group import REFERENCE_BACKEND
from .scenario import PRESETS, ConfigError, parse_config, preset_config, run_scenario, verify_trace
from .simnet import EventTrace

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_CONFIG = 2

U64_MAX = 2**64 - 1


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogfed", description="Fog federation scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=_u64, help="overrides the config seed")
    run.add_argument("--out", required=True, type=Path)

    preset = sub.add_parser("preset", help="run a built-in scenario")
    preset.add_argument("name", choices=sorted(PRESETS))
    preset.add_argument("--seed", type=_u64, required=True)
    preset.add_argument("--out", type=Path, help="defaults to ./out/<name>")

    verify = sub.add_parser("verify-trace", help="recount report metrics from a trace")
    verify.add_argument("trace", type=Path)
    verify.add_argument("--report", type=Path, help="defaults to report.json next to the trace")
    return parser


def _execute(raw: dict, seed, out: Path) -> int:
    try:
        config = parse_config(raw, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_scenario(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(result.report_json())
    (out / "trace.log").write_text(result.trace_text())
    report = result.report
    print(f"backend: {REFERENCE_BACKEND} (NOT cryptographically secure)")
    print(f"scenario {report['scenario']} seed={report['seed']} final_tick={report['final_tick']}")
    print(f"csp requests={report['csp_request_count']} fog-fog messages={report['fog_fog_message_count']} "
          f"cache hits={report['cache_hit_count']}")
    for r in report["retrievals"]:
        print(f"retrieval {r['round']} by {r['requester']} of {r['file']}: {r['status']} via {r['path'] or '-'} "
              f"latency={r['latency']}")
    for d in report["rogue_detections"]:
        print(f"rogue {d['fn_id']} at tick {d['tick']}: {d['cause']}")
    for w in report["warnings"]:
        print(f"warning: {w}")
    print(f"wrote {out / 'report.json'} and {out / 'trace.log'}")
    if not report["completed"]:
        print("tick budget exhausted before the scenario finished", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def _verify(trace_path: Path, report_path) -> int:
    trace = EventTrace.load(trace_path.read_text())
    report_path = report_path or trace_path.with_name("report.json")
    report = json.loads(report_path.read_text()) if report_path.exists() else None
    if report is None:
        print(f"no report at {report_path}; checking ordering only")
    failed = 0
    for name, ok, detail in verify_trace(trace, report):
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name} ({detail})")
    return EXIT_OK if failed == 0 else EXIT_INCOMPLETE


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("FOGFED_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {args.config}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return _execute(raw, args.seed, args.out)
    if args.command == "preset":
        return _execute(preset_config(args.name), args.seed, args.out or Path("out") / args.name)
    return _verify(args.trace, args.report)


if __name__ == "__main__":
    sys.exit(main())
