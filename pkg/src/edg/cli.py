"""Command line front end: run scripts, verify traces, export transcripts,
and serve the HTTP gateway."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scripting import (
    LocalDriver,
    RejectedAt,
    ScriptError,
    dump_trace,
    load_expectation,
    load_script,
    load_trace,
    render_transcript,
    run_script,
    verify_trace,
)
from .session import SessionError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="submit a scripted dialogue and emit its trace")
    run.add_argument("--script", required=True, help="script JSON file")
    run.add_argument("--config", help="JSON file of config overrides")
    run.add_argument("--remote", help="base URL of a served instance (default: in-process)")
    run.add_argument("--trace-out", help="write the trace here instead of stdout")

    verify = sub.add_parser("verify", help="check a trace against an expectation file")
    verify.add_argument("--trace", required=True)
    verify.add_argument("--expect", required=True)

    transcript = sub.add_parser("transcript", help="render a trace as readable text")
    transcript.add_argument("--trace", required=True)
    transcript.add_argument("--style", choices=("plain", "markdown"), default="plain")

    serve = sub.add_parser("serve", help="start the HTTP gateway")
    serve.add_argument("--port", type=int, default=8440)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--log-dir", default="session-logs")

    return parser


def _cmd_run(args) -> int:
    script = load_script(args.script)
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"SCRIPT_PARSE: cannot read config overrides: {exc}", file=sys.stderr)
            return 2
        script.config.update(overrides)

    driver = None
    if args.remote:
        from .remote import RemoteStore

        driver = RemoteStore(args.remote)
    try:
        trace = run_script(script, driver)
    except RejectedAt as exc:
        print(f"REJECTED_AT({exc.label})", file=sys.stderr)
        for violation in exc.violations:
            index = violation.get("move_index")
            where = f" [move {index}]" if index is not None else ""
            print(f"  {violation['code']}{where}: {violation['message']}", file=sys.stderr)
        return 2
    finally:
        if driver is not None:
            driver.close()

    text = dump_trace(trace)
    if args.trace_out:
        Path(args.trace_out).write_text(text, encoding="utf-8")
        turns = len(trace["turns"])
        closed = "closed" if trace["final"]["closed"] else trace["final"]["stage"]
        print(f"accepted {turns} turns, {closed}; trace -> {args.trace_out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args) -> int:
    trace = load_trace(args.trace)
    expect = load_expectation(args.expect)
    report = verify_trace(trace, expect)
    for line in report.lines:
        print(line)
    if report.ok:
        noted = f" with deviations noted: {', '.join(report.noted)}" if report.noted else ""
        print(f"PASS{noted}")
        return 0
    print("FAIL")
    return 1


def _cmd_transcript(args) -> int:
    trace = load_trace(args.trace)
    sys.stdout.write(render_transcript(trace, args.style))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    from .session import SessionStore

    app = create_app(SessionStore(args.log_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "transcript":
            return _cmd_transcript(args)
        return _cmd_serve(args)
    except ScriptError as exc:
        print(f"SCRIPT_PARSE: {exc}", file=sys.stderr)
        return 2
    except SessionError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
