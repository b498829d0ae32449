"""``rmdf`` command-line front end.

Exit codes: 0 success; 1 unreadable or malformed input; 2 validation
violations; 3 inconsistent or not live; 4 WCET feasibility failure; 5 a
simulated token was discarded; 64 usage error.
"""

import argparse
import json
import os
import sys

from .analysis import check_liveness, compute_hyperperiod, compute_tick, repetition_vector
from .arith import parse_rational, rat_json, rat_str
from .gantt import export_gantt
from .graph import validate_graph
from .scenario import read_scenario
from .sim import parse_trace, simulate
from .specio import ParseError, model_path, read_spec
from .timing import check_feasibility, table_csv, timing_table

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_INVALID, EXIT_NOT_LIVE, EXIT_INFEASIBLE, EXIT_DISCARD = 0, 1, 2, 3, 4, 5
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _resolve(path):
    """Use a bundled file when ``path`` does not exist but names one."""
    if os.path.exists(path):
        return path
    bundled = model_path(os.path.basename(path))
    return bundled if os.path.exists(bundled) else path


def _load(path, inits=()):
    g = read_spec(_resolve(path))
    for item in inits:
        cid, _, value = item.partition("=")
        try:
            g = g.with_channel(cid, init=parse_rational(value))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"--init {item}: {exc}") from None
    return g


def _emit(data, fmt, human, out=None):
    out = out or sys.stdout
    if fmt == "json":
        json.dump({"schema": SCHEMA_VERSION, **data}, out, indent=2)
        out.write("\n")
    else:
        out.write(human if human.endswith("\n") else human + "\n")


def cmd_validate(args):
    g = _load(args.spec)
    report = validate_graph(g)
    _emit({"ok": report.ok,
           "violations": [{"code": v.code, "subject": v.subject, "message": v.message}
                          for v in report.violations]},
          args.format, str(report))
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_analyze(args):
    g = _load(args.spec, args.init)
    report = validate_graph(g)
    if not report.ok:
        _emit({"ok": False, "violations": [v.code for v in report.violations]},
              args.format, str(report))
        return EXIT_INVALID
    tick = compute_tick(g) if g.timed_actors else None
    hp = compute_hyperperiod(g)
    data = {"tick": rat_json(tick), "consistent": hp.consistent}
    lines = [f"tick: {rat_str(tick)} ms" if tick is not None else "tick: none (no timed actors)"]
    if not hp.consistent:
        data["inconsistency"] = str(hp)
        lines.append(f"inconsistent: {hp}")
        _emit(data, args.format, "\n".join(lines))
        return EXIT_NOT_LIVE
    data["hyperperiod"] = rat_json(hp.length)
    data["jobs"] = dict(hp.jobs.items())
    lines.append(f"hyperperiod: {rat_str(hp.length)} ms")
    lines.append("jobs per hyperperiod: " + ", ".join(f"{a}={r}" for a, r in hp.jobs.items()))
    for mode in g.mode_table.names:
        rv = repetition_vector(g, mode)
        if rv.consistent:
            data.setdefault("repetition_vectors", {})[mode] = dict(rv.items())
    live = check_liveness(g, args.modes if args.modes else "all-modes")
    data["live"] = live.live
    if live.live:
        lines.append("live: yes (channel levels restored after one hyperperiod)")
    else:
        d = live.deadlock
        data["deadlock"] = {"tick": d.tick, "time": rat_json(d.time), "actor": d.actor,
                            "job": d.job, "channel": d.channel, "deficit": rat_json(d.deficit),
                            "modes": list(d.modes) if d.modes else None}
        lines.append(str(d))
    _emit(data, args.format, "\n".join(lines))
    return EXIT_OK if live.live else EXIT_NOT_LIVE


def cmd_timing(args):
    g = _load(args.spec)
    rows = timing_table(g, args.jobs if args.jobs else "hyperperiod")
    if args.format == "csv":
        sys.stdout.write(table_csv(rows))
    elif args.format == "json":
        _emit({"jobs": [r.record() for r in rows]}, "json", "")
    else:
        for r in rows:
            dl = "-" if r.deadline is None else rat_str(r.deadline)
            win = "-" if r.window is None else rat_str(r.window)
            flag = "  INFEASIBLE" if r.infeasible else ""
            print(f"{r.actor} #{r.n}: release {rat_str(r.release)}  deadline {dl}  "
                  f"window {win}{flag}")
    return EXIT_OK


def cmd_feasibility(args):
    g = _load(args.spec)
    report = check_feasibility(g)
    _emit(report.record(), args.format, str(report))
    return EXIT_OK if report.passed else EXIT_INFEASIBLE


def cmd_simulate(args):
    g = _load(args.spec)
    cfg = read_scenario(_resolve(args.scenario))
    trace = simulate(g, cfg)
    body = trace.to_json() + "\n" if args.format == "json" else trace.to_text()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
    for d in trace.discards:
        print(f"discard: {d.actor} job {d.job} got tag {d.got} after {d.after} "
              f"(expected {d.expected}) at {rat_str(d.time)} ms", file=sys.stderr)
    return EXIT_DISCARD if trace.discards else EXIT_OK


def cmd_gantt(args):
    with open(args.trace, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        raise UsageError("gantt reads the text trace format (simulate --format text)")
    trace = parse_trace(text)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(export_gantt(trace, "svg"))
    if args.text or not args.svg:
        sys.stdout.write(export_gantt(trace, "text"))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="rmdf", description="Analyse and simulate RMDF dataflow graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(sp, choices=("human", "json"), default="human"):
        sp.add_argument("--format", choices=choices, default=default)

    sp = sub.add_parser("validate", help="check well-formedness")
    sp.add_argument("spec")
    fmt(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("analyze", help="tick, hyperperiod, consistency and liveness")
    sp.add_argument("spec")
    sp.add_argument("--init", action="append", default=[], metavar="CHANNEL=RATIONAL",
                    help="override a channel's initial tokens")
    sp.add_argument("--modes", nargs="+", metavar="MODE",
                    help="mode sequence for the liveness run (default: all modes)")
    fmt(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("timing", help="per-job release/deadline table")
    sp.add_argument("spec")
    horizon = sp.add_mutually_exclusive_group()
    horizon.add_argument("--jobs", type=int, metavar="N", help="first N jobs of every actor")
    horizon.add_argument("--hyperperiod", action="store_true", help="one hyperperiod (default)")
    fmt(sp, ("human", "csv", "json"), "csv")
    sp.set_defaults(func=cmd_timing)

    sp = sub.add_parser("feasibility", help="necessary WCET feasibility test")
    sp.add_argument("spec")
    fmt(sp)
    sp.set_defaults(func=cmd_feasibility)

    sp = sub.add_parser("simulate", help="run a scenario and record a trace")
    sp.add_argument("spec")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--trace", metavar="OUT", help="write the trace here instead of stdout")
    fmt(sp, ("text", "json"), "text")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gantt", help="render a text trace")
    sp.add_argument("--trace", required=True, metavar="IN")
    sp.add_argument("--svg", metavar="OUT")
    sp.add_argument("--text", action="store_true", help="also print the text chart")
    sp.set_defaults(func=cmd_gantt)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
