"""``pebc`` command line: check, simulate, smc, exact and export.

Exit codes: 0 success, 1 model diagnostics, 2 usage or I/O error,
3 runtime evaluation error, 4 resource bound hit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pebc import values as V
from pebc.checker import check_model, with_constants
from pebc.diagnostics import ModelError, NoAbsorption, ResourceBound
from pebc.parser import load_model
from pebc.queries import describe, make_query

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3
EXIT_RESOURCE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _const(text: str):
    name, sep, value = text.partition("=")
    if not sep or not name.strip() or not value.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), value.strip()


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    from pebc.smc import default_jobs

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="model file (.peb)")
    common.add_argument("--json", action="store_true", help="structured JSON output, errors included")
    common.add_argument(
        "--const", action="append", type=_const, default=[], metavar="NAME=VALUE", help="override a context constant"
    )

    query = argparse.ArgumentParser(add_help=False)
    query.add_argument("--query", required=True, metavar="NAME|EXPR", help="property name or expression")
    query.add_argument("--reach", type=int, metavar="K", help="probability of reaching the predicate within K steps")

    p = _Parser(prog="pebc", description="Probabilistic Event-B simulation, estimation and exact analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("check", parents=[common], help="parse and check a model")

    s = sub.add_parser("simulate", parents=[common], help="simulate one run")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--max-steps", type=int, default=100_000)
    s.add_argument("--stop", metavar="EXPR", help="stop once this predicate holds")
    s.add_argument("--trace", nargs="?", const="-", metavar="PATH", help="write the trace as JSON lines (- for stdout)")

    m = sub.add_parser("smc", parents=[common, query], help="statistical estimate with a confidence interval")
    m.add_argument("--alpha", type=float, default=0.05)
    m.add_argument("--delta", type=float, default=0.01)
    m.add_argument("--seed", type=_seed, default=0)
    m.add_argument("--max-runs", type=int, default=100_000)
    m.add_argument("--batch", type=int, default=500)
    m.add_argument("--max-steps", type=int, default=1_000_000)
    m.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes (default $PEBC_JOBS or 1)")
    m.add_argument("--samples", metavar="CSV", help="write per-run samples")
    m.add_argument("--histogram", metavar="PATH", help="write a two-column histogram of the samples")
    m.add_argument("--bins", type=int, default=20)
    m.add_argument("--no-timing", action="store_true", help="report wall_time as 0 for byte-stable output")

    e = sub.add_parser("exact", parents=[common, query], help="exact value on the enumerated chain")
    e.add_argument("--horizon", type=int, metavar="K")
    e.add_argument("--max-states", type=int, default=1_000_000)

    x = sub.add_parser("export", parents=[common], help="write the enumerated chain to files")
    x.add_argument("--format", choices=["tra", "sta", "dot"], default="tra")
    x.add_argument("--output", metavar="PATH", help="output file (default stdout)")
    x.add_argument("--max-states", type=int, default=1_000_000)
    x.add_argument(
        "--abstract-counters", action="store_true", help="fold write-only counters into transition rewards"
    )
    return p


def _load(args):
    path = Path(args.file)
    if not path.is_file():
        raise UsageError(f"{args.file}: no such file")
    model = load_model(path)
    if args.const:
        model = with_constants(model, dict(args.const))
    return check_model(model)


def _need_machine(cm):
    if cm.initial is None:
        raise UsageError(f"{cm.name} has no machine to run")


def cmd_check(args, cm, out):
    res = {
        "model": cm.name,
        "diagnostics": [d.to_json() for d in cm.warnings],
        "variables": list(cm.var_names),
        "events": [ev.name for ev in cm.events],
        "properties": sorted(cm.properties),
    }
    if not args.json:
        for d in cm.warnings:
            print(d, file=sys.stderr)
        print(f"{cm.name}: ok ({len(cm.var_names)} variables, {len(cm.events)} events)", file=out)
    return res


def cmd_simulate(args, cm, out):
    from pebc.simulator import RunConfig, Simulator

    _need_machine(cm)
    try:
        config = RunConfig(seed=args.seed, max_steps=args.max_steps, stop_predicate=args.stop, record=bool(args.trace))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    trace = Simulator(cm).run(config)
    if args.trace == "-":
        out.write(trace.to_jsonl())
    elif args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
    res = trace.summary()
    if not args.json:
        print(f"{trace.reason} after {trace.length} steps (seed {trace.seed}, {trace.algorithm})", file=out)
        print(trace.final.show(), file=out)
    return res


def cmd_smc(args, cm, out):
    from pebc.smc import SmcConfig, estimate, histogram, write_samples_csv

    _need_machine(cm)
    q = make_query(cm, args.query, args.reach)
    try:
        config = SmcConfig(
            alpha=args.alpha,
            delta=args.delta,
            seed=args.seed,
            max_runs=args.max_runs,
            batch=args.batch,
            jobs=args.jobs,
            max_steps=args.max_steps,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    samples: list = []
    est = estimate(cm, q, config, samples_out=samples)
    if args.samples:
        write_samples_csv(args.samples, samples)
    if args.histogram:
        Path(args.histogram).write_text(histogram(samples, args.bins))
    res = est.to_json(timing=not args.no_timing)
    if not args.json:
        # estimates are always reported as JSON
        print(json.dumps(res, indent=2), file=out)
    return res


def cmd_exact(args, cm, out):
    from pebc.exact import analyse, show_decimal

    _need_machine(cm)
    q = make_query(cm, args.query, args.reach)
    value, dtmc = analyse(cm, q, args.horizon, args.max_states)
    res = {
        "query": describe(q),
        "value": str(value),
        "decimal": show_decimal(value),
        "states": dtmc.n_states,
        "transitions": dtmc.n_transitions,
        "horizon": args.horizon,
    }
    if not args.json:
        print(f"{res['query']} = {value} ~ {res['decimal']}", file=out)
        print(f"({dtmc.n_states} states, {dtmc.n_transitions} transitions)", file=out)
    return res


def cmd_export(args, cm, out):
    from pebc.exact import build_dtmc, export_dot, export_sta, export_tra

    _need_machine(cm)
    dtmc = build_dtmc(cm, args.max_states, None if args.abstract_counters else ())
    text = {"tra": export_tra, "sta": export_sta, "dot": export_dot}[args.format](dtmc)
    if args.output:
        Path(args.output).write_text(text)
    elif not args.json:
        out.write(text)
    return {
        "format": args.format,
        "output": args.output,
        "states": dtmc.n_states,
        "transitions": dtmc.n_transitions,
        "counters": list(dtmc.counters),
    }


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "smc": cmd_smc,
    "exact": cmd_exact,
    "export": cmd_export,
}


def _error(code, kind, message, diagnostics=()):
    return code, {"kind": kind, "message": message}, [d.to_json() for d in diagnostics]


def run(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(argv)
    want_json = "--json" in argv
    command = next((a for a in argv if a in COMMANDS), None)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _report(out, err, want_json, command, *_error(EXIT_USAGE, "UsageError", str(exc)))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cm = _load(args)
        res = COMMANDS[args.command](args, cm, out)
    except UsageError as exc:
        failure = _error(EXIT_USAGE, "UsageError", str(exc))
    except OSError as exc:
        failure = _error(EXIT_USAGE, "IOError", str(exc))
    except ModelError as exc:
        failure = _error(EXIT_DIAGNOSTICS, type(exc).__name__, "model is not well-formed", exc.diagnostics)
    except NoAbsorption as exc:
        failure = _error(EXIT_DIAGNOSTICS, "NoAbsorption", str(exc))
    except V.EvalError as exc:
        failure = _error(EXIT_RUNTIME, getattr(exc, "kind", type(exc).__name__), str(exc))
    except ResourceBound as exc:
        failure = _error(EXIT_RESOURCE, exc.kind, str(exc))
    else:
        if args.json:
            out.write(json.dumps({"command": args.command, "ok": True, "result": res}, sort_keys=True) + "\n")
        return EXIT_OK
    return _report(out, err, args.json, args.command, *failure)


def _report(out, err, as_json, command, code, error, diagnostics) -> int:
    if as_json:
        doc = {"command": command, "ok": False, "exit_code": code, "error": error, "diagnostics": diagnostics}
        out.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        for d in diagnostics:
            s = d["span"]
            print(f"{s['file']}:{s['line']}:{s['column']}: {d['severity']}: {d['message']}", file=err)
        print(f"pebc: {error['kind']}: {error['message']}", file=err)
    return code


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
