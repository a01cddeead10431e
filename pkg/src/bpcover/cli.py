"""``bpcover`` command line.

Exit status: 0 success, 1 findings (failures, deadlocks, missing coverage),
2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, dsl, models, telephony
from .coverage import (BudgetExceeded, CoverageSpec, TestSuite, exact_min_suite, feasible_targets,
                       greedy_suite, permutation_cover, permutation_targets, report_json,
                       suite_covers)
from .engine import UniformRandom
from .explorer import ExplorationError, Lts, detect_deadlocks, explore, to_dot
from .harness import TestReport, online_monitor, run_suite
from .threads import BProgram

BUILTIN = {
    "alternation": models.alternation,
    "mutual-block": models.mutual_block,
    "elevator": models.elevator,
    "philosophers": models.philosophers,
    "telephony-online": telephony.online_program,
    "telephony-monitor": telephony.monitor_program,
    "telephony-pipeline": telephony.pipeline_program,
}
HANDLERS = {"telephony": telephony.handlers, "none": dict}
SUTS = {"telephony": (telephony.TelephonyAdapter, telephony.oracle)}


class InputError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("BPCOVER_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"BPCOVER_SEED must be an integer, got {raw!r}") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _emit(text: str, path: str | None) -> None:
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def _parse_doc(path: str) -> dsl.ScenarioDoc:
    try:
        return dsl.parse(_read(path))
    except dsl.ParseError as exc:
        raise InputError(f"{path}:{exc}") from None


def load_program(model: str, handlers: str = "telephony") -> BProgram:
    """A ``.bps`` path, or ``builtin:NAME`` for the bundled Python models."""
    if model.startswith("builtin:"):
        name = model[len("builtin:"):]
        if name not in BUILTIN:
            raise InputError(f"unknown builtin model {name!r}; choose from {', '.join(BUILTIN)}")
        return BUILTIN[name]()
    doc = _parse_doc(model)
    try:
        return BProgram(dsl.compile(doc, HANDLERS[handlers]()))
    except dsl.CompileError as exc:
        raise InputError(f"{model}: {exc}") from None


def _load_lts(path: str) -> Lts:
    try:
        return Lts.from_json(json.loads(_read(path)))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a valid FSM document ({exc})") from None


def _load_suite(path: str) -> TestSuite:
    try:
        return TestSuite.from_json(json.loads(_read(path)))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a valid suite document ({exc})") from None


def _spec(args, lts: Lts) -> CoverageSpec:
    try:
        return CoverageSpec(args.t, distinct=args.distinct).resolve(lts)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- subcommands ---------------------------------------------------------------

def cmd_check(args) -> int:
    doc = _parse_doc(args.model)
    n = len(doc.scenarios)
    print(f"{args.model}: ok ({len(doc.features)} feature(s), {n} scenario(s))")
    return 0


def cmd_explore(args) -> int:
    program = load_program(args.model, args.handlers)
    try:
        lts = explore(program, args.depth, accept_quiescent=args.accept_quiescent)
    except ExplorationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.dot:
        _write(args.dot, to_dot(lts))
    if args.fsm:
        _write(args.fsm, lts.dumps())
    dead = sorted(detect_deadlocks(lts))
    print(f"states={lts.n_states} transitions={len(lts.transitions)} "
          f"accepting={len(lts.accepting)} truncated={len(lts.truncated)} deadlocks={len(dead)}")
    for s in dead:
        print(f"deadlock: state {s}")
    return 1 if dead else 0


def cmd_targets(args) -> int:
    lts = _load_lts(args.fsm)
    targets = feasible_targets(lts, _spec(args, lts))
    for target in targets:
        print(" ".join(target))
    print(f"{len(targets)} feasible target(s)", file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    lts = _load_lts(args.fsm)
    spec = _spec(args, lts)
    try:
        if args.exact:
            suite = exact_min_suite(lts, spec, budget=args.budget)
            if suite is None:
                print(f"exact search exhausted its budget of {args.budget}", file=sys.stderr)
                return 1
        else:
            suite = greedy_suite(lts, spec)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(json.dumps(suite.to_json(), indent=2, ensure_ascii=False) + "\n", args.output)
    print(f"{suite.size} word(s), total length {suite.total_length}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    suite = _load_suite(args.suite)
    lts = _load_lts(args.fsm)
    spec = _spec(args, lts)
    rejected = suite.check(lts)
    targets = feasible_targets(lts, spec)
    doc = report_json(spec.t, targets, suite)
    doc["rejected_words"] = rejected
    print(json.dumps(doc, indent=2, ensure_ascii=False))
    for i in rejected:
        print(f"word {i} is not accepted by {args.fsm}", file=sys.stderr)
    if doc["missing"]:
        print("missing: " + "; ".join(" ".join(m) for m in doc["missing"]), file=sys.stderr)
    return 1 if rejected or doc["missing"] else 0


def _sut(args):
    factory, oracle = SUTS[args.sut]
    try:
        return factory(args.fault), oracle
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_run(args) -> int:
    suite = _load_suite(args.suite)
    seed = args.seed if args.seed is not None else _default_seed()
    coverage = None
    if args.fsm:
        lts = _load_lts(args.fsm)
        rejected = suite.check(lts)
        if rejected:
            print(f"refusing to run: word(s) {rejected} not accepted by {args.fsm}", file=sys.stderr)
            return 1
        if args.t:
            spec = _spec(args, lts)
            coverage = report_json(spec.t, feasible_targets(lts, spec), suite)
    adapter, oracle = _sut(args)
    report = run_suite(suite, adapter, oracle, coverage=coverage, seed=seed)
    report.metadata.update(sut=args.sut, fault=args.fault)
    return _finish(report, args.output)


def cmd_monitor(args) -> int:
    program = load_program(args.model, args.handlers)
    seed = args.seed if args.seed is not None else _default_seed()
    adapter, oracle = _sut(args)
    report = online_monitor(program, adapter, oracle, UniformRandom(seed), args.max_events,
                            stop_on_failure=not args.keep_going, seed=seed)
    report.metadata.update(sut=args.sut, fault=args.fault, model=args.model)
    return _finish(report, args.output)


def _finish(report: TestReport, output: str | None) -> int:
    if output:
        report.save(output)
    summary = report.to_json()["summary"]
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    for v in report.failures:
        where = f"word {v.word} " if v.word is not None else ""
        print(f"{v.status}: {where}step {v.step} {v.event}: expected {v.expected}, "
              f"observed {v.observed} {v.detail}".rstrip())
    return 0 if report.ok else 1


def cmd_ponder(args) -> int:
    if args.n > 26:
        letters = [f"e{i}" for i in range(args.n)]
    else:
        letters = [chr(ord("a") + i) for i in range(args.n)]
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        suite = permutation_cover(letters, args.t, seed=seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report = suite_covers(suite, permutation_targets(letters, args.t))
    _emit(json.dumps(suite.to_json(), indent=2) + "\n", args.output)
    print(f"{suite.size} permutation(s) cover {len(report.covered)} of "
          f"{len(report.covered) + len(report.missing)} ordered {args.t}-tuples", file=sys.stderr)
    return 0 if report.complete else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bpcover", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_t(sp):
        sp.add_argument("-t", type=int, required=True, help="coverage strength")
        sp.add_argument("--distinct", action="store_true",
                        help="only targets with pairwise distinct event names")

    def add_model(sp):
        sp.add_argument("model", help="model.bps, or builtin:NAME")
        sp.add_argument("--handlers", choices=sorted(HANDLERS), default="telephony")

    sp = sub.add_parser("check", help="validate a .bps document")
    sp.add_argument("model")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("explore", help="expand a model into an LTS")
    add_model(sp)
    sp.add_argument("--depth", type=int, default=50)
    sp.add_argument("--dot")
    sp.add_argument("--fsm")
    sp.add_argument("--accept-quiescent", action="store_true")
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("targets", help="list feasible t-way targets")
    sp.add_argument("fsm")
    add_t(sp)
    sp.set_defaults(func=cmd_targets)

    sp = sub.add_parser("generate", help="generate a covering suite")
    sp.add_argument("fsm")
    add_t(sp)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--budget", type=int, default=2_000_000, help="search cap for --exact")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("verify", help="check a suite against an LTS")
    sp.add_argument("suite")
    sp.add_argument("fsm")
    add_t(sp)
    sp.set_defaults(func=cmd_verify)

    for name, helptext in (("run", "execute a suite against a SUT"),
                           ("monitor", "run a model live against a SUT")):
        sp = sub.add_parser(name, help=helptext)
        if name == "run":
            sp.add_argument("suite")
            sp.add_argument("--fsm", help="refuse words this LTS does not accept")
            sp.add_argument("-t", type=int, help="with --fsm, add a coverage ledger")
            sp.add_argument("--distinct", action="store_true")
            sp.set_defaults(func=cmd_run)
        else:
            add_model(sp)
            sp.add_argument("--max-events", type=int, default=1000)
            sp.add_argument("--keep-going", action="store_true",
                            help="do not stop at the first failure")
            sp.set_defaults(func=cmd_monitor)
        sp.add_argument("--sut", choices=sorted(SUTS), required=True)
        sp.add_argument("--fault", choices=telephony.FAULTS, default="none")
        sp.add_argument("--seed", type=int)
        sp.add_argument("-o", "--output", help="write report.json here")

    sp = sub.add_parser("ponder", help="permutations covering every ordered t-tuple")
    sp.add_argument("-n", type=int, required=True)
    sp.add_argument("-t", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_ponder)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
