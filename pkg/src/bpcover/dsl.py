"""Scenario language: Feature/Scenario/step text compiled to b-threads.

Grammar (one step per line, steps indented under their scenario)::

    Feature: <name>
      Scenario: <name>
        Given <events> | <phrase>       request
        When <events> | <phrase>        wait
        Then <phrase>                   call a handler
        And ...                         same keyword as the previous step
        Block <events>                  blocked at the next synchronization
        Break upon <events> [then <phrase>]
        Interrupt <events>
        Forever                         (also "Then forever")

``<events>`` is a comma-separated list of ``name`` or ``name(args)``; an
argument is a quoted string, an integer, ``true``/``false``, ``x?``
(bind the value to variable ``x``), ``x`` (the current value of ``x``)
or ``_`` (anything). ``name(*)`` matches any payload. A ``<phrase>`` is
a sequence of words and quoted strings naming a handler: its id is the
phrase with every quoted string replaced by ``{}``, and the strings are
passed as arguments.

Break upon, Interrupt and Forever cover all the steps after them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .events import ANY, Event, EventSet, Pattern
from .threads import TERMINATED, BThreadSpec, SyncStatement


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        text = f"{line}:{column}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


class CompileError(ValueError):
    def __init__(self, message: str, missing: Iterable[str] = ()):
        self.missing = tuple(missing)
        super().__init__(message)


# -- document model ----------------------------------------------------------

@dataclass(frozen=True)
class Arg:
    kind: str  # "lit" | "bind" | "ref" | "any"
    value: Any = None


@dataclass(frozen=True)
class EventPattern:
    name: str
    args: tuple[Arg, ...] | None = ()  # None: any payload


@dataclass(frozen=True)
class Phrase:
    parts: tuple[tuple[str, str], ...]  # ("word", w) | ("str", s)

    @property
    def handler_id(self) -> str:
        return " ".join(v if k == "word" else "{}" for k, v in self.parts)

    @property
    def args(self) -> tuple[str, ...]:
        return tuple(v for k, v in self.parts if k == "str")


@dataclass(frozen=True)
class Step:
    keyword: str  # as written; "and" keeps the inherited meaning in ``kind``
    kind: str
    events: tuple[EventPattern, ...] = ()
    phrase: Phrase | None = None
    handler: Phrase | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class Feature:
    name: str
    scenarios: tuple[Scenario, ...]


@dataclass(frozen=True)
class ScenarioDoc:
    features: tuple[Feature, ...]

    @property
    def scenarios(self) -> list[Scenario]:
        return [s for f in self.features for s in f.scenarios]


KINDS = ("given", "when", "then", "block", "break-upon", "interrupt", "forever")
_KEYWORDS = [("Break upon", "break-upon"), ("Given", "given"), ("When", "when"),
             ("Then", "then"), ("And", "and"), ("Block", "block"),
             ("Interrupt", "interrupt"), ("Forever", "forever")]
_KEYWORD_TEXT = {kind: text for text, kind in _KEYWORDS}
_EXPECTED_STEP = tuple(text for text, _ in _KEYWORDS)

# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r'\s+|(?P<str>"(?:[^"\\\n]|\\.)*")|(?P<punct>[(),?*])|(?P<word>[A-Za-z0-9_\'-]+)')
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT = re.compile(r"-?\d+\Z")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int
    value: Any = None


def _lex(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos] == '"':
                raise ParseError("unterminated string", line, col0 + pos, ['"'])
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos,
                             ["word", "string", "'('", "')'", "','"])
        if m.lastgroup == "str":
            try:
                value = json.loads(m.group())
            except json.JSONDecodeError:
                raise ParseError("bad string escape", line, col0 + pos, ["string"]) from None
            toks.append(_Tok("str", m.group(), col0 + pos, value))
        elif m.lastgroup:
            toks.append(_Tok(m.lastgroup, m.group(), col0 + pos))
        pos = m.end()
    return toks


class _Cursor:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks = toks
        self.i = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, expected) -> ParseError:
        tok = self.peek()
        col = tok.col if tok else self.end_col
        return ParseError(message, self.line, col, expected)

    def is_punct(self, p: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "punct" and tok.text == p


def _parse_arg(cur: _Cursor) -> Arg:
    tok = cur.peek()
    expected = ["string", "integer", "true", "false", "name?", "name", "_"]
    if tok is None or tok.kind == "punct":
        raise cur.fail("expected an argument", expected)
    cur.take()
    if tok.kind == "str":
        return Arg("lit", tok.value)
    text = tok.text
    if _INT.match(text):
        return Arg("lit", int(text))
    if text == "true":
        return Arg("lit", True)
    if text == "false":
        return Arg("lit", False)
    if text == "_":
        return Arg("any")
    if not _IDENT.match(text):
        cur.i -= 1
        raise cur.fail(f"bad argument {text!r}", expected)
    if cur.is_punct("?"):
        cur.take()
        return Arg("bind", text)
    return Arg("ref", text)


def _parse_pattern(cur: _Cursor) -> EventPattern:
    tok = cur.peek()
    if tok is None or tok.kind != "word" or not _IDENT.match(tok.text):
        raise cur.fail("expected an event name", ["event name"])
    cur.take()
    if not cur.is_punct("("):
        return EventPattern(tok.text, ())
    cur.take()
    if cur.is_punct("*"):
        cur.take()
        if not cur.is_punct(")"):
            raise cur.fail("expected ')'", ["')'"])
        cur.take()
        return EventPattern(tok.text, None)
    args = []
    if not cur.is_punct(")"):
        args.append(_parse_arg(cur))
        while cur.is_punct(","):
            cur.take()
            args.append(_parse_arg(cur))
    if not cur.is_punct(")"):
        raise cur.fail("expected ',' or ')'", ["','", "')'"])
    cur.take()
    return EventPattern(tok.text, tuple(args))


def _parse_patterns(toks: list[_Tok], line: int, end_col: int) -> tuple[EventPattern, ...]:
    cur = _Cursor(toks, line, end_col)
    out = [_parse_pattern(cur)]
    while cur.is_punct(","):
        cur.take()
        out.append(_parse_pattern(cur))
    if cur.peek() is not None:
        raise cur.fail("unexpected text after event list", ["','", "end of line"])
    return tuple(out)


def _parse_phrase(toks: list[_Tok], line: int, end_col: int) -> Phrase:
    if not toks:
        raise ParseError("expected a handler phrase", line, end_col, ["word", "string"])
    for tok in toks:
        if tok.kind == "punct":
            raise ParseError(f"unexpected {tok.text!r} in phrase", line, tok.col, ["word", "string"])
    return Phrase(tuple(("str", t.value) if t.kind == "str" else ("word", t.text) for t in toks))


def _events_or_phrase(toks, line, end_col, kind):
    """Event list if it parses as one; otherwise a phrase of two or more tokens."""
    if not toks:
        raise ParseError("expected events", line, end_col, ["event name", "string"])
    verb = {"given": ["request"], "when": ["wait", "for"]}.get(kind)
    if verb and [t.text for t in toks[:len(verb)]] == verb and len(toks) > len(verb):
        try:
            return _parse_patterns(toks[len(verb):], line, end_col), None
        except ParseError:
            pass
    try:
        return _parse_patterns(toks, line, end_col), None
    except ParseError as first:
        if len(toks) >= 2 and all(t.kind != "punct" for t in toks):
            return (), _parse_phrase(toks, line, end_col)
        raise first


def _check_patterns(events, kind, line, body_col):
    for p in events:
        args = p.args or ()
        if kind == "given" and (p.args is None or any(a.kind in ("bind", "any") for a in args)):
            raise ParseError(f"Given requests concrete events; {format_pattern(p)} has placeholders",
                             line, body_col, ["concrete event"])
        if kind == "block" and any(a.kind == "bind" for a in args):
            raise ParseError(f"Block cannot bind variables: {format_pattern(p)}",
                             line, body_col, ["event pattern"])


def _parse_step(kind, keyword, body, line, body_col) -> Step:
    end_col = body_col + len(body)
    toks = _lex(body, line, body_col)
    if kind == "forever":
        if keyword == "and" and [t.text for t in toks] == ["forever"]:
            toks = []
        if toks:
            raise ParseError("Forever takes no argument", line, toks[0].col, ["end of line"])
        return Step(keyword, kind, line=line)
    if kind == "then":
        if len(toks) == 1 and toks[0].text == "forever":
            return Step("forever" if keyword == "then" else keyword, "forever", line=line)
        return Step(keyword, kind, phrase=_parse_phrase(toks, line, end_col), line=line)
    handler = None
    if kind == "break-upon":
        split = next((i for i, t in enumerate(toks) if t.kind == "word" and t.text == "then"), None)
        if split is not None:
            after = toks[split + 1:]
            handler = _parse_phrase(after, line, after[0].col if after else end_col)
            end_col = toks[split].col
            toks = toks[:split]
    events, phrase = _events_or_phrase(toks, line, end_col, kind)
    _check_patterns(events, kind, line, body_col)
    return Step(keyword, kind, events, phrase, handler, line=line)


def parse(text: str) -> ScenarioDoc:
    """Parse a whole document or raise one :class:`ParseError`."""
    features: list[Feature] = []
    feature_name = None
    feature_line = 0
    scenarios: list[Scenario] = []
    scenario_name = None
    scenario_line = 0
    scenario_col = 1
    steps: list[Step] = []
    lineno = 0

    def close_scenario(line, col):
        nonlocal scenario_name, steps
        if scenario_name is None:
            return
        if not steps:
            raise ParseError(f"scenario {scenario_name!r} has no steps", line, col, _EXPECTED_STEP)
        if any(s.name == scenario_name for s in scenarios):
            raise ParseError(f"duplicate scenario name {scenario_name!r}", scenario_line, scenario_col)
        scenarios.append(Scenario(scenario_name, tuple(steps)))
        scenario_name, steps = None, []

    def close_feature(line, col):
        nonlocal feature_name, scenarios
        close_scenario(line, col)
        if feature_name is None:
            return
        if not scenarios:
            raise ParseError(f"feature {feature_name!r} has no scenarios", line, col, ["Scenario:"])
        if any(f.name == feature_name for f in features):
            raise ParseError(f"duplicate feature name {feature_name!r}", feature_line, 1)
        features.append(Feature(feature_name, tuple(scenarios)))
        feature_name, scenarios = None, []

    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.rstrip("\r")
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        col = indent + 1
        if stripped.startswith("Feature:"):
            if indent:
                raise ParseError("Feature header must not be indented", lineno, 1, ["Feature:"])
            close_feature(lineno, col)
            feature_name = stripped[len("Feature:"):].strip()
            feature_line = lineno
            if not feature_name:
                raise ParseError("expected a feature name", lineno, col + 8, ["name"])
            continue
        if feature_name is None:
            raise ParseError("expected Feature", lineno, col, ["Feature:"])
        if stripped.startswith("Scenario:"):
            if not indent:
                raise ParseError("Scenario header must be indented", lineno, 1, ["indentation"])
            close_scenario(lineno, col)
            scenario_name = stripped[len("Scenario:"):].strip()
            scenario_line, scenario_col = lineno, col
            if not scenario_name:
                raise ParseError("expected a scenario name", lineno, col + 9, ["name"])
            continue
        if scenario_name is None:
            raise ParseError("expected Scenario", lineno, col, ["Scenario:"])
        for text_kw, kw in _KEYWORDS:
            if stripped == text_kw or stripped.startswith(text_kw + " "):
                break
        else:
            raise ParseError("expected a step keyword", lineno, col, _EXPECTED_STEP)
        if not indent:
            raise ParseError("steps must be indented", lineno, 1, ["indentation"])
        rest = stripped[len(text_kw):]
        body = rest.lstrip()
        body_col = col + len(text_kw) + (len(rest) - len(body))
        body = body.rstrip()
        if kw == "and":
            if not steps:
                raise ParseError("And cannot open a scenario: it inherits the previous step's keyword",
                                 lineno, col, [k for k in _EXPECTED_STEP if k != "And"])
            kind = steps[-1].kind
        else:
            kind = kw
        steps.append(_parse_step(kind, kw, body, lineno, body_col))
    close_feature(len(lines), 1)
    if not features:
        raise ParseError("expected Feature", len(lines) if text.strip() else 1, 1, ["Feature:"])
    return ScenarioDoc(tuple(features))


# -- formatting --------------------------------------------------------------

def _format_arg(a: Arg) -> str:
    if a.kind == "bind":
        return f"{a.value}?"
    if a.kind == "ref":
        return a.value
    if a.kind == "any":
        return "_"
    if isinstance(a.value, bool):
        return "true" if a.value else "false"
    if isinstance(a.value, int):
        return str(a.value)
    return json.dumps(a.value, ensure_ascii=False)


def format_pattern(p: EventPattern) -> str:
    if p.args is None:
        return f"{p.name}(*)"
    if not p.args:
        return p.name
    return f"{p.name}({', '.join(_format_arg(a) for a in p.args)})"


def format_phrase(p: Phrase) -> str:
    return " ".join(v if k == "word" else json.dumps(v, ensure_ascii=False) for k, v in p.parts)


def format_step(step: Step) -> str:
    head = _KEYWORD_TEXT[step.keyword] if step.keyword != "and" else "And"
    if step.kind == "forever":
        return "And forever" if step.keyword == "and" else "Forever"
    if step.kind == "then":
        return f"{head} {format_phrase(step.phrase)}"
    body = format_phrase(step.phrase) if step.phrase else ", ".join(map(format_pattern, step.events))
    if step.handler is not None:
        body += f" then {format_phrase(step.handler)}"
    return f"{head} {body}"


def format(doc: ScenarioDoc) -> str:  # noqa: A001 - mirrors parse
    """Canonical text: two-space indentation, one blank line between features."""
    out = []
    for fi, feature in enumerate(doc.features):
        if fi:
            out.append("")
        out.append(f"Feature: {feature.name}")
        for scenario in feature.scenarios:
            out.append(f"  Scenario: {scenario.name}")
            out.extend(f"    {format_step(s)}" for s in scenario.steps)
    return "\n".join(out) + "\n"


# -- compilation -------------------------------------------------------------

@dataclass(frozen=True)
class Emit:
    """Handler result that makes the thread synchronize, requesting ``request``."""

    request: tuple = ()
    block: Any = None
    vars: Mapping | None = None


HandlerTable = Mapping[str, Callable]

_FOREVER_SPINS = 1000


def _handler_refs(doc: ScenarioDoc) -> list[str]:
    refs = []
    for scenario in doc.scenarios:
        for s in scenario.steps:
            for p in (s.phrase, s.handler):
                if p is not None:
                    refs.append(p.handler_id)
    return refs


def _resolve_arg(a: Arg, env: Mapping):
    if a.kind == "lit":
        return a.value
    if a.kind == "ref":
        if a.value not in env:
            raise NameError(f"unbound scenario variable {a.value!r}")
        return env[a.value]
    return ANY


def _to_set(patterns, env) -> EventSet:
    explicit, pats = [], []
    for p in patterns:
        if p.args is None:
            pats.append(Pattern(p.name, None))
            continue
        values = tuple(_resolve_arg(a, env) for a in p.args)
        if any(v is ANY for v in values):
            pats.append(Pattern(p.name, values))
        else:
            explicit.append(Event(p.name, values))
    return EventSet(explicit, pats)


def _bind(patterns, event: Event, env: dict) -> bool:
    """Bind placeholders of the first pattern matching ``event``; False if none does."""
    for p in patterns:
        if p.name != event.name:
            continue
        if p.args is None:
            return True
        if len(p.args) != len(event.payload):
            continue
        binds = {}
        for a, v in zip(p.args, event.payload):
            if a.kind == "bind":
                binds[a.value] = v
            elif a.kind != "any":
                want = _resolve_arg(a, env)
                if type(want) is not type(v) or want != v:
                    break
        else:
            env.update(binds)
            return True
    return False


class _Thread:
    """Interpreter for one scenario. Local state: ``(pc, scopes, vars, pending, resume)``."""

    def __init__(self, scenario: Scenario, handlers: HandlerTable):
        self.name = scenario.name
        self.steps = scenario.steps
        self.handlers = handlers

    def events_of(self, step: Step, env) -> EventSet:
        if step.phrase is None:
            return _to_set(step.events, env)
        got = self.handlers[step.phrase.handler_id](dict(env), *step.phrase.args)
        return EventSet.of(*got)

    def triggers(self, scopes, env) -> EventSet:
        out = EventSet()
        for i in scopes:
            if self.steps[i].kind != "forever":
                out = out | self.events_of(self.steps[i], env)
        return out

    def sync_for(self, request, wait, block, scopes, env, pending) -> SyncStatement:
        trig = self.triggers(scopes, env)
        for e in request:
            if e in trig:
                raise ValueError(f"{self.name}: requests trigger event {e.label}")
        for i in pending:
            block = block | self.events_of(self.steps[i], env)
        return SyncStatement(request, wait | trig, block)

    def call(self, phrase: Phrase, env: dict):
        out = self.handlers[phrase.handler_id](dict(env), *phrase.args)
        if isinstance(out, Emit):
            env.update(out.vars or {})
            return out
        if out is not None:
            env.update(out)
        return None

    def run(self, pc, scopes, env, pending):
        spins = 0
        while True:
            if pc == len(self.steps):
                if not scopes:
                    return TERMINATED
                top = scopes[-1]
                if self.steps[top].kind == "forever":
                    spins += 1
                    if spins > _FOREVER_SPINS:
                        raise RuntimeError(f"{self.name}: forever body never synchronizes")
                    pc = top + 1
                else:
                    scopes = scopes[:-1]
                continue
            step = self.steps[pc]
            kind = step.kind
            if kind in ("forever", "break-upon", "interrupt"):
                scopes = scopes + (pc,)
                pc += 1
            elif kind == "block":
                pending = pending + (pc,)
                pc += 1
            elif kind == "then":
                emit = self.call(step.phrase, env)
                pc += 1
                if emit is not None:
                    stmt = self.sync_for(emit.request, EventSet(), EventSet.of(*_as_list(emit.block)),
                                         scopes, env, pending)
                    return stmt, (pc, scopes, _freeze(env), (), None)
            else:
                events = self.events_of(step, env)
                if kind == "given":
                    stmt = self.sync_for(tuple(events), EventSet(), EventSet(), scopes, env, pending)
                else:
                    stmt = self.sync_for((), events, EventSet(), scopes, env, pending)
                return stmt, (pc + 1, scopes, _freeze(env), (), pc)

    def step(self, local, cause):
        if cause is None:
            return self.run(0, (), {}, ())
        pc, scopes, frozen, _, origin = local
        env = dict(frozen)
        for depth, i in enumerate(scopes):
            s = self.steps[i]
            if s.kind == "forever" or cause not in self.events_of(s, env):
                continue
            if s.phrase is None:
                _bind(s.events, cause, env)
            env["event"] = cause
            scopes = scopes[:depth]
            if s.kind == "break-upon" and s.handler is not None:
                emit = self.call(s.handler, env)
                if emit is not None:
                    stmt = self.sync_for(emit.request, EventSet(), EventSet.of(*_as_list(emit.block)),
                                         scopes, env, ())
                    return stmt, (len(self.steps), scopes, _freeze(env), (), None)
            return self.run(len(self.steps), scopes, env, ())
        if origin is not None:
            s = self.steps[origin]
            if s.phrase is None:
                _bind(s.events, cause, env)
        env["event"] = cause
        return self.run(pc, scopes, env, ())


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, Event):
        return [value]
    return list(value)


def _freeze(env: Mapping) -> tuple:
    return tuple(sorted(env.items()))


def compile(doc: ScenarioDoc, handlers: HandlerTable | None = None) -> list[BThreadSpec]:  # noqa: A001
    """One b-thread per scenario; raises :class:`CompileError` on unresolved handler ids."""
    handlers = dict(handlers or {})
    missing = sorted({h for h in _handler_refs(doc) if h not in handlers})
    if missing:
        raise CompileError(f"unresolved handlers: {', '.join(map(repr, missing))}", missing)
    seen = {}
    for f in doc.features:
        for s in f.scenarios:
            seen.setdefault(s.name, []).append(f.name)
    threads = []
    for f in doc.features:
        for s in f.scenarios:
            name = s.name if len(seen[s.name]) == 1 else f"{f.name}: {s.name}"
            interp = _Thread(s, handlers)
            threads.append(BThreadSpec(name, interp.step, None))
    return threads


def load(path) -> ScenarioDoc:
    from pathlib import Path

    return parse(Path(path).read_text(encoding="utf-8"))
