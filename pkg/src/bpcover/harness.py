"""Executing suites and live programs against a system under test."""

from __future__ import annotations

import json
import platform
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from . import __version__
from .engine import UniformRandom, select_event, state_enabled, successor, initial_state
from .events import Event
from .threads import BProgram

REPORT_SCHEMA = "bpcover.report/1"


@dataclass(frozen=True)
class Observation:
    """What the SUT did with one event: ``ok``, ``rejected`` or ``observed`` (with events)."""

    status: str = "ok"
    events: tuple = ()
    detail: str = ""

    def __post_init__(self):
        if self.status not in ("ok", "rejected", "observed"):
            raise ValueError(f"bad observation status {self.status!r}")
        object.__setattr__(self, "events", tuple(self.events))


class SutError(Exception):
    """Transport failure between harness and SUT."""


class SutAdapter(ABC):
    @abstractmethod
    def reset(self) -> None:
        """Start a fresh, independent session."""

    @abstractmethod
    def apply(self, event: Event) -> Observation:
        ...

    def teardown(self) -> None:
        pass

    def accepts(self, event: Event) -> bool:
        """Whether ``event`` is sent to the SUT; others are model-internal."""
        return True


# An oracle returns None when the observation is as expected, else (expected, observed).
Oracle = Callable[[Event, Observation], "tuple[Any, Any] | None"]


def ok_oracle(event: Event, obs: Observation):
    return None


@dataclass(frozen=True)
class Verdict:
    status: str  # pass | fail | sut-error
    word: int | None = None
    step: int | None = None
    event: str | None = None
    expected: Any = None
    observed: Any = None
    detail: str = ""

    def to_json(self) -> dict:
        doc = {"verdict": self.status}
        if self.word is not None:
            doc["word"] = self.word
        if self.status != "pass":
            doc.update(step=self.step, event=self.event, expected=self.expected,
                       observed=self.observed)
            if self.detail:
                doc["detail"] = self.detail
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> Verdict:
        return cls(doc["verdict"], doc.get("word"), doc.get("step"), doc.get("event"),
                   doc.get("expected"), doc.get("observed"), doc.get("detail", ""))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_metadata(seed=None, **extra) -> dict:
    import numpy

    meta = {"seed": seed, "started": _now(), "versions": {
        "bpcover": __version__, "python": platform.python_version(), "numpy": numpy.__version__}}
    meta.update(extra)
    return meta


@dataclass
class TestReport:
    __test__ = False

    verdicts: list[Verdict] = field(default_factory=list)
    coverage: dict | None = None
    deadlocks: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def count(self, status: str) -> int:
        return sum(v.status == status for v in self.verdicts)

    @property
    def failures(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status != "pass"]

    @property
    def ok(self) -> bool:
        return not self.failures and not self.deadlocks and \
            not (self.coverage and self.coverage.get("missing"))

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "summary": {"verdicts": len(self.verdicts), "pass": self.count("pass"),
                        "fail": self.count("fail"), "sut-error": self.count("sut-error")},
            "verdicts": [v.to_json() for v in self.verdicts],
            "coverage": self.coverage,
            "deadlocks": list(self.deadlocks),
            "metadata": self.metadata,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> TestReport:
        if doc.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"not a {REPORT_SCHEMA} document")
        return cls([Verdict.from_json(v) for v in doc["verdicts"]], doc.get("coverage"),
                   list(doc.get("deadlocks", [])), dict(doc.get("metadata", {})))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def _labels(events) -> list[str]:
    return [e.label if isinstance(e, Event) else str(e) for e in events]


def _check(event: Event, adapter: SutAdapter, oracle: Oracle, word, step) -> Verdict | None:
    """Apply one event; a non-pass verdict, or None if it went as expected."""
    try:
        obs = adapter.apply(event)
    except Exception as exc:  # transport failure, reported not raised
        return Verdict("sut-error", word, step, event.label, detail=f"{type(exc).__name__}: {exc}")
    if obs.status == "rejected":
        return Verdict("sut-error", word, step, event.label, detail=obs.detail or "rejected")
    bad = oracle(event, obs)
    if bad is not None:
        expected, observed = bad
        return Verdict("fail", word, step, event.label,
                       _labels(expected) if isinstance(expected, (list, tuple)) else expected,
                       _labels(observed) if isinstance(observed, (list, tuple)) else observed)
    return None


def run_suite(suite, adapter: SutAdapter, oracle: Oracle = ok_oracle, *, coverage: dict | None = None,
              deadlocks: Sequence = (), seed=None) -> TestReport:
    """One verdict per word: reset, apply in order, stop the word at its first mismatch."""
    meta = run_metadata(seed, mode="suite")
    verdicts = []
    for wi, word in enumerate(suite.words):
        try:
            adapter.reset()
        except Exception as exc:
            verdicts.append(Verdict("sut-error", wi, 0, None, detail=f"reset failed: {exc}"))
            continue
        verdict = Verdict("pass", wi)
        for si, event in enumerate(word):
            if not adapter.accepts(event):
                continue
            bad = _check(event, adapter, oracle, wi, si)
            if bad is not None:
                verdict = bad
                break
        verdicts.append(verdict)
    adapter.teardown()
    meta["finished"] = _now()
    return TestReport(verdicts, coverage, list(deadlocks), meta)


def online_monitor(program: BProgram, adapter: SutAdapter, oracle: Oracle = ok_oracle,
                   strategy=None, max_events: int = 1000, *, stop_on_failure: bool = True,
                   seed=None) -> TestReport:
    """Drive the engine live against the SUT, checking every applied event.

    The report holds one verdict per incident (failure or SUT error), or a
    single pass verdict when the run was clean. Runs end at ``max_events``,
    when no event is enabled, or at the first failure if ``stop_on_failure``.
    """
    strategy = (strategy if strategy is not None else UniformRandom(seed or 0)).fresh()
    meta = run_metadata(seed, mode="online", strategy=repr(strategy), max_events=max_events)
    adapter.reset()
    state = initial_state(program)
    incidents: list[Verdict] = []
    n = 0
    end = "max-events"
    while n < max_events:
        enabled = state_enabled(state)
        event = select_event(enabled, strategy, state.threads)
        if event is None:
            end = "stuck" if state.threads and any(t.statement.request for t in state.threads) \
                else "quiescent"
            break
        if adapter.accepts(event):
            bad = _check(event, adapter, oracle, None, n)
            if bad is not None:
                incidents.append(bad)
                if stop_on_failure and bad.status == "fail":
                    state = successor(state, event)
                    n += 1
                    end = "failure"
                    break
        state = successor(state, event)
        n += 1
    adapter.teardown()
    meta.update(events=n, end=end, finished=_now())
    deadlocks = ["deadlock after %d events" % n] if end == "stuck" else []
    return TestReport(incidents or [Verdict("pass")], None, deadlocks, meta)


def apply_all(adapter: SutAdapter, events: Iterable[Event]) -> list[Observation]:
    """Reset and replay ``events``, returning the observations (for determinism checks)."""
    adapter.reset()
    return [adapter.apply(e) for e in events if adapter.accepts(e)]
