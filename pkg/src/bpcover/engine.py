"""The behavioural-programming execution cycle.

Every cycle collects the statements of all live b-threads, computes the
requested-and-not-blocked events, selects one, applies context effects,
resumes the threads that requested or waited for it and spawns new
context copies.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .context import (ContextStore, EffectError, apply_effects, binding_answers,
                      spawn_live_copies)
from .events import Event, EventSet, as_event_set
from .threads import (BProgram, BThreadSpec, Caught, Done, EngineFault, ProgramState,
                      SyncStatement, TERMINATED, ThreadState, call_step, resume_thread,
                      start_thread, sync)


def enabled_events(statements: Iterable[SyncStatement]) -> list[Event]:
    """Requested events not blocked by any statement, canonically sorted."""
    statements = list(statements)
    requested = set()
    for s in statements:
        requested.update(s.request_set)
    if not requested:
        return []
    patterns = []
    for s in statements:
        requested.difference_update(s.block.explicit)
        patterns.extend(s.block.patterns)
    if patterns:
        requested = [e for e in requested if not any(p.matches(e) for p in patterns)]
    return sorted(requested)


# -- selection strategies ----------------------------------------------------

class FirstLexicographic:
    kind = "first-lexicographic"

    def fresh(self):
        return self

    def select(self, enabled: Sequence[Event], threads: Sequence[ThreadState] = ()) -> Event | None:
        return enabled[0] if enabled else None

    def __repr__(self):
        return "FirstLexicographic()"


class Priority:
    """Pick the enabled event requested by the best-ranked thread (lowest rank wins).

    Threads missing from ``ranks`` rank after every listed thread; ties go to
    the canonically smallest event.
    """

    kind = "priority"

    def __init__(self, ranks: Mapping[str, int]):
        self.ranks = dict(ranks)

    def fresh(self):
        return self

    def select(self, enabled, threads=()):
        if not enabled:
            return None
        worst = float("inf")
        best = {}
        for t in threads:
            r = self.ranks.get(t.name, worst)
            for e in t.statement.request:
                if r < best.get(e, worst):
                    best[e] = r
        return min(enabled, key=lambda e: (best.get(e, worst), e.key))

    def __repr__(self):
        return f"Priority({self.ranks!r})"


class UniformRandom:
    """Uniform choice among enabled events from a seeded RNG.

    ``select`` advances the RNG; :meth:`fresh` returns a copy restarted from
    the seed, which is what :func:`run` uses so runs are reproducible.
    """

    kind = "uniform-random"

    def __init__(self, seed: int = 0):
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._rng = random.Random(seed)

    def fresh(self):
        return UniformRandom(self.seed)

    def select(self, enabled, threads=()):
        if not enabled:
            return None
        return enabled[self._rng.randrange(len(enabled))]

    def __repr__(self):
        return f"UniformRandom(seed={self.seed})"


class Scripted:
    """Replays a fixed event word; raises if the next scripted event is not enabled."""

    kind = "scripted"

    def __init__(self, word: Iterable[Event]):
        self.word = tuple(word)
        self._pos = 0

    def fresh(self):
        return Scripted(self.word)

    def select(self, enabled, threads=()):
        if self._pos >= len(self.word):
            return None
        e = self.word[self._pos]
        if e not in enabled:
            raise ValueError(f"scripted event {e.label} not enabled at position {self._pos}; "
                             f"enabled: {[x.label for x in enabled]}")
        self._pos += 1
        return e


def select_event(enabled: Sequence[Event], strategy, threads: Sequence[ThreadState] = ()):
    return strategy.select(list(enabled), threads)


# -- the cycle ---------------------------------------------------------------

class Status(str, enum.Enum):
    EVENT = "event"
    DEADLOCK = "deadlock"
    COMPLETED = "completed"
    QUIESCENT = "quiescent"


@dataclass(frozen=True)
class StepResult:
    status: Status
    state: ProgramState
    event: Event | None = None


def initial_state(program: BProgram) -> ProgramState:
    store = program.store
    if store is None and program.has_context:
        store = ContextStore()
    threads = []
    for spec in program.threads:
        t = start_thread(spec, store)
        if t is not None:
            threads.append(t)
    state = ProgramState(program, tuple(threads), store, frozenset())
    if program.bindings:
        state = spawn_live_copies(state, store)
    return state


def statements(state: ProgramState) -> list[SyncStatement]:
    return [t.statement for t in state.threads]


def state_enabled(state: ProgramState) -> list[Event]:
    return enabled_events(t.statement for t in state.threads)


def classify(state: ProgramState, enabled: Sequence[Event]) -> Status:
    if enabled:
        return Status.EVENT
    if not state.threads:
        return Status.COMPLETED
    if any(t.statement.request for t in state.threads):
        return Status.DEADLOCK
    return Status.QUIESCENT


def successor(state: ProgramState, event: Event) -> ProgramState:
    """Trigger ``event``: apply effects, end copies whose answer is gone, resume, spawn."""
    program = state.program
    store = state.store
    answers = None
    if program.has_context:
        try:
            store = apply_effects(store, event, program.effects)
        except EffectError as exc:
            raise EngineFault("<effects>", store, exc) from exc
        if program.bindings:
            answers = binding_answers(state, store)
    threads = []
    for t in state.threads:
        if t.binding is not None and t.binding[1] not in answers[t.binding[0]]:
            continue  # its context ended with this event
        st = t.statement
        if event in st.request_set or (st.wait and event in st.wait):
            nt = resume_thread(t, event, store)
            if nt is not None:
                threads.append(nt)
        else:
            threads.append(t)
    new = ProgramState(program, tuple(threads), store, state.claimed)
    if program.bindings:
        new = spawn_live_copies(new, store)
    return new


def step(state: ProgramState, strategy) -> StepResult:
    enabled = state_enabled(state)
    status = classify(state, enabled)
    if status is not Status.EVENT:
        return StepResult(status, state)
    event = strategy.select(enabled, state.threads)
    return StepResult(Status.EVENT, successor(state, event), event)


@dataclass(frozen=True)
class Trace:
    events: tuple
    status: str
    final: ProgramState | None = field(default=None, compare=False, repr=False)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.events]


def run(program: BProgram, strategy=None, max_events: int = 1000) -> Trace:
    """Run until completion, deadlock or ``max_events`` triggered events.

    A state with live threads but nothing requested counts as completed.
    An :class:`EngineFault` propagates with the partial trace in ``.trace``,
    ending with the event whose handling failed.
    """
    if max_events < 1:
        raise ValueError("max_events must be at least 1")
    selector = (strategy or FirstLexicographic()).fresh()
    events: list[Event] = []
    try:
        state = initial_state(program)
        while True:
            enabled = state_enabled(state)
            status = classify(state, enabled)
            if status is Status.DEADLOCK:
                return Trace(tuple(events), "deadlock", state)
            if status is not Status.EVENT:
                return Trace(tuple(events), "completed", state)
            if len(events) >= max_events:
                return Trace(tuple(events), "budget-exhausted", state)
            event = selector.select(enabled, state.threads)
            events.append(event)
            state = successor(state, event)
    except EngineFault as fault:
        fault.trace = Trace(tuple(events), "fault")
        raise


# -- idioms ------------------------------------------------------------------

def _triggers(spec) -> list[tuple[EventSet, Any]]:
    if isinstance(spec, Mapping):
        items = spec.items()
    else:
        items = spec
    return [(as_event_set(k), v) for k, v in items]


def _guard_disjoint(stmt: SyncStatement, trigger: EventSet, who: str):
    for e in stmt.request:
        if e in trigger:
            raise ValueError(f"{who}: body requests trigger event {e.label}")


def break_upon(body: BThreadSpec, handlers, name: str | None = None) -> BThreadSpec:
    """Try/catch over synchronization points.

    Each body statement also waits for every handler trigger. When a trigger
    resumes the thread the body is abandoned and the first matching handler
    (declaration order) starts with datum ``Caught(event, body_local)``.
    ``handlers`` maps trigger events/sets to handler specs. Handlers may
    themselves be break-upon threads.
    """
    table = _triggers(handlers)
    every = EventSet()
    for trig, _ in table:
        every = every | trig
    label = name or body.name

    def wrap_body(out):
        if isinstance(out, Done):
            return out
        stmt, local = out
        _guard_disjoint(stmt, every, label)
        return SyncStatement(stmt.request, stmt.wait | every, stmt.block), ("body", local)

    def wrap_handler(index, out):
        if isinstance(out, Done):
            return out
        stmt, local = out
        return stmt, ("handler", index, local)

    def step(local, cause, store=None):
        if cause is None:
            return wrap_body(call_step(body, local, None, store))
        if local[0] == "body":
            for index, (trig, handler) in enumerate(table):
                if cause in trig:
                    return wrap_handler(index, call_step(handler, Caught(cause, local[1]), None, store))
            return wrap_body(call_step(body, local[1], cause, store))
        _, index, hl = local
        return wrap_handler(index, call_step(table[index][1], hl, cause, store))

    aware = body.context_aware or any(h.context_aware for _, h in table)
    if aware:
        return BThreadSpec(label, step, body.initial, True)
    return BThreadSpec(label, lambda local, cause: step(local, cause), body.initial)


def interrupt(body: BThreadSpec, triggers, name: str | None = None) -> BThreadSpec:
    """Like :func:`break_upon` but the thread terminates when a trigger fires."""
    trig = as_event_set(triggers)
    label = name or body.name

    def wrap(out):
        if isinstance(out, Done):
            return out
        stmt, local = out
        _guard_disjoint(stmt, trig, label)
        return SyncStatement(stmt.request, stmt.wait | trig, stmt.block), local

    def step(local, cause, store=None):
        if cause is not None and cause in trig:
            return TERMINATED
        return wrap(call_step(body, local, cause, store))

    if body.context_aware:
        return BThreadSpec(label, step, body.initial, True)
    return BThreadSpec(label, lambda local, cause: step(local, cause), body.initial)


_LOOP_GUARD = 10_000


def loop(body: BThreadSpec, name: str | None = None) -> BThreadSpec:
    """Restart ``body`` whenever it finishes.

    ``Done(value)`` restarts with ``value`` as the start datum; a bare
    termination restarts from ``body.initial``.
    """

    def restart(out, store):
        spins = 0
        while isinstance(out, Done):
            spins += 1
            if spins > _LOOP_GUARD:
                raise RuntimeError("loop body finishes without ever synchronizing")
            data = body.initial if out.value is None else out.value
            out = call_step(body, data, None, store)
        return out

    def step(local, cause, store=None):
        return restart(call_step(body, local, cause, store), store)

    if body.context_aware:
        return BThreadSpec(name or body.name, step, body.initial, True)
    return BThreadSpec(name or body.name, lambda local, cause: step(local, cause), body.initial)


def seq(*parts: BThreadSpec, name: str | None = None) -> BThreadSpec:
    """Run ``parts`` one after another, threading ``Done`` values as start data."""
    if not parts:
        raise ValueError("seq needs at least one part")

    def advance(index, out, store):
        while isinstance(out, Done):
            index += 1
            if index == len(parts):
                return out
            nxt = parts[index]
            out = call_step(nxt, nxt.initial if out.value is None else out.value, None, store)
        stmt, local = out
        return stmt, (index, local)

    def step(local, cause, store=None):
        if cause is None:
            return advance(0, call_step(parts[0], local, None, store), store)
        index, inner = local
        return advance(index, call_step(parts[index], inner, cause, store), store)

    label = name or parts[0].name
    if any(p.context_aware for p in parts):
        return BThreadSpec(label, step, parts[0].initial, True)
    return BThreadSpec(label, lambda local, cause: step(local, cause), parts[0].initial)


def scripted(name: str, steps: Sequence[SyncStatement], repeat: bool = False) -> BThreadSpec:
    """A thread that posts ``steps`` in order (cyclically if ``repeat``); local state is the index."""
    steps = tuple(steps)

    def step(local, cause):
        index = local if cause is None else local + 1
        if index >= len(steps):
            if not repeat or not steps:
                return TERMINATED
            index = 0
        return steps[index], index

    return BThreadSpec(name, step, 0)


def requester(name: str, *events, repeat: bool = False, block=None) -> BThreadSpec:
    """Request each event in turn (``block`` held throughout)."""
    return scripted(name, [sync(request=e, block=block) for e in events], repeat=repeat)


__all__ = [
    "BProgram", "BThreadSpec", "Caught", "Done", "EngineFault", "FirstLexicographic",
    "Priority", "ProgramState", "Scripted", "Status", "StepResult", "SyncStatement",
    "TERMINATED", "Trace", "UniformRandom", "break_upon", "classify", "enabled_events",
    "initial_state", "interrupt", "loop", "requester", "run", "scripted", "select_event",
    "seq", "state_enabled", "step", "successor", "sync",
]
