"""Synchronization statements, b-thread specifications and live thread state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

from .events import Event, EventSet, as_event_set, canonical


class SyncStatement:
    """What one b-thread declares at a synchronization point.

    ``request`` must be explicit (it is enumerated during selection);
    ``wait`` and ``block`` may contain patterns.
    """

    __slots__ = ("request", "request_set", "wait", "block", "_key")

    def __init__(self, request=None, wait=None, block=None):
        req = as_event_set(request)
        if not req.is_explicit:
            raise ValueError("requested events must form an explicit set")
        self.request = tuple(sorted(req.explicit))
        self.request_set = req.explicit
        self.wait = as_event_set(wait)
        self.block = as_event_set(block)
        self._key = None

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = (tuple(e.key for e in self.request), self.wait.key, self.block.key)
        return self._key

    def __canonical__(self):
        return self.key

    def __eq__(self, other):
        if not isinstance(other, SyncStatement):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def wakes(self, event: Event) -> bool:
        """True if ``event`` resumes the thread holding this statement."""
        return event in self.request_set or event in self.wait

    def __repr__(self):
        parts = []
        if self.request:
            parts.append("request=" + repr(EventSet(self.request)))
        if self.wait:
            parts.append(f"wait={self.wait!r}")
        if self.block:
            parts.append(f"block={self.block!r}")
        return "sync(" + ", ".join(parts) + ")"


def sync(request=None, wait=None, block=None) -> SyncStatement:
    return SyncStatement(request, wait, block)


@dataclass(frozen=True)
class Done:
    """Termination of a step function, optionally carrying a result value."""

    value: Any = None


TERMINATED = Done()

_UNSET = object()


@dataclass(frozen=True)
class Caught:
    """Start datum handed to a break-upon handler: the trigger and the abandoned body state."""

    event: Event
    state: Any

    def __canonical__(self):
        return (self.event.key, canonical(self.state))


@dataclass(frozen=True)
class BThreadSpec:
    """A named, resumable, pure step function.

    ``step(local, cause)`` returns ``(SyncStatement, new_local)`` or a
    :class:`Done`. It is first called with ``cause=None`` and ``local`` set
    to the start datum (``initial`` unless a combinator injects another);
    afterwards ``cause`` is the event that resumed the thread. Context-aware
    specs receive a read-only store snapshot as a third argument.
    """

    name: str
    step: Callable = field(compare=False)
    initial: Any = None
    context_aware: bool = False

    def renamed(self, name: str, initial: Any = _UNSET) -> BThreadSpec:
        return BThreadSpec(name, self.step, self.initial if initial is _UNSET else initial,
                           self.context_aware)


class EngineFault(Exception):
    """A b-thread step function raised; carries the thread name and local state."""

    def __init__(self, thread: str, local: Any, cause: BaseException | None = None,
                 message: str | None = None):
        self.thread = thread
        self.local = local
        self.cause = cause
        self.trace = None
        text = message or f"{type(cause).__name__}: {cause}"
        super().__init__(f"b-thread {thread!r} failed in state {local!r}: {text}")


class ThreadState(NamedTuple):
    name: str
    spec: BThreadSpec
    local: Any
    statement: SyncStatement
    binding: tuple | None = None


def call_step(spec: BThreadSpec, local, cause, store=None):
    if spec.context_aware:
        return spec.step(local, cause, store)
    return spec.step(local, cause)


def _advance(name, spec, local, cause, store, binding) -> ThreadState | None:
    try:
        out = call_step(spec, local, cause, store)
    except EngineFault:
        raise
    except Exception as exc:
        raise EngineFault(name, local, exc) from exc
    if isinstance(out, Done):
        return None
    try:
        statement, new_local = out
    except (TypeError, ValueError):
        raise EngineFault(name, local, message=f"step returned {out!r}") from None
    if not isinstance(statement, SyncStatement):
        raise EngineFault(name, local, message=f"step returned non-statement {statement!r}")
    return ThreadState(name, spec, new_local, statement, binding)


def start_thread(spec: BThreadSpec, store=None, *, name: str | None = None,
                 data: Any = _UNSET, binding: tuple | None = None) -> ThreadState | None:
    """Run ``spec`` to its first synchronization point; ``None`` if it terminates first."""
    start = spec.initial if data is _UNSET else data
    return _advance(name or spec.name, spec, start, None, store, binding)


def resume_thread(thread: ThreadState, event: Event, store=None) -> ThreadState | None:
    return _advance(thread.name, thread.spec, thread.local, event, store, thread.binding)




@dataclass(frozen=True)
class BProgram:
    """A test model: b-threads plus optional context bindings, seed store and effect rules."""

    threads: tuple = ()
    bindings: tuple = ()
    store: Any = None
    effects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "threads", tuple(self.threads))
        object.__setattr__(self, "bindings", tuple(self.bindings))
        object.__setattr__(self, "effects", tuple(self.effects))
        names = [t.name for t in self.threads]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate b-thread names: {dup}")

    @property
    def has_context(self) -> bool:
        return bool(self.bindings or self.effects or self.store is not None)


class ProgramState(NamedTuple):
    """A synchronization configuration: live threads, store, and claimed binding keys."""

    program: BProgram
    threads: tuple
    store: Any = None
    claimed: frozenset = frozenset()

    @property
    def key(self) -> tuple:
        threads = tuple(sorted((t.name, canonical(t.local), t.statement.key) for t in self.threads))
        store = None if self.store is None else self.store.key
        return (threads, store, tuple(sorted(self.claimed)))
