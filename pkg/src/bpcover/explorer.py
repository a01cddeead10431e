"""Exhaustive expansion of a b-program into a labeled transition system."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .engine import classify, initial_state, state_enabled, successor, Status
from .events import Event
from .threads import BProgram, EngineFault


class ExplorationError(Exception):
    def __init__(self, path: Iterable[Event], fault: Exception):
        self.path = tuple(path)
        self.fault = fault
        where = " ".join(e.label for e in self.path) or "<initial>"
        super().__init__(f"engine fault after event path [{where}]: {fault}")


@dataclass(frozen=True)
class LtsState:
    id: int
    key: object = field(compare=False, repr=False)


class Lts:
    """States ``0..n-1``, event-labeled deterministic transitions, accepting and truncated sets."""

    def __init__(self, n_states: int, transitions: Iterable[tuple[int, Event, int]],
                 accepting: Iterable[int] = (), initial: int = 0,
                 truncated: Iterable[int] = (), keys: list | None = None,
                 check_reachable: bool = True):
        self.n_states = n_states
        self.initial = initial
        self.accepting = frozenset(accepting)
        self.truncated = frozenset(truncated)
        self.keys = keys
        self.transitions = tuple(sorted(set(transitions), key=lambda t: (t[0], t[1].key, t[2])))
        out: list[dict[Event, int]] = [dict() for _ in range(n_states)]
        for src, event, dst in self.transitions:
            if not (0 <= src < n_states and 0 <= dst < n_states):
                raise ValueError(f"transition {src} -{event.label}-> {dst} leaves the state range")
            if event in out[src]:
                raise ValueError(f"state {src} has two transitions labeled {event.label}")
            out[src][event] = dst
        self._out = [dict(sorted(d.items())) for d in out]
        if not 0 <= initial < max(n_states, 1):
            raise ValueError("initial state out of range")
        for s in self.accepting | self.truncated:
            if not 0 <= s < n_states:
                raise ValueError(f"state {s} out of range")
        if check_reachable:
            unreached = set(range(n_states)) - self.reachable()
            if unreached:
                raise ValueError(f"states unreachable from initial: {sorted(unreached)}")

    @property
    def states(self) -> list[LtsState]:
        keys = self.keys or [None] * self.n_states
        return [LtsState(i, keys[i]) for i in range(self.n_states)]

    def out(self, state: int) -> dict[Event, int]:
        """Outgoing transitions of ``state``, canonically ordered by event."""
        return self._out[state]

    def reachable(self) -> set[int]:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            for t in self._out[s].values():
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    @property
    def alphabet(self) -> list[str]:
        return sorted({e.name for _, e, _ in self.transitions})

    def accepts(self, word: Iterable[Event]) -> bool:
        s = self.initial
        for e in word:
            s = self._out[s].get(e)
            if s is None:
                return False
        return s in self.accepting

    def __eq__(self, other):
        if not isinstance(other, Lts):
            return NotImplemented
        return (self.n_states, self.initial, self.accepting, self.truncated,
                [(a, e.key, b) for a, e, b in self.transitions]) == \
               (other.n_states, other.initial, other.accepting, other.truncated,
                [(a, e.key, b) for a, e, b in other.transitions])

    def __repr__(self):
        return (f"Lts(states={self.n_states}, transitions={len(self.transitions)}, "
                f"accepting={sorted(self.accepting)}, truncated={sorted(self.truncated)})")

    # -- FSM-JSON -------------------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "states": list(range(self.n_states)),
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "transitions": [[a, e.label, b] for a, e, b in self.transitions],
        }
        if self.truncated:
            doc["truncated"] = sorted(self.truncated)
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> Lts:
        ids = list(doc["states"])
        index = {sid: i for i, sid in enumerate(ids)}
        if len(index) != len(ids):
            raise ValueError("duplicate state ids")

        def at(sid):
            try:
                return index[sid]
            except KeyError:
                raise ValueError(f"unknown state id {sid!r}") from None

        transitions = [(at(a), Event.parse(label), at(b)) for a, label, b in doc["transitions"]]
        return cls(len(ids), transitions,
                   accepting=[at(s) for s in doc.get("accepting", [])],
                   initial=at(doc.get("initial", ids[0] if ids else 0)),
                   truncated=[at(s) for s in doc.get("truncated", [])])

    @classmethod
    def load(cls, path: str | Path) -> Lts:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def explore(program: BProgram, depth_bound: int, accept_quiescent: bool = False) -> Lts:
    """Depth-first expansion of every enabled event from every reachable state.

    States are deduplicated by full canonical serialization and numbered in
    first-visit order. A state first reached at the bound is re-expanded if
    a shorter path to it turns up later, so every state within the bound is
    expanded. States at the bound with unexplored successors are truncated.
    """
    if depth_bound < 1:
        raise ValueError("depth bound must be positive")
    try:
        root = initial_state(program)
    except EngineFault as exc:
        raise ExplorationError((), exc) from exc
    ids = {root.key: 0}
    states = [root]
    keys = [root.key]
    edges: list[dict[Event, int]] = [dict()]
    depth = {0: 0}
    truncated: set[int] = set()
    accepting: set[int] = set()

    # frames: [state id, depth, path, enabled events, next index]
    stack = [[0, 0, (), None, 0]]
    while stack:
        frame = stack[-1]
        sid, d, path, enabled, i = frame
        if enabled is None:
            ps = states[sid]
            enabled = state_enabled(ps)
            status = classify(ps, enabled)
            if status is Status.COMPLETED or (accept_quiescent and status is Status.QUIESCENT):
                accepting.add(sid)
            if enabled and d >= depth_bound:
                truncated.add(sid)
                stack.pop()
                continue
            truncated.discard(sid)
            frame[3] = enabled
        if i >= len(enabled):
            stack.pop()
            continue
        frame[4] = i + 1
        event = enabled[i]
        try:
            nxt = successor(states[sid], event)
        except EngineFault as exc:
            raise ExplorationError(path + (event,), exc) from exc
        key = nxt.key
        tid = ids.get(key)
        if tid is None:
            tid = len(states)
            ids[key] = tid
            states.append(nxt)
            keys.append(key)
            edges.append(dict())
        edges[sid][event] = tid
        if tid not in depth or depth[tid] > d + 1:
            depth[tid] = d + 1
            stack.append([tid, d + 1, path + (event,), None, 0])

    transitions = [(s, e, t) for s, out in enumerate(edges) for e, t in out.items()]
    lts = Lts(len(states), transitions, accepting, 0, truncated, keys, check_reachable=False)
    lts.program_states = states
    return lts


def detect_deadlocks(lts: Lts) -> set[int]:
    """States with no outgoing transition that are neither accepting nor truncated."""
    return {s for s in range(lts.n_states)
            if not lts.out(s) and s not in lts.accepting and s not in lts.truncated}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(lts: Lts, name: str = "lts") -> str:
    """Graphviz digraph: accepting states double-circled, initial bold, truncated dashed."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle];"]
    for s in range(lts.n_states):
        attrs = []
        if s in lts.accepting:
            attrs.append("shape=doublecircle")
        if s == lts.initial:
            attrs.append("penwidth=2")
        if s in lts.truncated:
            attrs.append("style=dashed")
        lines.append(f"  {s} [{', '.join(attrs)}];" if attrs else f"  {s};")
    for a, e, b in lts.transitions:
        lines.append(f'  {a} -> {b} [label="{_dot_escape(e.label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def enumerate_words(lts: Lts, max_len: int) -> list[tuple[Event, ...]]:
    """Every accepted word of length at most ``max_len``, lexicographically ordered."""
    words = set()
    stack = [(lts.initial, ())]
    while stack:
        s, word = stack.pop()
        if s in lts.accepting:
            words.add(word)
        if len(word) < max_len:
            for e, t in lts.out(s).items():
                stack.append((t, word + (e,)))
    return sorted(words, key=lambda w: tuple(e.key for e in w))
