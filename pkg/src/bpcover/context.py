"""Contextual data store, queries, effect rules and live-copy spawning."""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .events import Event, canonical
from .threads import BThreadSpec, ProgramState, start_thread


class QueryError(Exception):
    pass


class EffectError(Exception):
    pass


@dataclass(frozen=True)
class Entity:
    type: str
    attrs: Mapping[str, Any] = field(default_factory=dict)


def _check_value(value):
    if isinstance(value, (list, tuple)):
        for v in value:
            _check_value(v)
        return
    if not isinstance(value, (str, int, bool, float)) and value is not None:
        raise TypeError(f"store attribute values must be scalars or scalar lists, got {value!r}")


class ContextStore:
    """Immutable map from entity id to :class:`Entity`."""

    __slots__ = ("_entities", "_key")

    def __init__(self, entities: Mapping[str, Entity] | None = None):
        ents = {}
        for eid, ent in (entities or {}).items():
            if not isinstance(eid, str) or not eid:
                raise ValueError(f"entity ids must be non-empty strings, got {eid!r}")
            for v in ent.attrs.values():
                _check_value(v)
            ents[eid] = Entity(ent.type, dict(ent.attrs))
        self._entities = ents
        self._key = None

    def __getitem__(self, eid: str) -> Entity:
        return self._entities[eid]

    def __contains__(self, eid: str) -> bool:
        return eid in self._entities

    def __len__(self):
        return len(self._entities)

    def __iter__(self):
        return iter(sorted(self._entities))

    def get(self, eid: str, default=None):
        return self._entities.get(eid, default)

    def items(self):
        return sorted(self._entities.items())

    def ids_of_type(self, type_tag: str) -> list[str]:
        return sorted(eid for eid, e in self._entities.items() if e.type == type_tag)

    def with_entity(self, eid: str, entity: Entity) -> ContextStore:
        ents = dict(self._entities)
        ents[eid] = entity
        return ContextStore(ents)

    def without(self, eid: str) -> ContextStore:
        ents = dict(self._entities)
        del ents[eid]
        return ContextStore(ents)

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple((eid, e.type, canonical(dict(e.attrs)))
                              for eid, e in sorted(self._entities.items()))
        return self._key

    def __canonical__(self):
        return self.key

    def __eq__(self, other):
        if not isinstance(other, ContextStore):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"ContextStore({self.to_json()})"

    def to_json(self) -> dict:
        return {"entities": [{"id": eid, "type": e.type, "attrs": dict(e.attrs)}
                             for eid, e in self.items()]}

    @classmethod
    def from_json(cls, doc: Mapping) -> ContextStore:
        ents = {}
        for item in doc.get("entities", []):
            eid = item["id"]
            if eid in ents:
                raise ValueError(f"duplicate entity id {eid!r}")
            ents[eid] = Entity(item["type"], dict(item.get("attrs", {})))
        return cls(ents)


def load_store(source: str | Path | Mapping) -> ContextStore:
    """Load a store from a JSON document, a JSON string, or a path to a JSON file."""
    if isinstance(source, Mapping):
        return ContextStore.from_json(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        return ContextStore.from_json(json.loads(Path(source).read_text(encoding="utf-8")))
    return ContextStore.from_json(json.loads(source))


_OPS = {"=": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le}


@dataclass(frozen=True)
class Condition:
    attr: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Query:
    """Entities of ``type`` satisfying every condition."""

    id: str
    type: str
    where: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "where", tuple(
            c if isinstance(c, Condition) else Condition(*c) for c in self.where))


def evaluate_query(store: ContextStore, query: Query) -> list[str]:
    """Ids of matching entities, ascending."""
    out = []
    for eid in store.ids_of_type(query.type):
        attrs = store[eid].attrs
        for cond in query.where:
            if cond.attr not in attrs:
                raise QueryError(
                    f"query {query.id!r}: entity {eid!r} has no attribute {cond.attr!r}")
            if not _OPS[cond.op](attrs[cond.attr], cond.value):
                break
        else:
            out.append(eid)
    return out


@dataclass(frozen=True)
class Param:
    """Refers to position ``index`` of the triggering event's payload."""

    index: int


def _resolve(value, event: Event):
    if isinstance(value, Param):
        try:
            return event.payload[value.index]
        except IndexError:
            raise EffectError(f"{event.label} has no payload position {value.index}") from None
    return value


@dataclass(frozen=True)
class Insert:
    id: Any
    type: str
    attrs: Mapping[str, Any] = field(default_factory=dict)

    def apply(self, store: ContextStore, event: Event) -> ContextStore:
        eid = _resolve(self.id, event)
        if eid in store:
            raise EffectError(f"insert of existing entity {eid!r}")
        attrs = {k: _resolve(v, event) for k, v in self.attrs.items()}
        return store.with_entity(eid, Entity(self.type, attrs))


@dataclass(frozen=True)
class Update:
    """Set (or, with ``op="add"``, increment) one attribute."""

    id: Any
    attr: str
    value: Any
    op: str = "set"

    def apply(self, store: ContextStore, event: Event) -> ContextStore:
        eid = _resolve(self.id, event)
        ent = store.get(eid)
        if ent is None:
            raise EffectError(f"update of missing entity {eid!r}")
        value = _resolve(self.value, event)
        attrs = dict(ent.attrs)
        if self.op == "add":
            attrs[self.attr] = attrs.get(self.attr, 0) + value
        elif self.op == "set":
            attrs[self.attr] = value
        else:
            raise EffectError(f"unknown update op {self.op!r}")
        return store.with_entity(eid, Entity(ent.type, attrs))


@dataclass(frozen=True)
class Delete:
    id: Any

    def apply(self, store: ContextStore, event: Event) -> ContextStore:
        eid = _resolve(self.id, event)
        if eid not in store:
            raise EffectError(f"delete of missing entity {eid!r}")
        return store.without(eid)


@dataclass(frozen=True)
class EffectRule:
    """Mutations applied when an event named ``event`` with ``arity`` payload values fires."""

    event: str
    arity: int
    actions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))

    def matches(self, event: Event) -> bool:
        return event.name == self.event and len(event.payload) == self.arity


def apply_effects(store: ContextStore, event: Event, rules: Iterable[EffectRule]) -> ContextStore:
    for rule in rules:
        if rule.matches(event):
            for action in rule.actions:
                store = action.apply(store, event)
    return store


def _default_inject(initial, eid):
    return eid if initial is None else (eid, initial)


@dataclass(frozen=True)
class ContextBinding:
    """Spawn one live copy of ``template`` per answer of ``query``.

    The copy's start datum is ``inject(template.initial, entity_id)``; by
    default the bare id when ``initial`` is ``None``, else ``(id, initial)``.
    """

    query: Query
    template: BThreadSpec
    inject: Callable = field(default=_default_inject, compare=False)


def empty_store() -> ContextStore:
    return ContextStore()


def binding_answers(state: ProgramState, store: ContextStore) -> list[set[str]]:
    return [set(evaluate_query(store, b.query)) for b in state.program.bindings]


def spawn_live_copies(state: ProgramState, store: ContextStore) -> ProgramState:
    """Start a copy for every (binding, answer) not yet claimed.

    A key stays claimed while its answer persists or its copy is still live,
    so each (binding, answer) has at most one live copy.
    """
    bindings = state.program.bindings
    if not bindings:
        return state._replace(store=store)
    answers = binding_answers(state, store)
    live = {t.binding for t in state.threads if t.binding is not None}
    claimed = {k for k in state.claimed if k in live or k[1] in answers[k[0]]}
    threads = list(state.threads)
    for bi, binding in enumerate(bindings):
        for eid in sorted(answers[bi]):
            key = (bi, eid)
            if key in claimed:
                continue
            claimed.add(key)
            tmpl = binding.template
            copy = start_thread(tmpl, store, name=f"{tmpl.name}[{eid}]",
                                data=binding.inject(tmpl.initial, eid), binding=key)
            if copy is not None:
                threads.append(copy)
    return state._replace(threads=tuple(threads), store=store, claimed=frozenset(claimed))
