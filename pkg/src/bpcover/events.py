"""Events, event sets and canonical serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

Scalar = str | int | bool

_RANK = {bool: 0, int: 1, str: 2}


def _scalar_key(value: Any) -> tuple:
    rank = _RANK.get(type(value))
    if rank is None:
        raise TypeError(f"event payload values must be str, int or bool, got {value!r}")
    return (rank, value)


class Event:
    """A named event with an ordered scalar payload.

    Equality and ordering are canonical: ``True`` and ``1`` are different
    payload values, and events sort by name, then payload element-wise.
    """

    __slots__ = ("name", "payload", "key", "_hash")

    def __init__(self, name: str, payload: Iterable[Scalar] = ()):
        if not isinstance(name, str) or not name:
            raise ValueError("event name must be a non-empty string")
        payload = tuple(payload)
        self.name = name
        self.payload = payload
        self.key = (name, tuple(_scalar_key(v) for v in payload))
        self._hash = hash(self.key)

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return self.key == other.key

    def __lt__(self, other: Event) -> bool:
        return self.key < other.key

    def __le__(self, other: Event) -> bool:
        return self.key <= other.key

    def __gt__(self, other: Event) -> bool:
        return self.key > other.key

    def __ge__(self, other: Event) -> bool:
        return self.key >= other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Event({self.label})"

    def __str__(self):
        return self.label

    def __canonical__(self):
        return self.key

    @property
    def label(self) -> str:
        """``name`` or ``name(args)`` with JSON-rendered arguments."""
        if not self.payload:
            return self.name
        args = json.dumps(list(self.payload), separators=(",", ":"))[1:-1]
        return f"{self.name}({args})"

    @classmethod
    def parse(cls, label: str) -> Event:
        """Inverse of :attr:`label`."""
        label = label.strip()
        if label.endswith(")") and "(" in label:
            name, _, rest = label.partition("(")
            try:
                payload = json.loads("[" + rest[:-1] + "]")
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed event label {label!r}") from exc
            return cls(name, payload)
        return cls(label)


def ev(name: str, *payload: Scalar) -> Event:
    return Event(name, payload)


class _Wildcard:
    __slots__ = ()

    def __repr__(self):
        return "ANY"

    def __canonical__(self):
        return "*"


#: Payload position wildcard for :class:`Pattern`.
ANY = _Wildcard()


@dataclass(frozen=True, eq=False)
class Pattern:
    """Predicate "events named ``name`` whose payload matches ``args``".

    ``name=None`` matches every name; ``args=None`` matches every payload;
    otherwise the arity must agree and each position is a literal or ``ANY``.
    """

    name: str | None = None
    args: tuple | None = None

    def __post_init__(self):
        if self.args is not None:
            object.__setattr__(self, "args", tuple(self.args))
            for a in self.args:
                if a is not ANY:
                    _scalar_key(a)

    def matches(self, event: Event) -> bool:
        if self.name is not None and event.name != self.name:
            return False
        if self.args is None:
            return True
        if len(self.args) != len(event.payload):
            return False
        for want, got in zip(self.args, event.payload):
            if want is ANY:
                continue
            if type(want) is not type(got) or want != got:
                return False
        return True

    @property
    def key(self) -> tuple:
        args = None if self.args is None else tuple(
            (-1,) if a is ANY else _scalar_key(a) for a in self.args)
        return (self.name or "", self.name is None, args is None, args or ())

    def __eq__(self, other):
        if not isinstance(other, Pattern):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __canonical__(self):
        return self.key

    def __str__(self):
        name = self.name or "*"
        if self.args is None:
            return f"{name}(*)"
        inner = ",".join("_" if a is ANY else json.dumps(a) for a in self.args)
        return f"{name}({inner})"


class EventSet:
    """A finite explicit set of events united with zero or more patterns."""

    __slots__ = ("explicit", "patterns", "_key")

    def __init__(self, explicit: Iterable[Event] = (), patterns: Iterable[Pattern] = ()):
        self.explicit = frozenset(explicit)
        self.patterns = tuple(sorted(set(patterns), key=lambda p: p.key))
        self._key = None

    @property
    def is_explicit(self) -> bool:
        return not self.patterns

    def __contains__(self, event: Event) -> bool:
        if event in self.explicit:
            return True
        for p in self.patterns:
            if p.matches(event):
                return True
        return False

    def __bool__(self):
        return bool(self.explicit or self.patterns)

    def __or__(self, other: EventSet) -> EventSet:
        other = as_event_set(other)
        return EventSet(self.explicit | other.explicit, self.patterns + other.patterns)

    def __iter__(self):
        if self.patterns:
            raise TypeError("cannot enumerate a predicate event set")
        return iter(sorted(self.explicit))

    def __len__(self):
        if self.patterns:
            raise TypeError("predicate event sets have no size")
        return len(self.explicit)

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = (tuple(sorted(e.key for e in self.explicit)),
                         tuple(p.key for p in self.patterns))
        return self._key

    def __canonical__(self):
        return self.key

    def __eq__(self, other):
        if not isinstance(other, EventSet):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        parts = [e.label for e in sorted(self.explicit)] + [str(p) for p in self.patterns]
        return "{" + ", ".join(parts) + "}"

    @classmethod
    def of(cls, *events: Event | str) -> EventSet:
        return cls(Event(e) if isinstance(e, str) else e for e in events)

    @classmethod
    def named(cls, *names: str) -> EventSet:
        """Every event whose name is one of ``names``, any payload."""
        return cls(patterns=[Pattern(n) for n in names])

    @classmethod
    def matching(cls, name: str | None, *args) -> EventSet:
        return cls(patterns=[Pattern(name, args)])


EMPTY = EventSet()
ALL = EventSet(patterns=[Pattern()])


def as_event_set(value: Any) -> EventSet:
    """Coerce ``None``, ``str``, :class:`Event`, :class:`Pattern` or an iterable of those."""
    if value is None:
        return EMPTY
    if isinstance(value, EventSet):
        return value
    if isinstance(value, Event):
        return EventSet((value,))
    if isinstance(value, str):
        return EventSet((Event(value),))
    if isinstance(value, Pattern):
        return EventSet(patterns=(value,))
    explicit, patterns = [], []
    for item in value:
        s = as_event_set(item)
        explicit.extend(s.explicit)
        patterns.extend(s.patterns)
    return EventSet(explicit, patterns)


def canonical(obj: Any) -> Any:
    """Hashable, order-independent structural key for a local-state value.

    Supports scalars, sequences, dicts, sets, events and any object with a
    ``__canonical__`` method. Anything else raises ``TypeError``.
    """
    t = type(obj)
    if obj is None:
        return ("n",)
    if t is bool:
        return ("b", obj)
    if t is int:
        return ("i", obj)
    if t is str:
        return ("s", obj)
    if t is float:
        return ("f", obj)
    if t is tuple or t is list:
        return ("l", tuple(canonical(x) for x in obj))
    if t is dict:
        return ("d", tuple(sorted((canonical(k), canonical(v)) for k, v in obj.items())))
    if t is frozenset or t is set:
        return ("S", tuple(sorted(canonical(x) for x in obj)))
    method = getattr(obj, "__canonical__", None)
    if method is not None:
        return ("o", t.__name__, method())
    raise TypeError(f"value of type {t.__name__} has no canonical serialization: {obj!r}")


def canonical_bytes(obj: Any) -> bytes:
    return repr(canonical(obj)).encode("utf-8")
