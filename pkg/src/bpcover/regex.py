"""Regular expressions over event labels and LTS-to-regex state elimination."""

from __future__ import annotations

import re
from functools import lru_cache

from .explorer import Lts


class TruncatedLtsError(ValueError):
    """Raised when an operation needs the complete language of a depth-truncated LTS."""


class Regex:
    __slots__ = ()
    prec = 3

    def __str__(self):
        return render(self)


class _Empty(Regex):
    __slots__ = ()

    def __repr__(self):
        return "EMPTY"


class _Epsilon(Regex):
    __slots__ = ()

    def __repr__(self):
        return "EPSILON"


EMPTY = _Empty()
EPSILON = _Epsilon()


class Lit(Regex):
    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label

    def __eq__(self, other):
        return isinstance(other, Lit) and other.label == self.label

    def __hash__(self):
        return hash(("lit", self.label))

    def __repr__(self):
        return f"Lit({self.label!r})"


class Cat(Regex):
    __slots__ = ("parts",)
    prec = 2

    def __init__(self, parts):
        self.parts = tuple(parts)

    def __eq__(self, other):
        return isinstance(other, Cat) and other.parts == self.parts

    def __hash__(self):
        return hash(("cat", self.parts))

    def __repr__(self):
        return f"Cat({list(self.parts)!r})"


class Alt(Regex):
    __slots__ = ("options",)
    prec = 1

    def __init__(self, options):
        self.options = tuple(options)

    def __eq__(self, other):
        return isinstance(other, Alt) and other.options == self.options

    def __hash__(self):
        return hash(("alt", self.options))

    def __repr__(self):
        return f"Alt({list(self.options)!r})"


class Star(Regex):
    __slots__ = ("inner",)

    def __init__(self, inner: Regex):
        self.inner = inner

    def __eq__(self, other):
        return isinstance(other, Star) and other.inner == self.inner

    def __hash__(self):
        return hash(("star", self.inner))

    def __repr__(self):
        return f"Star({self.inner!r})"


def cat(*parts: Regex) -> Regex:
    flat = []
    for p in parts:
        if p is EMPTY:
            return EMPTY
        if p is EPSILON:
            continue
        if isinstance(p, Cat):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return EPSILON
    if len(flat) == 1:
        return flat[0]
    return Cat(flat)


def alt(*options: Regex) -> Regex:
    flat = set()
    for o in options:
        if o is EMPTY:
            continue
        if isinstance(o, Alt):
            flat.update(o.options)
        else:
            flat.add(o)
    if EPSILON in flat and any(isinstance(o, Star) for o in flat):
        flat.discard(EPSILON)
    if not flat:
        return EMPTY
    if len(flat) == 1:
        return flat.pop()
    return Alt(sorted(flat, key=render))


def star(inner: Regex) -> Regex:
    if inner is EMPTY or inner is EPSILON:
        return EPSILON
    if isinstance(inner, Star):
        return inner
    if isinstance(inner, Alt) and EPSILON in inner.options:
        return star(alt(*(o for o in inner.options if o is not EPSILON)))
    return Star(inner)


def render(r: Regex) -> str:
    """Text form: juxtaposition by spaces, ``|``, postfix ``*``, ``ε`` and ``∅``."""
    if r is EMPTY:
        return "∅"
    if r is EPSILON:
        return "ε"
    if isinstance(r, Lit):
        return r.label

    def wrap(x: Regex, prec: int) -> str:
        text = render(x)
        return f"({text})" if x.prec < prec else text

    if isinstance(r, Cat):
        return " ".join(wrap(p, 3) for p in r.parts)
    if isinstance(r, Alt):
        return " | ".join(wrap(o, 2) for o in r.options)
    if isinstance(r, Star):
        return wrap(r.inner, 3) + "*"
    raise TypeError(r)


def to_regex(lts: Lts) -> Regex:
    """State elimination over a generalized automaton with fresh start and final nodes.

    Non-initial, non-accepting states are eliminated first in ascending id
    order, then the remaining states in ascending id order.
    """
    if lts.truncated:
        raise TruncatedLtsError("refusing to convert a depth-truncated LTS to a regex")
    start, final = "S", "F"
    edges: dict = {}

    def add(p, q, r):
        edges[(p, q)] = alt(edges.get((p, q), EMPTY), r)

    add(start, lts.initial, EPSILON)
    for s in lts.accepting:
        add(s, final, EPSILON)
    for a, e, b in lts.transitions:
        add(a, b, Lit(e.label))

    plain = [s for s in range(lts.n_states) if s != lts.initial and s not in lts.accepting]
    rest = [s for s in range(lts.n_states) if s == lts.initial or s in lts.accepting]
    for q in plain + rest:
        loop = star(edges.pop((q, q), EMPTY))
        incoming = [(p, r) for (p, x), r in edges.items() if x == q]
        outgoing = [(x, r) for (p, x), r in edges.items() if p == q]
        for p, _ in incoming:
            del edges[(p, q)]
        for x, _ in outgoing:
            del edges[(q, x)]
        for p, rin in incoming:
            for x, rout in outgoing:
                add(p, x, cat(rin, loop, rout))
    return edges.get((start, final), EMPTY)


def generate(regex: Regex, max_len: int) -> set[tuple[str, ...]]:
    """Every word of at most ``max_len`` literals denoted by ``regex``."""

    @lru_cache(maxsize=None)
    def words(r: Regex, k: int) -> frozenset:
        if r is EMPTY or k < 0:
            return frozenset()
        if r is EPSILON:
            return frozenset({()})
        if isinstance(r, Lit):
            return frozenset({(r.label,)}) if k >= 1 else frozenset()
        if isinstance(r, Alt):
            out = set()
            for o in r.options:
                out |= words(o, k)
            return frozenset(out)
        if isinstance(r, Cat):
            acc = {()}
            for p in r.parts:
                nxt = set()
                for w in acc:
                    for v in words(p, k - len(w)):
                        nxt.add(w + v)
                acc = nxt
                if not acc:
                    break
            return frozenset(acc)
        if isinstance(r, Star):
            pieces = [w for w in words(r.inner, k) if w]
            acc = {()}
            frontier = {()}
            while frontier:
                nxt = set()
                for w in frontier:
                    for v in pieces:
                        if len(w) + len(v) <= k:
                            u = w + v
                            if u not in acc:
                                nxt.add(u)
                acc |= nxt
                frontier = nxt
            return frozenset(acc)
        raise TypeError(r)

    return set(words(regex, max_len))


def literals(regex: Regex) -> set[str]:
    if isinstance(regex, Lit):
        return {regex.label}
    if isinstance(regex, Cat):
        return set().union(*(literals(p) for p in regex.parts))
    if isinstance(regex, Alt):
        return set().union(*(literals(o) for o in regex.options))
    if isinstance(regex, Star):
        return literals(regex.inner)
    return set()


def compile_pattern(regex: Regex, symbols: dict[str, str]) -> re.Pattern:
    """Compile to a Python ``re`` pattern where each label is one code point from ``symbols``."""

    def out(r: Regex) -> str:
        if r is EMPTY:
            return "(?!)"
        if r is EPSILON:
            return ""
        if isinstance(r, Lit):
            return re.escape(symbols[r.label])
        if isinstance(r, Cat):
            return "".join(f"(?:{out(p)})" for p in r.parts)
        if isinstance(r, Alt):
            return "(?:" + "|".join(out(o) for o in r.options) + ")"
        if isinstance(r, Star):
            return f"(?:{out(r.inner)})*"
        raise TypeError(r)

    return re.compile(out(regex))


def symbol_table(labels) -> dict[str, str]:
    return {label: chr(0xE000 + i) for i, label in enumerate(sorted(labels))}


def matches(regex: Regex, word, symbols: dict[str, str] | None = None) -> bool:
    """Whether the label sequence ``word`` is denoted by ``regex`` (via Python ``re``)."""
    word = list(word)
    symbols = symbols or symbol_table(literals(regex) | set(word))
    if any(w not in symbols for w in word):
        return False
    return compile_pattern(regex, symbols).fullmatch("".join(symbols[w] for w in word)) is not None
