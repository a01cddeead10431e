"""t-way sequence coverage over the language of an LTS.

A target ``(s1, ..., st)`` of event names is covered by a word when it is a
(not necessarily contiguous) subsequence of the word. A suite ``L'`` covers
the language ``L`` when every target covered by some word of ``L`` is
covered by some word of ``L'``. Payloads are erased: targets range over
event names.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .events import Event
from .explorer import Lts
from .regex import TruncatedLtsError

Target = tuple  # of event names


def _name(x) -> str:
    return x.name if isinstance(x, Event) else x


def covers(word: Iterable, target: Sequence[str]) -> bool:
    """True iff ``target`` is a subsequence of ``word``."""
    it = iter(word)
    for want in target:
        for x in it:
            if _name(x) == want:
                break
        else:
            return False
    return True


def project(word: Sequence, sub: Iterable[str]) -> tuple:
    """The subword of ``word`` keeping exactly the elements named in ``sub``.

    Keep the head if its name is in ``sub``, then project the tail.
    """
    sub = set(sub)
    out = []
    for i in range(len(word)):
        if _name(word[i]) in sub:
            out.append(word[i])
    return tuple(out)


@dataclass(frozen=True)
class CoverageSpec:
    t: int
    alphabet: tuple | None = None
    distinct: bool = False

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("coverage strength must be positive")
        if self.alphabet is not None:
            object.__setattr__(self, "alphabet", tuple(self.alphabet))
            if self.distinct and self.t > len(self.alphabet):
                raise ValueError("distinct targets need t <= alphabet size")

    def resolve(self, lts: Lts) -> CoverageSpec:
        if self.alphabet is not None:
            return self
        return CoverageSpec(self.t, tuple(lts.alphabet), self.distinct)


@dataclass(frozen=True)
class TestSuite:
    """Accepted event words; ``source`` is ``"lts"`` or ``"permutation"``."""

    __test__ = False

    words: tuple
    source: str = "lts"
    alphabet: tuple = ()
    t: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(tuple(w) for w in self.words))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def total_length(self) -> int:
        return sum(len(w) for w in self.words)

    def check(self, lts: Lts | None = None) -> list[int]:
        """Indices of words not accepted by the source language."""
        bad = []
        for i, w in enumerate(self.words):
            if self.source == "permutation":
                names = [_name(x) for x in w]
                if sorted(names) != sorted(self.alphabet):
                    bad.append(i)
            elif lts is not None and not lts.accepts(w):
                bad.append(i)
        return bad

    def to_json(self) -> dict:
        doc = {"source": self.source,
               "words": [[e.label if isinstance(e, Event) else e for e in w] for w in self.words]}
        if self.alphabet:
            doc["alphabet"] = list(self.alphabet)
        if self.t is not None:
            doc["t"] = self.t
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> TestSuite:
        words = doc.get("words", doc.get("suite"))
        if words is None:
            raise ValueError("suite document has neither 'words' nor 'suite'")
        return cls(tuple(tuple(Event.parse(x) for x in w) for w in words),
                   doc.get("source", "lts"), tuple(doc.get("alphabet", ())), doc.get("t"))


@dataclass(frozen=True)
class CoverageReport:
    covered: tuple
    missing: tuple

    @property
    def complete(self) -> bool:
        return not self.missing


def suite_covers(suite: TestSuite | Iterable, targets: Iterable[Target]) -> CoverageReport:
    words = suite.words if isinstance(suite, TestSuite) else tuple(suite)
    covered, missing = [], []
    for target in targets:
        (covered if any(covers(w, target) for w in words) else missing).append(tuple(target))
    return CoverageReport(tuple(covered), tuple(missing))


def report_json(t: int, targets: Sequence[Target], suite: TestSuite,
                report: CoverageReport | None = None) -> dict:
    """Coverage report document: counts, missing targets and the suite itself."""
    report = report or suite_covers(suite, targets)
    return {
        "t": t,
        "targets": len(targets),
        "covered": len(report.covered),
        "missing": [list(m) for m in report.missing],
        "suite": suite.to_json()["words"],
        "suite_size": suite.size,
        "total_length": suite.total_length,
    }


def _refuse_truncated(lts: Lts):
    if lts.truncated:
        raise TruncatedLtsError(
            f"LTS is truncated at states {sorted(lts.truncated)}; its language is incomplete")


def coreachable(lts: Lts) -> set[int]:
    """States from which some accepting state is reachable."""
    back: dict[int, list[int]] = {}
    for a, _, b in lts.transitions:
        back.setdefault(b, []).append(a)
    seen = set(lts.accepting)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for p in back.get(s, ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def feasible_targets(lts: Lts, spec: CoverageSpec | int) -> list[Target]:
    """Targets covered by at least one accepted word, in canonical order.

    Computed on the product of the LTS with a monitor that records the
    subsequence prefixes (length at most t) collected so far.
    """
    _refuse_truncated(lts)
    spec = (CoverageSpec(spec) if isinstance(spec, int) else spec).resolve(lts)
    t = spec.t
    alphabet = set(spec.alphabet)
    live = coreachable(lts)
    if lts.initial not in live:
        return []
    seen = {(lts.initial, ())}
    queue = deque(seen)
    found = set()
    while queue:
        s, prefix = queue.popleft()
        if len(prefix) == t:
            found.add(prefix)
        for e, nxt in lts.out(s).items():
            if nxt not in live:
                continue
            options = [prefix]
            if len(prefix) < t and e.name in alphabet and not (spec.distinct and e.name in prefix):
                options.append(prefix + (e.name,))
            for p in options:
                node = (nxt, p)
                if node not in seen:
                    seen.add(node)
                    queue.append(node)
    return sorted(found)


class BudgetExceeded(Exception):
    pass


class _Monitor:
    """Progress vectors of a fixed target list."""

    def __init__(self, targets: Sequence[Target]):
        self.targets = [tuple(x) for x in targets]
        self.t = max((len(x) for x in self.targets), default=0)
        self.by_name: dict[str, list[int]] = {}
        for i, target in enumerate(self.targets):
            for name in set(target):
                self.by_name.setdefault(name, []).append(i)
        self.lengths = [len(x) for x in self.targets]

    def advance(self, vec: tuple, name: str) -> tuple:
        idx = self.by_name.get(name)
        if not idx:
            return vec
        new = None
        for i in idx:
            p = vec[i]
            if p < self.lengths[i] and self.targets[i][p] == name:
                if new is None:
                    new = list(vec)
                new[i] = p + 1
        return vec if new is None else tuple(new)

    def mask(self, vec: tuple) -> int:
        m = 0
        for i, p in enumerate(vec):
            if p == self.lengths[i]:
                m |= 1 << i
        return m


def _dominated(vec: tuple, earlier) -> bool:
    """Whether some row of ``earlier`` (tuples, or an array when large) is componentwise >= ``vec``."""
    if earlier is None:
        return False
    if isinstance(earlier, list):
        return any(all(a >= b for a, b in zip(other, vec)) for other in earlier)
    return bool(np.all(earlier >= np.asarray(vec, dtype=np.int8), axis=1).any())


def _product_words(lts: Lts, targets: Sequence[Target], budget: list[int],
                   stop_when_full: bool = False, best: dict | None = None) -> dict[int, tuple]:
    """Breadth-first search of LTS x monitor; shortest, then lexicographically least word per mask.

    A node whose progress vector is dominated by one reached at the same LTS
    state in a strictly earlier layer is pruned: the earlier node reaches a
    superset of targets with a strictly shorter word along any continuation.
    ``budget[0]`` is decremented per expanded node. Words found so far are
    left in ``best`` when the budget runs out.
    """
    best = {} if best is None else best
    mon = _Monitor(targets)
    full = (1 << len(mon.targets)) - 1
    live = coreachable(lts)
    if lts.initial not in live:
        return {}
    root = (lts.initial, tuple(0 for _ in mon.targets))
    parent: dict = {root: None}
    history: dict[int, list[tuple]] = {}
    frozen: dict = {}
    layer = [root]
    while layer:
        touched = set()
        for node in layer:
            history.setdefault(node[0], []).append(node[1])
            touched.add(node[0])
        for state in touched:
            rows = history[state]
            frozen[state] = list(rows) if len(rows) <= 16 else np.array(rows, dtype=np.int8)
        nxt_layer = []
        for node in layer:
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded()
            s, vec = node
            if s in lts.accepting:
                m = mon.mask(vec)
                if m not in best:
                    best[m] = _word(parent, node)
                    if stop_when_full and m == full:
                        return {m: best[m]}
            for e, t in lts.out(s).items():
                if t not in live:
                    continue
                child = (t, mon.advance(vec, e.name))
                if child in parent:
                    continue
                if _dominated(child[1], frozen.get(t)):
                    continue
                parent[child] = (node, e)
                nxt_layer.append(child)
        layer = nxt_layer
    return best


def _word(parent: dict, node) -> tuple:
    out = []
    while parent[node] is not None:
        node, e = parent[node]
        out.append(e)
    return tuple(reversed(out))


def _word_key(word) -> tuple:
    return (len(word), tuple(e.key for e in word))


def _shortest_completion(lts: Lts, live: set[int], start: int, rest: Target) -> tuple | None:
    """Shortest, then lexicographically least, path from ``start`` that contains ``rest``."""
    root = (start, 0)
    parent: dict = {root: None}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        s, j = node
        if j == len(rest):
            return _word(parent, node)
        for e, t in sorted(lts.out(s).items()):
            if t not in live:
                continue
            child = (t, j + 1 if e.name == rest[j] else j)
            if child not in parent:
                parent[child] = (node, e)
                queue.append(child)
    return None


def _built_word(lts: Lts, targets: Sequence[Target], live: set[int]) -> tuple:
    """An accepted word grown by appending the shortest path that completes one more target."""
    state, word = lts.initial, []
    progress = [0] * len(targets)
    while True:
        best = None
        for i, target in enumerate(targets):
            if progress[i] == len(target):
                continue
            path = _shortest_completion(lts, live, state, target[progress[i]:])
            if path is not None and (best is None or _word_key(path) < _word_key(best)):
                best = path
        if best is None:
            break
        for e in best:
            state = lts.out(state)[e]
            word.append(e)
            for i, target in enumerate(targets):
                if progress[i] < len(target) and target[progress[i]] == e.name:
                    progress[i] += 1
    # close the word at the nearest accepting state
    parent: dict = {state: None}
    queue = deque([state])
    while queue:
        s = queue.popleft()
        if s in lts.accepting:
            return tuple(word) + _word(parent, s)
        for e, t in sorted(lts.out(s).items()):
            if t in live and t not in parent:
                parent[t] = (s, e)
                queue.append(t)
    raise RuntimeError("no accepting state reachable from a live state")


def greedy_suite(lts: Lts, spec: CoverageSpec | int, budget: int = 5_000) -> TestSuite:
    """Repeatedly add the accepted word covering the most uncovered targets.

    Ties go to the shortest word, then the lexicographically least. Each
    round searches the LTS x monitor product for at most ``budget`` nodes;
    past that the round also considers a word grown target by target and
    keeps whichever candidate covers more, so every round makes progress.
    """
    _refuse_truncated(lts)
    spec = (CoverageSpec(spec) if isinstance(spec, int) else spec).resolve(lts)
    remaining = feasible_targets(lts, spec)
    live = coreachable(lts)
    words = []
    while remaining:
        found: dict[int, tuple] = {}
        try:
            _product_words(lts, remaining, [budget], stop_when_full=True, best=found)
        except BudgetExceeded:
            word = _built_word(lts, remaining, live)
            mask = sum(1 << i for i, x in enumerate(remaining) if covers(word, x))
            if mask not in found or _word_key(word) < _word_key(found[mask]):
                found[mask] = word
        mask, word = min(found.items(),
                         key=lambda kv: (-bin(kv[0]).count("1"),) + _word_key(kv[1]))
        if mask == 0:
            raise RuntimeError("no accepted word covers any remaining feasible target")
        words.append(word)
        remaining = [x for i, x in enumerate(remaining) if not mask >> i & 1]
    return TestSuite(tuple(words), "lts", spec.alphabet, spec.t)


def exact_min_suite(lts: Lts, spec: CoverageSpec | int, budget: int = 2_000_000) -> TestSuite | None:
    """Fewest words (then least total length) covering every feasible target, or ``None``.

    Shortest representatives per achievable coverage set come from the
    product search; an exhaustive branch-and-bound set cover then picks the
    optimum. ``budget`` caps product nodes plus search nodes; ``None`` means
    it ran out before optimality was proven.
    """
    _refuse_truncated(lts)
    spec = (CoverageSpec(spec) if isinstance(spec, int) else spec).resolve(lts)
    targets = feasible_targets(lts, spec)
    if not targets:
        return TestSuite((), "lts", spec.alphabet, spec.t)
    left = [budget]
    try:
        found = _product_words(lts, targets, left)
        chosen = _min_cover(found, (1 << len(targets)) - 1, left)
    except BudgetExceeded:
        return None
    words = sorted(chosen, key=_word_key)
    return TestSuite(tuple(words), "lts", spec.alphabet, spec.t)


def _min_cover(options: dict[int, tuple], full: int, left: list[int]) -> list[tuple]:
    """Exact minimum-cardinality, then minimum-total-length cover of ``full``."""
    items = sorted(((m, len(w), w) for m, w in options.items() if m),
                   key=lambda x: (-bin(x[0]).count("1"), x[1], tuple(e.key for e in x[2])))
    pruned = []
    for m, n, w in items:
        if any((m2 | m) == m2 and n2 <= n for m2, n2, _ in pruned):
            continue
        pruned.append((m, n, w))
    by_bit: dict[int, list[int]] = {}
    for j, (m, _, _) in enumerate(pruned):
        x = m
        while x:
            low = x & -x
            by_bit.setdefault(low.bit_length() - 1, []).append(j)
            x ^= low
    popcount = [bin(m).count("1") for m, _, _ in pruned]
    max_gain = max(popcount, default=0)
    min_len = min((n for _, n, _ in pruned), default=0)

    memo: dict[tuple[int, int], float] = {}

    def solve(uncovered: int, k: int, bound: float):
        """Least total length covering ``uncovered`` with at most ``k`` words, if below ``bound``."""
        if uncovered == 0:
            return 0, []
        if k == 0:
            return None
        need = bin(uncovered).count("1")
        if max_gain * k < need:
            return None
        key = (uncovered, k)
        floor = memo.get(key, 0)
        if floor >= bound or min_len >= bound:
            return None
        left[0] -= 1
        if left[0] < 0:
            raise BudgetExceeded()
        pivot = None
        x = uncovered
        while x:
            low = x & -x
            bit = low.bit_length() - 1
            cands = by_bit.get(bit, [])
            if pivot is None or len(cands) < len(pivot):
                pivot = cands
            x ^= low
        best = None
        ranked = sorted(pivot, key=lambda j: (-bin(pruned[j][0] & uncovered).count("1"),
                                              pruned[j][1], j))
        local_bound = bound
        for j in ranked:
            m, n, w = pruned[j]
            if n >= local_bound:
                continue
            rest = solve(uncovered & ~m, k - 1, local_bound - n)
            if rest is not None:
                total = n + rest[0]
                if total < local_bound:
                    local_bound = total
                    best = (total, [w] + rest[1])
        if best is None:
            memo[key] = max(floor, bound)
        return best

    k = 1
    while True:
        out = solve(full, k, float("inf"))
        if out is not None:
            return out[1]
        k += 1
        if k > len(pruned):
            raise RuntimeError("feasible targets cannot be covered")


# -- permutation languages -----------------------------------------------------

def permutation_targets(alphabet: Sequence[str], t: int) -> list[Target]:
    return sorted(itertools.permutations(alphabet, t))


def permutation_lts(alphabet: Sequence[str]) -> Lts:
    """The LTS whose accepted words are exactly the permutations of ``alphabet``."""
    letters = sorted(alphabet)
    n = len(letters)
    ids = {0: 0}
    order = [0]
    transitions = []
    queue = deque([0])
    while queue:
        used = queue.popleft()
        for i, name in enumerate(letters):
            if used >> i & 1:
                continue
            nxt = used | 1 << i
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            transitions.append((ids[used], Event(name), ids[nxt]))
    return Lts(len(order), transitions, [ids[(1 << n) - 1]])


def permutation_cover(alphabet: Sequence[str], t: int, candidates: int = 200,
                      seed: int = 0) -> TestSuite:
    """Greedy suite of permutations covering every ordered t-tuple of distinct letters.

    Each round scores the reverses of chosen words, ``candidates`` random
    permutations and a swap-based hill climb from the best of them, and keeps
    the permutation covering the most uncovered tuples.
    """
    letters = list(alphabet)
    n = len(letters)
    if len(set(letters)) != n:
        raise ValueError("alphabet letters must be distinct")
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= |alphabet|, got t={t}, |alphabet|={n}")
    tuples = np.array(list(itertools.permutations(range(n), t)), dtype=np.int64)
    uncovered = np.ones(len(tuples), dtype=bool)
    rng = np.random.default_rng(seed)

    def gain_mask(perm: np.ndarray) -> np.ndarray:
        pos = np.empty(n, dtype=np.int64)
        pos[perm] = np.arange(n)
        p = pos[tuples]
        return np.all(p[:, :-1] < p[:, 1:], axis=1) & uncovered

    def score(perm):
        return int(gain_mask(perm).sum())

    chosen: list[np.ndarray] = []
    while uncovered.any():
        if not chosen:
            best = np.arange(n)
        else:
            pool = [c[::-1].copy() for c in chosen]
            pool += [rng.permutation(n) for _ in range(candidates)]
            scored = [(score(p), tuple(-x for x in p), p) for p in pool]
            best_score, _, best = max(scored, key=lambda s: (s[0], s[1]))
            best = _hill_climb(best, best_score, score)
        chosen.append(best)
        uncovered &= ~gain_mask(best)
    words = tuple(tuple(Event(letters[i]) for i in perm) for perm in chosen)
    return TestSuite(words, "permutation", tuple(letters), t)


def _hill_climb(perm: np.ndarray, current: int, score) -> np.ndarray:
    perm = perm.copy()
    n = len(perm)
    improved = True
    while improved:
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                perm[i], perm[j] = perm[j], perm[i]
                s = score(perm)
                if s > current:
                    current = s
                    improved = True
                else:
                    perm[i], perm[j] = perm[j], perm[i]
    return perm
