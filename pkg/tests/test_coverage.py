import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from bpcover.coverage import (CoverageSpec, TestSuite, covers, exact_min_suite, feasible_targets,
                              greedy_suite, permutation_cover, permutation_lts,
                              permutation_targets, project, report_json, suite_covers)
from bpcover.events import Event
from bpcover.explorer import Lts, enumerate_words, explore
from bpcover.models import alternation, elevator
from bpcover.regex import TruncatedLtsError
from bpcover.engine import BProgram, requester
from bpcover.events import ev

from oracles import dfa_words, min_suite_size, random_dfa, targets_of_words


def lts_from(n, edges, accepting):
    return Lts(n, [(s, Event(lab), t) for (s, lab), t in edges.items()], accepting,
               check_reachable=False)


def names(word):
    return tuple(e.name for e in word)


def test_covers_is_subsequence():
    w = [ev("a"), ev("b", 1), ev("c"), ev("b", 2)]
    assert covers(w, ("a", "b"))
    assert covers(w, ("b", "b"))
    assert not covers(w, ("c", "a"))
    assert covers(w, ())


def test_project_keeps_order_and_payloads():
    w = (ev("a"), ev("b", 1), ev("c"), ev("b", 2))
    assert project(w, {"b"}) == (ev("b", 1), ev("b", 2))
    assert project(w, set()) == ()
    assert project(w, {"a", "c"}) == (ev("a"), ev("c"))


def test_project_examples():
    def word(text):
        return tuple(ev(c) for c in text)

    assert project(word("bacd"), {"a", "b"}) == word("ba")
    assert project(word("abc"), set()) == ()
    assert project(word("abcabc"), {"a", "c"}) == word("acac")


def test_alternation_targets():
    lts = explore(alternation(), 20)
    assert feasible_targets(lts, 2) == [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]
    suite = greedy_suite(lts, 2)
    assert suite.size == 1 and names(suite.words[0]) == ("a", "b") * 3


def test_truncated_lts_refused():
    chain = BProgram([requester("x", *[ev("s", i) for i in range(6)])])
    with pytest.raises(TruncatedLtsError):
        feasible_targets(explore(chain, 3), 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 6), st.integers(1, 3), st.booleans())
def test_feasible_targets_match_brute_force(seed, n, t, distinct):
    rng = random.Random(seed)
    n_states, edges, acc = random_dfa(rng, n, ("a", "b", "c"), acyclic=True)
    lts = lts_from(n_states, edges, acc)
    words = dfa_words(n_states, edges, acc, n_states)
    spec = CoverageSpec(t, ("a", "b", "c"), distinct)
    assert set(feasible_targets(lts, spec)) == targets_of_words(words, t, distinct)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 6), st.integers(1, 2))
def test_greedy_complete_and_exact_optimal(seed, n, t):
    rng = random.Random(seed)
    n_states, edges, acc = random_dfa(rng, n, ("a", "b", "c"), acyclic=True)
    lts = lts_from(n_states, edges, acc)
    targets = feasible_targets(lts, t)
    greedy = greedy_suite(lts, t)
    exact = exact_min_suite(lts, t)
    assert not greedy.check(lts) and not exact.check(lts)
    assert suite_covers(greedy, targets).complete and suite_covers(exact, targets).complete
    words = dfa_words(n_states, edges, acc, n_states)
    assert exact.size == min_suite_size(words, targets) <= greedy.size


def test_elevator_suites():
    lts = explore(elevator(), 60)
    for t in (1, 2):
        targets = feasible_targets(lts, t)
        g, x = greedy_suite(lts, t), exact_min_suite(lts, t)
        assert suite_covers(g, targets).complete and suite_covers(x, targets).complete
        assert x.size <= g.size


def test_exact_budget_exhaustion_returns_none():
    lts = explore(elevator(), 60)
    assert exact_min_suite(lts, 2, budget=5) is None


def test_permutation_lts_language():
    lts = permutation_lts("abc")
    got = {names(w) for w in enumerate_words(lts, 3)}
    assert got == set(permutation_targets("abc", 3))


def test_permutation_exact_sizes():
    letters = [f"e{i}" for i in range(6)]
    spec = CoverageSpec(2, tuple(letters), distinct=True)
    assert exact_min_suite(permutation_lts(letters), spec).size == 2
    spec = CoverageSpec(3, ("a", "b", "c", "d"), distinct=True)
    assert exact_min_suite(permutation_lts("abcd"), spec).size == 6


@pytest.mark.parametrize("n,t", [(4, 2), (5, 3), (6, 3)])
def test_permutation_cover_complete(n, t):
    letters = [f"e{i}" for i in range(n)]
    suite = permutation_cover(letters, t, seed=1)
    assert not suite.check()
    assert suite_covers(suite, permutation_targets(letters, t)).complete
    assert permutation_cover(letters, t, seed=1) == suite


def test_permutation_cover_rejects_bad_strength():
    with pytest.raises(ValueError):
        permutation_cover("abc", 4)
    with pytest.raises(ValueError):
        permutation_cover("aab", 2)


def test_suite_json_round_trip():
    lts = explore(elevator(), 60)
    suite = greedy_suite(lts, 2)
    again = TestSuite.from_json(suite.to_json())
    assert again == suite
    doc = report_json(2, feasible_targets(lts, 2), suite)
    assert doc["missing"] == [] and doc["covered"] == doc["targets"]
    assert TestSuite.from_json({"suite": [["a", "b"]]}).words == ((ev("a"), ev("b")),)
    with pytest.raises(ValueError):
        TestSuite.from_json({})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 7), st.integers(1, 2), st.booleans())
def test_longer_targets_extend_feasible_ones(seed, n, t, acyclic):
    rng = random.Random(seed)
    lts = lts_from(*random_dfa(rng, n, ("a", "b", "c"), acyclic=acyclic))
    shorter = set(feasible_targets(lts, t))
    assert {x[:t] for x in feasible_targets(lts, t + 1)} <= shorter


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 8), st.booleans())
def test_tiny_search_budget_still_covers(seed, n, acyclic):
    rng = random.Random(seed)
    lts = lts_from(*random_dfa(rng, n, ("a", "b", "c", "d"), acyclic=acyclic))
    suite = greedy_suite(lts, 3, budget=1)
    assert not suite.check(lts)
    assert suite_covers(suite, feasible_targets(lts, 3)).complete


def test_permutation_projections_give_every_ordering():
    letters = [f"e{i}" for i in range(6)]
    suite = permutation_cover(letters, 3, seed=2)
    for sub in itertools.combinations(letters, 3):
        got = {names(project(w, sub)) for w in suite.words}
        assert got == set(itertools.permutations(sub))
