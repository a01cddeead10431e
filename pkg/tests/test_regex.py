import random

import pytest
from hypothesis import given, settings, strategies as st

from bpcover.events import Event
from bpcover.explorer import Lts, enumerate_words, explore
from bpcover.models import alternation, elevator, mutual_block, philosophers
from bpcover.regex import (EMPTY, EPSILON, Lit, TruncatedLtsError, alt, cat, generate, matches,
                           render, star, to_regex)
from bpcover.engine import BProgram, requester
from bpcover.events import ev

from oracles import dfa_words, random_dfa


def lts_from(n, edges, accepting):
    return Lts(n, [(s, Event(lab), t) for (s, lab), t in edges.items()], accepting,
               check_reachable=False)


def labels(words):
    return {tuple(e.label for e in w) for w in words}


def test_smart_constructors():
    a, b = Lit("a"), Lit("b")
    assert cat(a, EPSILON, b) == cat(a, b)
    assert cat(a, EMPTY) is EMPTY
    assert alt(a, EMPTY) == a and alt(b, a) == alt(a, b)
    assert star(star(a)) == star(a) and star(EPSILON) is EPSILON
    assert alt(EPSILON, star(a)) == star(a)
    assert render(cat(alt(a, b), star(a))) == "(a | b) a*"


def test_one_shot_choice():
    lts = Lts(3, [(0, Event("a"), 1), (0, Event("b"), 2)], accepting=[1, 2])
    assert render(to_regex(lts)) == "a | b"


def test_self_loop():
    lts = Lts(1, [(0, Event("a"), 0)], accepting=[0])
    assert render(to_regex(lts)) == "a*"


def test_empty_language():
    assert to_regex(explore(mutual_block(), 4)) is EMPTY


def test_generate_bounded():
    r = cat(Lit("a"), star(alt(Lit("b"), Lit("c"))))
    assert generate(r, 2) == {("a",), ("a", "b"), ("a", "c")}
    assert generate(EPSILON, 0) == {()}
    assert generate(EMPTY, 5) == set()


def test_truncated_refused():
    chain = BProgram([requester("x", *[ev("s", i) for i in range(6)])])
    with pytest.raises(TruncatedLtsError):
        to_regex(explore(chain, 3))


@pytest.mark.parametrize("make", [alternation, elevator, mutual_block,
                                  lambda: philosophers()], ids=["alt", "elev", "block", "phil"])
def test_fixture_languages(make):
    lts = explore(make(), 60, accept_quiescent=make is not alternation)
    r = to_regex(lts)
    assert generate(r, 8) == labels(enumerate_words(lts, 8))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 6), st.booleans())
def test_random_automata_round_trip(seed, n, acyclic):
    rng = random.Random(seed)
    n_states, edges, acc = random_dfa(rng, n, ("a", "b", "c"), acyclic=acyclic)
    lts = lts_from(n_states, edges, acc)
    r = to_regex(lts)
    want = dfa_words(n_states, edges, acc, 6)
    assert generate(r, 6) == want
    # and Python's matcher agrees on every word up to length 4 over the alphabet
    rng2 = random.Random(seed + 1)
    for _ in range(30):
        w = tuple(rng2.choice("abc") for _ in range(rng2.randint(0, 4)))
        assert matches(r, w) == (w in want)
