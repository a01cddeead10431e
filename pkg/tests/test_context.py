import random

import pytest

from bpcover.context import (ContextBinding, ContextStore, Delete, EffectError, EffectRule, Entity,
                             Insert, Param, Query, QueryError, Update, apply_effects, evaluate_query,
                             load_store)
from bpcover.engine import (BProgram, BThreadSpec, EngineFault, FirstLexicographic, UniformRandom,
                            requester, run, sync, TERMINATED)
from bpcover.events import EventSet, ev
from bpcover.explorer import explore

from engine_checks import program_of
from oracles import random_scripts


def store_of(**ents):
    return ContextStore({k: Entity(t, a) for k, (t, a) in ents.items()})


def test_query_is_conjunctive_and_sorted():
    s = store_of(b=("User", {"age": 30, "plan": "x"}), a=("User", {"age": 20, "plan": "x"}),
                 c=("User", {"age": 40, "plan": "y"}), d=("Phone", {"age": 1}))
    q = Query("q", "User", [("plan", "=", "x"), ("age", "<", 35)])
    assert evaluate_query(s, q) == ["a", "b"]
    assert evaluate_query(s, Query("q", "User", [("plan", "!=", "x")])) == ["c"]
    assert evaluate_query(s, Query("q", "User", [("age", "<=", 20)])) == ["a"]


def test_query_unknown_attribute_raises():
    with pytest.raises(QueryError):
        evaluate_query(store_of(a=("User", {})), Query("q", "User", [("age", "=", 1)]))


def test_effects_insert_update_delete():
    rules = [EffectRule("add", 1, [Insert(Param(0), "User", {"bill": 0})]),
             EffectRule("pay", 2, [Update(Param(0), "bill", Param(1), "add")]),
             EffectRule("drop", 1, [Delete(Param(0))])]
    s = ContextStore()
    s = apply_effects(s, ev("add", "u1"), rules)
    s = apply_effects(s, ev("pay", "u1", 5), rules)
    s = apply_effects(s, ev("pay", "u1", 2), rules)
    assert s["u1"].attrs == {"bill": 7}
    assert apply_effects(s, ev("pay", "u1"), rules) == s  # arity mismatch: rule does not apply
    assert "u1" not in apply_effects(s, ev("drop", "u1"), rules)
    with pytest.raises(EffectError):
        apply_effects(s, ev("add", "u1"), rules)


def test_store_is_immutable_and_json_round_trips():
    s = store_of(a=("User", {"tags": ["x", "y"], "n": 1}))
    t = s.with_entity("b", Entity("User", {}))
    assert "b" not in s and "b" in t
    assert load_store(t.to_json()) == t
    with pytest.raises(TypeError):
        store_of(a=("User", {"bad": {"nested": 1}}))


def _users_program(template, with_delete=False):
    effects = [EffectRule("add", 1, [Insert(Param(0), "User")])]
    if with_delete:
        effects.append(EffectRule("drop", 1, [Delete(Param(0))]))
    return BProgram(threads=[requester("env", ev("add", "u1"), ev("add", "u2"),
                                       ev("drop", "u1"))],
                    bindings=[ContextBinding(Query("users", "User"), template)],
                    effects=effects)


def test_one_copy_per_answer_with_injected_id():
    hello = BThreadSpec("hello", lambda uid, cause: (sync(request=ev("hi", uid)), uid)
                        if cause is None else TERMINATED)
    trace = run(_users_program(hello), FirstLexicographic())
    assert trace.labels.count('hi("u1")') == 1 and trace.labels.count('hi("u2")') == 1


def test_copy_terminates_when_its_answer_disappears():
    pinger = BThreadSpec("p", lambda uid, cause: (sync(request=ev("ping", uid)), uid))
    lts = explore(_users_program(pinger, with_delete=True), 12)
    drops = [b for a, e, b in lts.transitions if e == ev("drop", "u1")]
    assert drops
    stack, seen = list(drops), set(drops)
    while stack:
        s = stack.pop()
        for e, nxt in lts.out(s).items():
            assert e != ev("ping", "u1")
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)


def test_context_aware_thread_reads_snapshot():
    seen = []

    def watcher(local, cause, store):
        seen.append(tuple(store.ids_of_type("User")))
        return sync(wait=EventSet.named("add")), None

    prog = BProgram(threads=[requester("env", ev("add", "u1")),
                             BThreadSpec("watch", watcher, None, context_aware=True)],
                    effects=[EffectRule("add", 1, [Insert(Param(0), "User")])])
    run(prog)
    assert seen == [(), ("u1",)]


def test_effect_error_is_an_engine_fault():
    prog = BProgram(threads=[requester("env", ev("x"))],
                    effects=[EffectRule("x", 0, [Update("ghost", "n", 1)])])
    with pytest.raises(EngineFault):
        run(prog)


def test_binding_free_programs_match_plain_engine():
    rng = random.Random(9)
    for k in range(30):
        plain = program_of(random_scripts(rng))
        ctx = BProgram(plain.threads, store=ContextStore(),
                       effects=[EffectRule("e0", 0, [Insert("seen", "Flag")]),
                                EffectRule("e0", 0, [Delete("seen")])])
        assert run(plain, UniformRandom(k), 300).events == run(ctx, UniformRandom(k), 300).events
