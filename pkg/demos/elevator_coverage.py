"""
Elevator: from b-threads to a covering test suite
=================================================

Four scenarios (car, door, door safety, parking) run side by side. We
expand them into a transition system, look at its language and pick a small
set of accepted words that covers every feasible 2-event ordering.
"""

from bpcover.coverage import exact_min_suite, feasible_targets, greedy_suite, suite_covers
from bpcover.engine import FirstLexicographic, UniformRandom, run
from bpcover.explorer import detect_deadlocks, explore, to_dot
from bpcover.models import elevator
from bpcover.regex import generate, render, to_regex

program = elevator(floors=3)

# "halt" sorts first, so the lexicographic run parks at once; a random run moves
print("first run:", " ".join(run(program, FirstLexicographic()).labels))
print("random run:", " ".join(run(program, UniformRandom(5), 12).labels))

# the whole state space; parking ends every run, so nothing is stuck
lts = explore(program, depth_bound=60)
print(f"{lts.n_states} states, {len(lts.transitions)} transitions, "
      f"deadlocks: {sorted(detect_deadlocks(lts))}")
print(to_dot(lts).splitlines()[0], "...")

# the same language as a regular expression
regex = to_regex(lts)
print("regex:", render(regex))
print("words up to length 4:", sorted(" ".join(w) for w in generate(regex, 4)))

# 2-way sequence coverage
targets = feasible_targets(lts, 2)
greedy = greedy_suite(lts, 2)
exact = exact_min_suite(lts, 2)
print(f"{len(targets)} feasible pairs; greedy {greedy.size} word(s), exact {exact.size}")
for word in greedy.words:
    print("  ", " ".join(e.label for e in word))
print("complete:", suite_covers(greedy, targets).complete)
