"""
Orderings: permutations that cover every ordered triple
=======================================================

Given 18 letters, find a short list of permutations such that every ordered
triple of distinct letters appears, in order but not necessarily adjacent,
in at least one of them.
"""

import itertools
import time

from bpcover.coverage import (CoverageSpec, exact_min_suite, permutation_cover, permutation_lts,
                              permutation_targets, suite_covers)

# two letters per pair: a word and its reverse are always enough, and needed
letters = "abcdef"
exact = exact_min_suite(permutation_lts(letters), CoverageSpec(2, tuple(letters), distinct=True))
print("pairs of 6 letters, exact minimum:", [" ".join(e.name for e in w) for w in exact.words])

for n in (6, 12, 18):
    letters = [f"e{i}" for i in range(n)]
    start = time.perf_counter()
    suite = permutation_cover(letters, 3)
    took = time.perf_counter() - start
    report = suite_covers(suite, permutation_targets(letters, 3))
    n_triples = len(list(itertools.permutations(letters, 3)))
    print(f"n={n}: {suite.size} permutations cover {len(report.covered)}/{n_triples} "
          f"triples ({took:.2f} s)")
