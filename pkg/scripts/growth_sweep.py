#!/usr/bin/env python3
"""Random-automaton experiment: closure-based pattern detectors vs brute force.

Samples trim nonnegative-weighted automata, classifies their growth with the
barbell/heavy-cycle machinery, and cross-checks the degree against the
exhaustive word-matrix search.  Prints a summary table.
"""

import argparse
import os
import random
import sys
from collections import Counter

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from xducer.growth import classify, trim  # noqa: E402
from xducer.machines import NAutomaton  # noqa: E402
from xducer.oracle import brute_degree  # noqa: E402


def sample(rng):
    n = rng.randint(1, 3)
    states = tuple("q%d" % i for i in range(n))
    letters = ("a", "b")[: rng.randint(1, 2)]
    mats = {}
    for a in letters:
        mats[a] = {
            (p, q): w
            for p in states for q in states
            for w in (rng.choice([0, 0, 0, 1, 1, 2]),) if w
        }
    return NAutomaton(
        letters, states,
        {q: rng.choice([0, 1]) for q in states},
        {q: rng.choice([0, 1]) for q in states}, mats,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=500)
    parser.add_argument("--seed", type=int, default=424242)
    parser.add_argument("--brute-maxlen", type=int, default=6)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    shapes = Counter()
    disagreements = []
    produced = 0
    while produced < args.count:
        t = trim(sample(rng))
        if not t.states:
            continue
        produced += 1
        report = classify(t)
        mine = None if report.kind == "exponential" else report.degree
        shapes["exponential" if mine is None else "degree %d" % mine] += 1
        brute = brute_degree(t, args.brute_maxlen)
        if mine != brute:
            disagreements.append((t, mine, brute))
    print("sampled %d trim automata (seed %d)" % (produced, args.seed))
    for shape, count in sorted(shapes.items()):
        print("  %-12s %4d" % (shape, count))
    print("disagreements with brute force (|v| <= %d): %d"
          % (args.brute_maxlen, len(disagreements)))
    for t, mine, brute in disagreements[:5]:
        print("  closure=%s brute=%s on %r" % (mine, brute, t))
    return 1 if disagreements else 0


if __name__ == "__main__":
    raise SystemExit(main())
