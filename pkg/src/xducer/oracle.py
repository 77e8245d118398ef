"""Brute-force ground truth: bounded equivalence, pattern search, growth probes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional

from .machines import FunctionRegistry, MachineError, NAutomaton, as_word
from .semantics import ACCEPT, BUDGET, run_machine

EQUIVALENT = "equivalent"
COUNTEREXAMPLE = "counterexample"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class EquivalenceVerdict:
    status: str
    max_length: int
    counterexample: Optional[tuple] = None  # (word, output1, output2)
    inconclusive_word: Optional[tuple] = None

    @property
    def equivalent(self) -> bool:
        return self.status == EQUIVALENT


def words_up_to(alphabet, maxlen: int, cap: int = 100000):
    """Length-lexicographic enumeration with a total-word cap."""
    letters = sorted(alphabet)
    count = 0
    for n in range(maxlen + 1):
        for tup in product(letters, repeat=n):
            count += 1
            if count > cap:
                raise MachineError("word enumeration cap exceeded (%d)" % cap)
            yield tup


def equiv_check(m1, m2, maxlen: int,
                registry1: Optional[FunctionRegistry] = None,
                registry2: Optional[FunctionRegistry] = None,
                budget: Optional[int] = None,
                word_cap: int = 100000) -> EquivalenceVerdict:
    """Compare domains and outputs on every word of length up to ``maxlen``.

    The first mismatch in length-lexicographic order is reported.  A run
    hitting its step budget makes the verdict inconclusive for that word.
    """
    if tuple(sorted(m1.input_alphabet)) != tuple(sorted(m2.input_alphabet)):
        raise MachineError("machines have different input alphabets")
    for w in words_up_to(m1.input_alphabet, maxlen, cap=word_cap):
        r1 = run_machine(m1, w, registry=registry1, budget=budget)
        r2 = run_machine(m2, w, registry=registry2, budget=budget)
        if BUDGET in (r1.verdict, r2.verdict):
            return EquivalenceVerdict(INCONCLUSIVE, maxlen, inconclusive_word=w)
        o1 = r1.output if r1.verdict == ACCEPT else None
        o2 = r2.output if r2.verdict == ACCEPT else None
        if (r1.verdict == ACCEPT) != (r2.verdict == ACCEPT) or o1 != o2:
            return EquivalenceVerdict(COUNTEREXAMPLE, maxlen, counterexample=(w, o1, o2))
    return EquivalenceVerdict(EQUIVALENT, maxlen)


# ---------------------------------------------------------------------------
# Weighted-automaton pattern search
# ---------------------------------------------------------------------------


def _mat_mul(states, A: dict, B: dict) -> dict:
    rows: dict = {}
    for (p, q), w in A.items():
        if w:
            rows.setdefault(p, []).append((q, w))
    cols: dict = {}
    for (q, r), w in B.items():
        if w:
            cols.setdefault(q, []).append((r, w))
    out: dict = {}
    for p, row in rows.items():
        acc: dict = {}
        for q, w1 in row:
            for r, w2 in cols.get(q, ()):
                acc[r] = acc.get(r, 0) + w1 * w2
        for r, w in acc.items():
            out[(p, r)] = w
    return out


@dataclass(frozen=True)
class PatternSearch:
    heavy_cycles: tuple  # (state, word) pairs
    barbells: tuple      # (state, state, word) triples


def brute_pattern_search(m: NAutomaton, maxlen: int) -> PatternSearch:
    """All heavy cycles and barbells witnessed by words up to ``maxlen``.

    Computes the weight matrix of every word explicitly, so this is the
    independent oracle the pattern detectors are validated against.
    """
    letters = sorted(m.input_alphabet)
    heavy, barbells = [], []
    mats = {(): {(q, q): 1 for q in m.states}}
    frontier = [()]
    for _ in range(maxlen):
        nxt = []
        for v in frontier:
            for a in letters:
                v2 = v + (a,)
                mats[v2] = _mat_mul(m.states, mats[v], m.mats[a])
                nxt.append(v2)
        frontier = nxt
    for v in sorted(mats):
        if not v:
            continue
        mat = mats[v]
        for q in m.states:
            if mat.get((q, q), 0) >= 2:
                heavy.append((q, v))
        for q in m.states:
            for q2 in m.states:
                if q == q2:
                    continue
                if (mat.get((q, q), 0) >= 1 and mat.get((q, q2), 0) >= 1
                        and mat.get((q2, q2), 0) >= 1):
                    barbells.append((q, q2, v))
    return PatternSearch(tuple(heavy), tuple(barbells))


def brute_degree(m: NAutomaton, maxlen: int) -> Optional[int]:
    """Growth degree derived from brute-force patterns (None = exponential).

    Builds the barbell graph from the barbells found up to ``maxlen`` and
    takes the longest chain, mirroring the classifier but with exhaustively
    verified patterns.
    """
    found = brute_pattern_search(m, maxlen)
    if found.heavy_cycles:
        return None
    succ = {q: set() for q in m.states}
    for mat in m.mats.values():
        for (p, q), w in mat.items():
            if w > 0:
                succ[p].add(q)

    def reach(src):
        seen, stack = {src}, [src]
        while stack:
            x = stack.pop()
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    reach_map = {q: reach(q) for q in m.states}
    edges = set()
    for (q, q2, _v) in found.barbells:
        for q1 in m.states:
            if q not in reach_map[q1]:
                continue
            for q3 in m.states:
                if q3 in reach_map[q2]:
                    edges.add((q1, q3))
    heights = {q: 0 for q in m.states}
    for _ in range(len(m.states) + 1):
        for (q1, q2) in sorted(edges):
            heights[q2] = max(heights[q2], heights[q1] + 1)
    if any(h > len(m.states) for h in heights.values()):
        return None  # cyclic barbell graph; cannot happen without heavy cycles
    return max(heights.values(), default=0)


# ---------------------------------------------------------------------------
# Empirical growth probing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthProbe:
    shape: str        # "exponential" | "polynomial" | "constant" | "unclear"
    degree: Optional[float]
    points: tuple     # (pump count, output length)


def probe_growth(m, family=None, points=range(1, 7),
                 registry: Optional[FunctionRegistry] = None,
                 budget: Optional[int] = None) -> GrowthProbe:
    """Fit the output-length growth on a witness family (default a^n).

    Advisory only: reports an exponential signature when log2 of the output
    length grows linearly, otherwise the log-log slope at the largest two
    points.  Exact checks live with the classifier.
    """
    if family is None:
        letter = sorted(m.input_alphabet)[0]
        family = lambda n: (letter,) * n
    data = []
    for n in points:
        w = as_word(family(n))
        res = run_machine(m, w, registry=registry, budget=budget)
        if res.verdict == BUDGET:
            raise MachineError("budget exhausted while probing growth")
        if res.verdict != ACCEPT:
            raise MachineError("probe family leaves the machine domain at %d" % n)
        data.append((n, len(res.output)))
    sizes = [s for _, s in data]
    if all(s == sizes[0] for s in sizes):
        return GrowthProbe("constant", 0.0, tuple(data))
    if all(s > 0 for s in sizes):
        logs = [math.log2(s) for s in sizes]
        diffs = [logs[i + 1] - logs[i] for i in range(len(logs) - 1)]
        if len(diffs) >= 2 and all(abs(d - diffs[-1]) < 0.2 for d in diffs[-2:]) \
                and diffs[-1] > 0.8:
            return GrowthProbe("exponential", None, tuple(data))
    (n1, s1), (n2, s2) = data[-2], data[-1]
    if s1 <= 0 or s2 <= 0 or n1 <= 0:
        return GrowthProbe("unclear", None, tuple(data))
    slope = (math.log(s2) - math.log(s1)) / (math.log(n2) - math.log(n1))
    return GrowthProbe("polynomial", slope, tuple(data))
