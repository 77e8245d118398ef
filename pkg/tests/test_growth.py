import random

import pytest

from xducer import corpus
from xducer.growth import (
    barbell_graph,
    classify,
    classify_function,
    find_barbell,
    flow_automaton,
    has_heavy_cycle,
    heights,
    trim,
    witness_word,
)
from xducer.layering import make_total, to_simple
from xducer.machines import MachineError, NAutomaton
from xducer.oracle import brute_degree, brute_pattern_search
from xducer.semantics import eval_nautomaton


def nauto(states, alphabet, alpha, beta, mats):
    return NAutomaton(tuple(alphabet), tuple(states), alpha, beta, mats)


IDENTITY2 = nauto(
    ("x", "y"), ("a",), {"x": 1, "y": 1}, {"x": 1, "y": 1},
    {"a": {("x", "x"): 1, ("y", "y"): 1}},
)


def test_trim_removes_unreachable_state():
    a = nauto(
        ("x", "dead"), ("a",), {"x": 1}, {"x": 1},
        {"a": {("x", "x"): 1, ("dead", "dead"): 1}},
    )
    t = trim(a)
    assert t.states == ("x",)
    for w in ("", "a", "aa", "aaa", "aaaa", "aaaaa"):
        assert eval_nautomaton(t, w) == eval_nautomaton(a, w)


def test_trim_is_idempotent():
    t = trim(corpus.chain_nautomaton())
    assert t == trim(t)


def test_flow_automaton_of_never_output_register():
    m = corpus.mul_sst_copyful()
    total, _ = make_total(m)
    simple = to_simple(total)
    flow = flow_automaton(simple)
    t = trim(flow)
    junk = [q for q in flow.states if q.endswith(".z")]
    assert junk and all(q not in t.states for q in junk)


def test_flow_automaton_exp():
    flow = flow_automaton(corpus.exp_sst())
    assert flow.alpha == {"x": 1}
    assert flow.beta == {"x": 1}
    assert flow.mats["a"] == {("x", "x"): 2}


def test_flow_requires_simple():
    with pytest.raises(MachineError):
        flow_automaton(corpus.mul_sst())


def test_flow_zero_machine():
    m = corpus.reverse_sst()
    zero = type(m)(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=m.registers, initial=m.initial,
        init_valuation={"x": ()},
        delta=m.delta,
        update={k: {"x": ()} for k in m.update},
        output={"q": ()},
    )
    flow = flow_automaton(zero)
    assert flow.alpha == {} and flow.beta == {}
    assert eval_nautomaton(flow, "aa") == 0


def test_heavy_cycle_witnesses():
    assert has_heavy_cycle(corpus.exp_flow_nautomaton()) == ("x", ("a",))
    assert has_heavy_cycle(corpus.chain_nautomaton()) is None
    assert has_heavy_cycle(IDENTITY2) is None


def test_heavy_cycle_from_ambiguity_without_weights():
    # two distinct same-label loops through x, all weights 0/1
    a = nauto(
        ("x", "y"), ("a", "b"), {"x": 1}, {"x": 1},
        {"a": {("x", "x"): 1, ("x", "y"): 1},
         "b": {("x", "x"): 1, ("y", "x"): 1}},
    )
    hit = has_heavy_cycle(a)
    assert hit is not None
    q, v = hit
    mat = {("x", "x"): 1}
    mats = {"a": a.mats["a"], "b": a.mats["b"]}
    # verify the witness by brute multiplication
    cur = {(p, p): 1 for p in a.states}
    for letter in v:
        nxt = {}
        for (p, q1), w1 in cur.items():
            for (q2, r), w2 in mats[letter].items():
                if q1 == q2:
                    nxt[(p, r)] = nxt.get((p, r), 0) + w1 * w2
        cur = nxt
    assert cur.get((q, q), 0) >= 2


def test_find_barbell():
    assert find_barbell(corpus.chain_nautomaton(), "x", "y") == ("a",)
    assert find_barbell(corpus.chain_nautomaton(), "y", "x") is None
    assert find_barbell(IDENTITY2, "x", "y") is None
    with pytest.raises(MachineError):
        find_barbell(IDENTITY2, "x", "x")


def test_no_barbells_in_copyless_reverse_flow():
    total, _ = make_total(corpus.reverse_sst())
    flow = trim(flow_automaton(to_simple(total)))
    found = brute_pattern_search(flow, 6)
    for q in flow.states:
        for q2 in flow.states:
            if q == q2:
                continue
            mine = find_barbell(flow, q, q2)
            brute = [(a, b) for a, b, _v in found.barbells]
            assert (mine is not None) == ((q, q2) in brute)
    # the mirror register is write-only from the constants: no barbell pair
    # between distinct non-constant registers
    assert all(find_barbell(flow, q, q2) is None
               for q in flow.states for q2 in flow.states
               if q != q2 and q.endswith(".x") and q2.endswith(".x"))


def test_barbell_graph_and_heights():
    g = barbell_graph(corpus.chain_nautomaton())
    assert set(g.edges) == {("x", "y")}
    assert heights(g) == {"x": 0, "y": 1}


def test_barbell_graph_chain_family():
    k = 3
    states = tuple("s%d" % i for i in range(k + 1))
    mat = {}
    for i in range(k + 1):
        mat[(states[i], states[i])] = 1
        if i < k:
            mat[(states[i], states[i + 1])] = 1
    a = nauto(states, ("a",), {states[0]: 1}, {states[-1]: 1}, {"a": mat})
    g = barbell_graph(a)
    h = heights(g)
    assert max(h.values()) == k


def test_barbell_graph_edgeless():
    g = barbell_graph(IDENTITY2)
    assert g.edges == {}


def test_classify_exponential_with_pumping():
    rep = classify(corpus.exp_flow_nautomaton())
    assert rep.kind == "exponential"
    for pumps in range(1, 6):
        w = witness_word(rep, pumps)
        assert eval_nautomaton(corpus.exp_flow_nautomaton(), w) >= 2 ** pumps


def test_classify_chain_degree_one():
    rep = classify(corpus.chain_nautomaton())
    assert rep.kind == "polynomial" and rep.degree == 1
    assert rep.partition == (("x",), ("y",))
    for pumps in range(1, 5):
        w = witness_word(rep, pumps)
        assert eval_nautomaton(corpus.chain_nautomaton(), w) >= pumps


def test_classify_single_state_bounded():
    a = nauto(("x",), ("a",), {"x": 1}, {"x": 1}, {"a": {("x", "x"): 1}})
    rep = classify(a)
    assert rep.kind == "polynomial" and rep.degree == 0


def test_classify_empty_after_trim():
    a = nauto(("x",), ("a",), {}, {"x": 1}, {"a": {("x", "x"): 1}})
    rep = classify(a)
    assert rep.kind == "polynomial" and rep.degree == 0
    assert rep.partition == () and rep.trim_removed == ("x",)


def random_automata(count, seed=99):
    rng = random.Random(seed)
    produced = 0
    while produced < count:
        n = rng.randint(1, 3)
        states = tuple("q%d" % i for i in range(n))
        letters = ("a", "b")[: rng.randint(1, 2)]
        mats = {}
        for a in letters:
            mat = {}
            for p in states:
                for q in states:
                    w = rng.choice([0, 0, 0, 1, 1, 2])
                    if w:
                        mat[(p, q)] = w
            mats[a] = mat
        alpha = {q: rng.choice([0, 1]) for q in states}
        beta = {q: rng.choice([0, 1]) for q in states}
        t = trim(NAutomaton(letters, states, alpha, beta, mats))
        if not t.states:
            continue
        produced += 1
        yield t


def test_pattern_detectors_agree_with_brute_force():
    for t in random_automata(120):
        found = brute_pattern_search(t, 6)
        assert (has_heavy_cycle(t) is not None) == bool(found.heavy_cycles)
        if not found.heavy_cycles:
            pairs = {(q, q2) for (q, q2, _v) in found.barbells}
            for q in t.states:
                for q2 in t.states:
                    if q == q2:
                        continue
                    assert (find_barbell(t, q, q2) is not None) == ((q, q2) in pairs)


def test_degree_agrees_with_brute_force():
    disagreements = 0
    for t in random_automata(120):
        rep = classify(t)
        mine = None if rep.kind == "exponential" else rep.degree
        if mine != brute_degree(t, 6):
            disagreements += 1
    assert disagreements == 0


def test_witness_families_pump_on_random_automata():
    pumped = 0
    for t in random_automata(150, seed=1234):
        rep = classify(t)
        if rep.kind == "exponential":
            for pumps in range(1, 5):
                assert eval_nautomaton(t, witness_word(rep, pumps)) >= 2 ** pumps
            pumped += 1
        elif rep.degree >= 1:
            for pumps in range(1, 5):
                got = eval_nautomaton(t, witness_word(rep, pumps))
                assert got >= pumps ** rep.degree, (t, pumps, got)
            pumped += 1
    assert pumped >= 60


def test_partition_flow_order_and_stabilization():
    for t in random_automata(120, seed=7):
        if has_heavy_cycle(t) is not None:
            continue
        rep = classify(t)
        level = {}
        for i, part in enumerate(rep.partition):
            for q in part:
                level[q] = i
        maxima = {5: {}, 6: {}}
        mats = {(): {(q, q): 1 for q in t.states}}
        frontier = [()]
        for depth in range(1, 7):
            nxt = []
            for v in frontier:
                for a in sorted(t.input_alphabet):
                    v2 = v + (a,)
                    prod = {}
                    for (p, q1), w1 in mats[v].items():
                        for (q2, r), w2 in t.mats[a].items():
                            if q1 == q2 and w1 and w2:
                                prod[(p, r)] = prod.get((p, r), 0) + w1 * w2
                    mats[v2] = prod
                    nxt.append(v2)
            frontier = nxt
        for v, mat in mats.items():
            for (p, q), w in mat.items():
                if w >= 1 and len(v) <= 5:
                    assert level[p] <= level[q], (v, p, q)
                if level.get(p) == level.get(q) and w:
                    for horizon in (5, 6):
                        if len(v) <= horizon:
                            key = (p, q)
                            maxima[horizon][key] = max(maxima[horizon].get(key, 0), w)
        assert maxima[5] == maxima[6], "intra-class weights kept growing"


def test_exponential_upper_bound_sanity():
    """eval(w) never exceeds (sum alpha)(sum beta) * M^|w| with M the max
    column sum over the letter matrices."""
    from xducer.semantics import eval_nautomaton as ev
    from xducer.oracle import words_up_to

    automata = [corpus.exp_flow_nautomaton(), corpus.chain_nautomaton()]
    automata.extend(random_automata(20, seed=5))
    for t in automata:
        col_sums = [0]
        for mat in t.mats.values():
            per_col = {}
            for (_p, q), w in mat.items():
                per_col[q] = per_col.get(q, 0) + w
            col_sums.extend(per_col.values())
        m = max(col_sums)
        c = max(1, sum(t.alpha.values())) * max(1, sum(t.beta.values()))
        for w in words_up_to(t.input_alphabet, 8, cap=600):
            assert ev(t, w) <= c * (m ** len(w))


def test_classify_function_corpus():
    res = classify_function(corpus.exp_sst())
    assert res.report.kind == "exponential" and res.minimal_marbles is None
    res = classify_function(corpus.mul_sst())
    assert res.report.degree == 2 and res.minimal_marbles == 1
    res = classify_function(corpus.reverse_sst())
    assert res.report.degree == 1 and res.minimal_marbles == 0
