import random

import pytest

from xducer import corpus
from xducer.machines import DFA, Lit, MachineError, Reg, validate
from xducer.oracle import equiv_check, words_up_to
from xducer.semantics import run_marble, run_two_way
from xducer.sst2mt import (
    AUX_MARBLE,
    EXACT,
    as_two_way,
    layered_to_marble,
    marked_colors,
    marked_variants,
    prefix_state_gadget,
    run_gadget,
    sst_to_marble,
)


def test_marked_variants_worked_example():
    tokens = (Reg("x"), Lit("b"), Reg("y"), Lit("b"), Reg("x"))
    variants = marked_variants(tokens)
    assert [i for _body, i in variants] == [0, 2, 4]
    assert all(body == tokens for body, _i in variants)
    assert marked_variants((Lit("b"), Lit("b"))) == ()


def test_marked_colors_exp():
    cols = marked_colors(corpus.exp_sst())
    assert len(cols) == 2
    assert {(c.register, c.index) for c in cols} == {("x", 0), ("x", 1)}


CORPUS_SST = [
    ("exp", corpus.exp_sst, 6),
    ("reverse", corpus.reverse_sst, 6),
    ("mul", corpus.mul_sst, 5),
    ("pair", corpus.bounded_pair_sst, 6),
    ("reverse_copyful", corpus.reverse_sst_copyful, 6),
]


@pytest.mark.parametrize("name,build,maxlen", CORPUS_SST)
def test_sst_to_marble_equivalence(name, build, maxlen):
    source = build()
    converted = sst_to_marble(source)
    assert validate(converted) == []
    verdict = equiv_check(converted, source, maxlen)
    assert verdict.equivalent, (name, verdict.counterexample)


def test_value_at_left_end_is_initial():
    m = corpus.exp_sst()
    walker = sst_to_marble(m)
    assert run_marble(walker, "").output_text == "a"


def test_exp_walker_outputs():
    walker = sst_to_marble(corpus.exp_sst())
    for n in range(6):
        assert len(run_marble(walker, "a" * n).output) == 2 ** n


def max_depth(machine, maxlen, cap=4000):
    worst = 0
    for w in words_up_to(machine.input_alphabet, maxlen, cap=cap):
        r = run_marble(machine, w)
        if r.accepted:
            worst = max(worst, r.max_stack_depth)
    return worst


def test_layered_exact_mul():
    mm = layered_to_marble(corpus.mul_sst(), corpus.MUL_LAYERS, strategy=EXACT)
    assert equiv_check(mm, corpus.mul_sst(), 5).equivalent
    assert max_depth(mm, 5) <= 1


def test_layered_aux_mul():
    mm = layered_to_marble(corpus.mul_sst(), corpus.MUL_LAYERS, strategy=AUX_MARBLE)
    assert equiv_check(mm, corpus.mul_sst(), 5).equivalent
    assert max_depth(mm, 5) <= 2


def test_layered_exact_copyless_reverse_is_two_way():
    rev = corpus.reverse_sst()
    mm = layered_to_marble(rev, (rev.registers,), strategy=EXACT)
    assert equiv_check(mm, rev, 4).equivalent
    assert max_depth(mm, 4) == 0
    assert not any(action[0] == "drop" for _t, action in mm.delta.values())
    tw = as_two_way(mm)
    assert run_two_way(tw, "abac").output_text == "caba"


def test_layered_exact_long_inputs_until_counter_bound():
    mm = layered_to_marble(corpus.mul_sst(), corpus.MUL_LAYERS, strategy=EXACT)
    from xducer.semantics import run_sst

    for w in ("ab#" + "0" * 30, "abbaab#" + "0" * 20, "ab#" + "0" * 60):
        want = run_sst(corpus.mul_sst(), w)
        got = run_marble(mm, w, budget=10 ** 7)
        assert got.accepted and got.output == want.output
        assert got.max_stack_depth <= 1
    # beyond the counting bound: reject, never a wrong answer
    assert run_marble(mm, "ab#" + "0" * 80, budget=10 ** 7).verdict == "reject"


def test_layered_requires_valid_partition():
    with pytest.raises(MachineError):
        layered_to_marble(corpus.exp_sst(), (("x",),))


def test_as_two_way_refuses_marble_users():
    with pytest.raises(MachineError):
        as_two_way(corpus.mul_marble())


def random_dfas(count, seed=31):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, 4)
        states = tuple("s%d" % i for i in range(n))
        alphabet = ("a", "b")
        delta = {(q, a): rng.choice(states) for q in states for a in alphabet}
        yield DFA(alphabet, states, states[0], delta, frozenset({states[-1]}))


def test_prefix_state_gadget_contract():
    for d in random_dfas(3):
        gadget = prefix_state_gadget(d, max_len=64)
        for w in words_up_to(d.alphabet, 8, cap=10 ** 6):
            for m in range(1, len(w) + 2):
                got, lo, hi, _steps = run_gadget(gadget, w, m)
                want = d.initial
                for a in w[:m - 1]:
                    want = d.delta[(want, a)]
                assert got == want, (w, m)
                assert hi <= m, "gadget moved right of its entry point"
                assert lo >= 0


def test_prefix_state_gadget_trivial_cases():
    d = DFA(("a",), ("only",), "only", {("only", "a"): "only"},
            frozenset({"only"}))
    g = prefix_state_gadget(d)
    assert run_gadget(g, "aaa", 3)[0] == "only"
    d2 = next(iter(random_dfas(1)))
    g2 = prefix_state_gadget(d2)
    assert run_gadget(g2, "ab", 1)[0] == d2.initial  # empty strict prefix


def test_prefix_state_gadget_length_bound():
    d = DFA(("a",), ("e", "o"), "e",
            {("e", "a"): "o", ("o", "a"): "e"}, frozenset({"e"}))
    g = prefix_state_gadget(d, max_len=4)
    assert run_gadget(g, "aaa", 4)[0] == "o"
    with pytest.raises(MachineError):
        run_gadget(g, "a" * 10, 9)
