import pytest

from xducer import corpus
from xducer.machines import (
    ACT_LEFT,
    ACT_LIFT,
    ACT_RIGHT,
    LEFT_END,
    MachineError,
    MarbleTransducer,
    act_drop,
    validate,
)
from xducer.mt2sst import (
    CALL,
    CONST,
    boundary_summary,
    crossing_fixpoint,
    exit_fixpoint,
    marble_to_sst,
    two_way_to_marble,
)
from xducer.oracle import equiv_check, words_up_to
from xducer.semantics import marble_step, run_sst


def fragment(transitions, states, colors=("c",), finals=()):
    delta, out = {}, {}
    for (q, sym, col), (q2, action, emitted) in transitions.items():
        delta[(q, sym, col)] = (q2, action)
        out[(q, sym, col)] = tuple(emitted)
    return MarbleTransducer(
        input_alphabet=("a",), output_alphabet=("o1", "o2", "o3", "o4", "o5"),
        states=tuple(states), initial=states[0], finals=frozenset(finals),
        colors=tuple(colors), delta=delta, out=out,
    )


def test_crossing_trivial_right_move():
    t = fragment({("q", "a", None): ("q2", ACT_RIGHT, ("o1",))},
                 states=("q", "q2"))
    deriv = crossing_fixpoint(t, {"q": None, "q2": None}, "a")
    assert deriv.result("q", None) == "q2"
    assert deriv.tokens("q", None) == ((CONST, ("o1",)),)


def test_crossing_stitched_run_uses_two_calls():
    # drop, walk left, cross, lift, walk left again, cross, exit right
    states = ("q", "q1", "q2", "q3", "fq2", "qq")
    trans = {
        ("q", "a", None): ("q1", act_drop("c"), ("o1",)),
        ("q1", "a", "c"): ("q2", ACT_LEFT, ("o2",)),
        ("fq2", "a", "c"): ("q3", ACT_LIFT, ("o3",)),
        ("q3", "a", None): ("q2", ACT_LEFT, ("o4",)),
        ("fq2", "a", None): ("qq", ACT_RIGHT, ("o5",)),
    }
    t = fragment(trans, states)
    f = {s: None for s in states}
    f["q2"] = "fq2"
    deriv = crossing_fixpoint(t, f, "a")
    assert deriv.result("q", None) == "qq"
    assert deriv.tokens("q", None) == (
        (CONST, ("o1",)), (CONST, ("o2",)), (CALL, "q2"),
        (CONST, ("o3",)), (CONST, ("o4",)), (CALL, "q2"),
        (CONST, ("o5",)),
    )


def test_crossing_dead_continuation_is_bottom():
    t = fragment({("q", "a", None): ("q", ACT_LEFT, ())}, states=("q",))
    deriv = crossing_fixpoint(t, {"q": None}, "a")
    assert deriv.result("q", None) is None
    assert deriv.tokens("q", None) == ()


def test_crossing_cycle_is_bottom():
    # left move whose continuation loops back to the same entry
    t = fragment({("q", "a", None): ("q", ACT_LEFT, ())}, states=("q",))
    deriv = crossing_fixpoint(t, {"q": "q"}, "a")
    assert deriv.result("q", None) is None


def test_exit_fixpoint_accepts_finals_immediately():
    t = fragment({}, states=("q",), finals=("q",))
    deriv = exit_fixpoint(t, {"q": None})
    assert deriv.entries[("q", None)] == ("q", ())


def test_boundary_summary():
    t = corpus.exp_marble()
    state, out = boundary_summary(t, "s0")
    assert state == "s1" and out == ()
    looper = fragment({("q", LEFT_END, None): ("q2", act_drop("c"), ()),
                       ("q2", LEFT_END, "c"): ("q", ACT_LIFT, ())},
                      states=("q", "q2"))
    assert boundary_summary(looper, "q") == (None, ())


CORPUS_MARBLE = [
    ("reverse", lambda: two_way_to_marble(corpus.reverse_two_way()), 6),
    ("copy", lambda: two_way_to_marble(corpus.copy_two_way()), 6),
    ("exp", corpus.exp_marble, 6),
    ("mul", corpus.mul_marble, 5),
    ("pow2", corpus.pow2_marble, 6),
]


@pytest.mark.parametrize("name,build,maxlen", CORPUS_MARBLE)
def test_marble_to_sst_equivalence(name, build, maxlen):
    source = build()
    converted = marble_to_sst(source)
    assert validate(converted) == []
    verdict = equiv_check(converted, source, maxlen)
    assert verdict.equivalent, (name, verdict.counterexample)


def test_exp_output_lengths():
    m = marble_to_sst(corpus.exp_marble())
    for n in range(6):
        assert len(run_sst(m, "a" * n).output) == 2 ** n


def test_empty_domain_machine():
    t = corpus.mul_marble()
    dead = MarbleTransducer(
        input_alphabet=t.input_alphabet, output_alphabet=t.output_alphabet,
        states=t.states, initial=t.initial, finals=frozenset(),
        colors=t.colors, delta=t.delta, out=t.out,
    )
    m = marble_to_sst(dead)
    assert m.output == {}
    for w in ("", "ab#0"):
        assert not run_sst(m, w).accepted


def test_invalid_machine_rejected():
    t = corpus.mul_marble()
    delta = dict(t.delta)
    delta[("m3", "0", "m")] = ("m4", ACT_RIGHT)
    bad = MarbleTransducer(
        input_alphabet=t.input_alphabet, output_alphabet=t.output_alphabet,
        states=t.states, initial=t.initial, finals=t.finals, colors=t.colors,
        delta=delta, out=t.out,
    )
    with pytest.raises(MachineError):
        marble_to_sst(bad)


def first_crossing(t, w, cfg, target, budget=20000):
    """Run until the head first reaches ``target``; (state, output) or None."""
    emitted = []
    steps = 0
    while steps < budget:
        state, pos, _stack = cfg
        if pos == target:
            return state, tuple(emitted)
        res = marble_step(t, w, cfg)
        if res is None:
            return None
        cfg, out = res
        emitted.extend(out)
        steps += 1
    return None


@pytest.mark.parametrize("name,build", [
    ("exp", corpus.exp_marble), ("mul", corpus.mul_marble),
    ("pow2", corpus.pow2_marble),
])
def test_crossing_summaries_match_interpreter(name, build):
    """Each derivation entry predicts the first crossing of the next cell."""
    t = build()
    words = [w for w in words_up_to(t.input_alphabet, 3, cap=200)]
    for w in words:
        for m in range(len(w)):
            f = {}
            outputs = {}
            for q in t.states:
                if m == 0:
                    f[q], outputs[q] = boundary_summary(t, q)
                else:
                    got = first_crossing(t, w, (q, m, ()), m + 1)
                    f[q], outputs[q] = got if got else (None, ())
            deriv = crossing_fixpoint(t, f, w[m])
            for q in t.states:
                for c in (None,) + tuple(t.colors):
                    stack = ((c, m + 1),) if c else ()
                    got = first_crossing(t, w, (q, m + 1, stack), m + 2)
                    res, toks = deriv.entries[(q, c)]
                    if res is None:
                        assert got is None, (name, w, m, q, c)
                        continue
                    assert got is not None, (name, w, m, q, c)
                    expected = []
                    for kind, payload in toks:
                        if kind == CONST:
                            expected.extend(payload)
                        else:
                            expected.extend(outputs[payload])
                    assert got == (res, tuple(expected)), (name, w, m, q, c)
