"""Bundled example machines used by the test suite and the JSON corpus.

Each function builds a fresh machine value.  The marble machines follow the
usual playbook: walk the tape with endmarkers at positions 0 and |w|+1, drop
marks only to the left of existing ones, and halt on the first accepting
configuration.
"""

from __future__ import annotations

from .machines import (
    ACT_LEFT,
    ACT_LIFT,
    ACT_RIGHT,
    LEFT_END,
    Lit,
    MOVE_LEFT,
    MOVE_RIGHT,
    MarbleTransducer,
    NAutomaton,
    Reg,
    RIGHT_END,
    SST,
    TwoWayTransducer,
    act_drop,
)


def reverse_two_way(alphabet=("a", "b", "c")) -> TwoWayTransducer:
    """Mirror image: walk to the right end, then emit letters moving left."""
    delta = {("go", LEFT_END): ("go", MOVE_RIGHT),
             ("go", RIGHT_END): ("back", MOVE_LEFT),
             ("back", LEFT_END): ("done", MOVE_RIGHT)}
    out = {("go", LEFT_END): (), ("go", RIGHT_END): (), ("back", LEFT_END): ()}
    for a in alphabet:
        delta[("go", a)] = ("go", MOVE_RIGHT)
        out[("go", a)] = ()
        delta[("back", a)] = ("back", MOVE_LEFT)
        out[("back", a)] = (a,)
        delta[("done", a)] = ("done", MOVE_RIGHT)
        out[("done", a)] = ()
    return TwoWayTransducer(
        input_alphabet=tuple(alphabet), output_alphabet=tuple(alphabet),
        states=("go", "back", "done"), initial="go", finals=frozenset({"done"}),
        delta=delta, out=out,
    )


def copy_two_way(alphabet=("a", "b")) -> TwoWayTransducer:
    """w -> ww by two left-to-right emitting passes."""
    delta = {("one", LEFT_END): ("one", MOVE_RIGHT),
             ("one", RIGHT_END): ("rew", MOVE_LEFT),
             ("rew", LEFT_END): ("two", MOVE_RIGHT)}
    out = {k: () for k in delta}
    for a in alphabet:
        delta[("one", a)] = ("one", MOVE_RIGHT)
        out[("one", a)] = (a,)
        delta[("rew", a)] = ("rew", MOVE_LEFT)
        out[("rew", a)] = ()
        delta[("two", a)] = ("two", MOVE_RIGHT)
        out[("two", a)] = (a,)
    return TwoWayTransducer(
        input_alphabet=tuple(alphabet), output_alphabet=tuple(alphabet),
        states=("one", "rew", "two"), initial="one", finals=frozenset({"two"}),
        delta=delta, out=out,
    )


def identity_sst(alphabet=("a", "b")) -> SST:
    delta = {("q", a): "q" for a in alphabet}
    update = {("q", a): {"x": (Reg("x"), Lit(a))} for a in alphabet}
    return SST(
        input_alphabet=tuple(alphabet), output_alphabet=tuple(alphabet),
        states=("q",), registers=("x",), initial="q",
        init_valuation={"x": ()}, delta=delta, update=update,
        output={"q": (Reg("x"),)},
    )


def reverse_sst(alphabet=("a", "b", "c")) -> SST:
    """One register prepended with each letter read."""
    delta = {("q", a): "q" for a in alphabet}
    update = {("q", a): {"x": (Lit(a), Reg("x"))} for a in alphabet}
    return SST(
        input_alphabet=tuple(alphabet), output_alphabet=tuple(alphabet),
        states=("q",), registers=("x",), initial="q",
        init_valuation={"x": ()}, delta=delta, update=update,
        output={"q": (Reg("x"),)},
    )


def reverse_sst_copyful(alphabet=("a", "b", "c")) -> SST:
    """Mirror image computed with a pointless duplicate of the register."""
    delta = {("q", a): "q" for a in alphabet}
    update = {
        ("q", a): {"x": (Lit(a), Reg("x")), "z": (Lit(a), Reg("x"))}
        for a in alphabet
    }
    return SST(
        input_alphabet=tuple(alphabet), output_alphabet=tuple(alphabet),
        states=("q",), registers=("x", "z"), initial="q",
        init_valuation={"x": (), "z": ()}, delta=delta, update=update,
        output={"q": (Reg("z"),)},
    )


def exp_sst() -> SST:
    """a^n -> a^(2^n): one register doubled on every letter."""
    return SST(
        input_alphabet=("a",), output_alphabet=("a",),
        states=("q",), registers=("x",), initial="q",
        init_valuation={"x": ("a",)},
        delta={("q", "a"): "q"},
        update={("q", "a"): {"x": (Reg("x"), Reg("x"))}},
        output={"q": (Reg("x"),)},
    )


def exp_marble() -> MarbleTransducer:
    """a^n -> a^(2^n) by counting in binary with marble digits on the tape.

    Writes 0^n right to left, then repeatedly increments (lift 1s rightward,
    flip the first 0, re-drop 0s leftward), emitting one output letter per
    counter value.
    """
    d, o = {}, {}

    def t(state, sym, color, state2, action, out=()):
        d[(state, sym, color)] = (state2, action)
        o[(state, sym, color)] = tuple(out)

    t("s0", LEFT_END, None, "s1", ACT_RIGHT)
    t("s1", "a", None, "s1", ACT_RIGHT)
    t("s1", RIGHT_END, None, "w0", ACT_LEFT)
    t("w0", LEFT_END, None, "fin0", ACT_RIGHT, "a")   # empty input: 2^0
    t("w0", "a", None, "w0d", act_drop("0"))
    t("w0d", "a", "0", "w0l", ACT_LEFT)
    t("w0l", "a", None, "w0d", act_drop("0"))
    t("w0l", LEFT_END, None, "inc", ACT_RIGHT, "a")   # counter value 0
    t("inc", "a", "1", "l1", ACT_LIFT)
    t("l1", "a", None, "inc", ACT_RIGHT)
    t("inc", "a", "0", "r1", ACT_LIFT)
    t("r1", "a", None, "r2", act_drop("1"))
    t("r2", "a", "1", "zl", ACT_LEFT)
    t("zl", "a", None, "zd", act_drop("0"))
    t("zd", "a", "0", "zl", ACT_LEFT)
    t("zl", LEFT_END, None, "inc", ACT_RIGHT, "a")    # one increment done
    return MarbleTransducer(
        input_alphabet=("a",), output_alphabet=("a",),
        states=("s0", "s1", "w0", "w0d", "w0l", "inc", "l1", "r1", "r2",
                "zl", "zd", "fin0"),
        initial="s0", finals=frozenset({"inc", "fin0"}),
        colors=("0", "1"), delta=d, out=o,
    )


def mul_marble() -> MarbleTransducer:
    """w#0^n -> (w#)^n with a single marble walking along the 0 block."""
    d, o = {}, {}

    def t(state, sym, color, state2, action, out=()):
        d[(state, sym, color)] = (state2, action)
        o[(state, sym, color)] = tuple(out)

    t("m0", LEFT_END, None, "m1", ACT_RIGHT)
    for a in ("a", "b"):
        t("m1", a, None, "m1", ACT_RIGHT)
        t("m4", a, None, "m4", ACT_LEFT)
        t("m5", a, None, "m5", ACT_RIGHT, a)
    t("m1", "#", None, "m2", ACT_RIGHT)
    t("m2", "0", None, "m3", act_drop("m"))
    t("m3", "0", "m", "m4", ACT_LEFT)
    t("m4", "#", None, "m4", ACT_LEFT)
    t("m4", "0", None, "m4", ACT_LEFT)
    t("m4", LEFT_END, None, "m5", ACT_RIGHT)
    t("m5", "#", None, "m6", ACT_RIGHT, "#")
    t("m6", "0", None, "m6", ACT_RIGHT)
    t("m6", "0", "m", "m7", ACT_LIFT)
    t("m7", "0", None, "m2", ACT_RIGHT)
    return MarbleTransducer(
        input_alphabet=("a", "b", "#", "0"), output_alphabet=("a", "b", "#"),
        states=("m0", "m1", "m2", "m3", "m4", "m5", "m6", "m7"),
        initial="m0", finals=frozenset({"m2"}),
        colors=("m",), delta=d, out=o, marble_bound=1,
    )


def mul_sst() -> SST:
    """w#0^n -> (w#)^n: store w# once, prepend it per trailing zero."""
    x, y = Reg("x"), Reg("y")
    delta = {("r", "a"): "r", ("r", "b"): "r", ("r", "#"): "c", ("c", "0"): "c"}
    update = {
        ("r", "a"): {"x": (x, Lit("a")), "y": (y,)},
        ("r", "b"): {"x": (x, Lit("b")), "y": (y,)},
        ("r", "#"): {"x": (x, Lit("#")), "y": (y,)},
        ("c", "0"): {"x": (x,), "y": (x, y)},
    }
    return SST(
        input_alphabet=("a", "b", "#", "0"), output_alphabet=("a", "b", "#"),
        states=("r", "c"), registers=("x", "y"), initial="r",
        init_valuation={"x": (), "y": ()}, delta=delta, update=update,
        output={"c": (y,)},
    )


def mul_sst_copyful() -> SST:
    """Same function as mul_sst but with a junk second copy of the prefix."""
    x, y, z = Reg("x"), Reg("y"), Reg("z")
    delta = {("r", "a"): "r", ("r", "b"): "r", ("r", "#"): "c", ("c", "0"): "c"}
    update = {
        ("r", "a"): {"x": (x, Lit("a")), "y": (y,), "z": (z,)},
        ("r", "b"): {"x": (x, Lit("b")), "y": (y,), "z": (z,)},
        ("r", "#"): {"x": (x, Lit("#")), "y": (y,), "z": (z,)},
        ("c", "0"): {"x": (x,), "y": (x, y), "z": (x, z)},
    }
    return SST(
        input_alphabet=("a", "b", "#", "0"), output_alphabet=("a", "b", "#"),
        states=("r", "c"), registers=("x", "y", "z"), initial="r",
        init_valuation={"x": (), "y": (), "z": ()}, delta=delta, update=update,
        output={"c": (y,)},
    )


def pow2_marble() -> MarbleTransducer:
    """a^n -> a^(n^2) with one marble.

    The marble sweeps from position n-1 down to 1; the pass for position j
    emits aa on each of the j rightward steps, totalling n^2 - n, and a final
    plain pass emits a^n.
    """
    d, o = {}, {}

    def t(state, sym, color, state2, action, out=()):
        d[(state, sym, color)] = (state2, action)
        o[(state, sym, color)] = tuple(out)

    t("p0", LEFT_END, None, "p1", ACT_RIGHT)
    t("p1", "a", None, "p1", ACT_RIGHT)
    t("p1", RIGHT_END, None, "p2", ACT_LEFT)
    t("p2", LEFT_END, None, "fin0", ACT_RIGHT)        # n = 0
    t("p2", "a", None, "p3", ACT_LEFT)
    t("p3", LEFT_END, None, "ff", ACT_RIGHT)          # inner passes exhausted
    t("p3", "a", None, "p4", act_drop("m"))
    t("p4", "a", "m", "p5", ACT_LEFT)
    t("p5", "a", None, "p5", ACT_LEFT)
    t("p5", LEFT_END, None, "p6", ACT_RIGHT, "aa")
    t("p6", "a", None, "p6", ACT_RIGHT, "aa")
    t("p6", "a", "m", "p7", ACT_LIFT)
    t("p7", "a", None, "p3", ACT_LEFT)
    t("ff", "a", None, "ff", ACT_RIGHT, "a")
    return MarbleTransducer(
        input_alphabet=("a",), output_alphabet=("a",),
        states=("p0", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "ff", "fin0"),
        initial="p0", finals=frozenset({"ff", "fin0"}),
        colors=("m",), delta=d, out=o, marble_bound=1,
    )


def pow2_marble_wasteful() -> MarbleTransducer:
    """a^n -> a^(n^2) written with two simultaneous marbles.

    Functionally identical to pow2_marble, but each inner pass for a main
    marble at j >= 2 parks a helper marble at j-1, so the stack reaches
    depth 2.
    """
    d, o = {}, {}

    def t(state, sym, color, state2, action, out=()):
        d[(state, sym, color)] = (state2, action)
        o[(state, sym, color)] = tuple(out)

    t("q0", LEFT_END, None, "q1", ACT_RIGHT)
    t("q1", "a", None, "q1", ACT_RIGHT)
    t("q1", RIGHT_END, None, "q2", ACT_LEFT)
    t("q2", LEFT_END, None, "fin0", ACT_RIGHT)
    t("q2", "a", None, "q3", ACT_LEFT)
    t("q3", LEFT_END, None, "ff", ACT_RIGHT)
    t("q3", "a", None, "q4", act_drop("M"))
    t("q4", "a", "M", "q5", ACT_LEFT)
    t("q5", LEFT_END, None, "q6", ACT_RIGHT, "aa")    # j = 1, no helper
    t("q6", "a", "M", "q13", ACT_LIFT)
    t("q13", "a", None, "q3", ACT_LEFT)
    t("q5", "a", None, "q7", act_drop("H"))           # helper at j-1
    t("q7", "a", "H", "q8", ACT_LEFT)
    t("q8", "a", None, "q8", ACT_LEFT)
    t("q8", LEFT_END, None, "q9", ACT_RIGHT, "aa")
    t("q9", "a", None, "q9", ACT_RIGHT, "aa")
    t("q9", "a", "H", "q10", ACT_LIFT, "aa")
    t("q10", "a", None, "q11", ACT_RIGHT)
    t("q11", "a", "M", "q12", ACT_LIFT)
    t("q12", "a", None, "q3", ACT_LEFT)
    t("ff", "a", None, "ff", ACT_RIGHT, "a")
    return MarbleTransducer(
        input_alphabet=("a",), output_alphabet=("a",),
        states=("q0", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8", "q9",
                "q10", "q11", "q12", "q13", "ff", "fin0"),
        initial="q0", finals=frozenset({"ff", "fin0"}),
        colors=("M", "H"), delta=d, out=o, marble_bound=2,
    )


def bounded_pair_sst() -> SST:
    """a^n -> a^n a^(n-1) b: a (0,2)-bounded but copyful single-state SST."""
    x, y = Reg("x"), Reg("y")
    return SST(
        input_alphabet=("a",), output_alphabet=("a", "b"),
        states=("q",), registers=("x", "y"), initial="q",
        init_valuation={"x": (), "y": ()},
        delta={("q", "a"): "q"},
        update={("q", "a"): {"x": (x, Lit("a")), "y": (x, Lit("b"))}},
        output={"q": (x, y)},
    )


def exp_flow_nautomaton() -> NAutomaton:
    """Flow shape of the doubling register: one state, weight-2 self loop."""
    return NAutomaton(
        input_alphabet=("a",), states=("x",),
        alpha={"x": 1}, beta={"x": 1},
        mats={"a": {("x", "x"): 2}},
    )


def chain_nautomaton() -> NAutomaton:
    """Two states with an upper-triangular letter matrix [[1,1],[0,1]]."""
    return NAutomaton(
        input_alphabet=("a",), states=("x", "y"),
        alpha={"x": 1, "y": 0}, beta={"x": 0, "y": 1},
        mats={"a": {("x", "x"): 1, ("x", "y"): 1, ("y", "y"): 1}},
    )


MUL_LAYERS = (("x",), ("y",))


def all_machines() -> dict:
    """Name -> machine map for corpus export and sweep tests."""
    return {
        "reverse_two_way": reverse_two_way(),
        "copy_two_way": copy_two_way(),
        "identity_sst": identity_sst(),
        "reverse_sst": reverse_sst(),
        "reverse_sst_copyful": reverse_sst_copyful(),
        "exp_sst": exp_sst(),
        "exp_marble": exp_marble(),
        "mul_marble": mul_marble(),
        "mul_sst": mul_sst(),
        "mul_sst_copyful": mul_sst_copyful(),
        "pow2_marble": pow2_marble(),
        "pow2_marble_wasteful": pow2_marble_wasteful(),
        "bounded_pair_sst": bounded_pair_sst(),
        "exp_flow": exp_flow_nautomaton(),
        "chain_flow": chain_nautomaton(),
    }
