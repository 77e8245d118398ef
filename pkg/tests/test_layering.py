import pytest
from hypothesis import given, settings, strategies as st

from xducer import corpus
from xducer.growth import flow_automaton, is_simple
from xducer.layering import (
    bounded_sstf_to_unambiguous,
    compose_skebegfol,
    decompose_copyless,
    determinize_nsstf,
    extract_sstf,
    make_total,
    minimize_marbles,
    product_ssts,
    prune_dead_registers,
    prune_sst_registers,
    reassemble,
    remove_bounded_layer,
    splice_layers,
    to_k_layered,
    to_simple,
    value_sst,
)
from xducer.machines import (
    Fun,
    FunctionRegistry,
    Lit,
    MachineError,
    Reg,
    SST,
    check_copyless,
    check_layered,
    compose_substitutions,
    validate,
)
from xducer.oracle import equiv_check, words_up_to
from xducer.semantics import enumerate_nsstf_runs, run_marble, run_sst, run_sstf


# ---------------------------------------------------------------------------
# Totalization and simplification
# ---------------------------------------------------------------------------


def test_make_total_already_total():
    m = corpus.exp_sst()
    total, dfa = make_total(m)
    assert total is m
    assert all(dfa.accepts("a" * n) for n in range(5))


def test_make_total_domain_dfa():
    m = corpus.mul_sst()
    total, dfa = make_total(m)
    assert validate(total) == []
    for w in words_up_to(m.input_alphabet, 5, cap=3000):
        assert dfa.accepts(w) == run_sst(m, w).accepted
        assert run_sst(total, w).accepted


def test_make_total_empty_domain():
    m = corpus.exp_sst()
    dead = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=m.registers, initial=m.initial,
        init_valuation=m.init_valuation, delta=m.delta, update=m.update,
        output={},
    )
    total, dfa = make_total(dead)
    assert not any(dfa.accepts("a" * n) for n in range(4))
    assert run_sst(total, "aa").output == ()


@pytest.mark.parametrize("build,maxlen", [
    (corpus.exp_sst, 5), (corpus.mul_sst, 5), (corpus.bounded_pair_sst, 6),
    (corpus.reverse_sst_copyful, 4),
])
def test_to_simple_equivalence(build, maxlen):
    total, _dfa = make_total(build())
    simple = to_simple(total)
    assert is_simple(simple)
    assert equiv_check(simple, total, maxlen).equivalent


def test_to_simple_no_letters_single_state():
    m = SST(
        input_alphabet=("a",), output_alphabet=("b",), states=("q",),
        registers=("x",), initial="q", init_valuation={"x": ("b",)},
        delta={("q", "a"): "q"}, update={("q", "a"): {"x": (Reg("x"), Reg("x"))}},
        output={"q": (Reg("x"),)},
    )
    simple = to_simple(m)
    assert len(simple.registers) == 1 and is_simple(simple)


def test_prune_dead_registers():
    total, _ = make_total(corpus.mul_sst_copyful())
    simple = prune_dead_registers(to_simple(total))
    assert not any(x.endswith(".z") for x in simple.registers)
    assert equiv_check(simple, total, 4).equivalent


# ---------------------------------------------------------------------------
# Bounded-layer removal
# ---------------------------------------------------------------------------


def _classified_simple(m):
    from xducer.growth import classify

    total, dfa = make_total(m)
    simple = prune_dead_registers(to_simple(total))
    report = classify(flow_automaton(simple))
    return simple, report, total


def test_remove_bounded_layer_constant_register():
    simple, report, total = _classified_simple(corpus.mul_sst())
    machine, bound = remove_bounded_layer(simple, report.partition)
    assert len(machine.registers) == len(simple.registers) - len(report.partition[0])
    assert equiv_check(machine, total, 5).equivalent
    assert bound >= 1


def test_remove_bounded_layer_singleton_closure():
    # the bottom-class register holds the same one-letter word forever, so
    # the valuation closure has exactly one state
    m = SST(
        input_alphabet=("a",), output_alphabet=("b",), states=("q",),
        registers=("k", "y"), initial="q",
        init_valuation={"k": ("b",), "y": ()},
        delta={("q", "a"): "q"},
        update={("q", "a"): {"k": (Reg("k"),), "y": (Reg("k"), Reg("y"))}},
        output={"q": (Reg("y"),)},
    )
    simple, report, total = _classified_simple(m)
    assert report.degree == 1
    machine, _bound = remove_bounded_layer(simple, report.partition)
    assert len(machine.states) == 1
    assert len(machine.registers) == len(simple.registers) - 1
    assert equiv_check(machine, total, 6).equivalent


def test_remove_bounded_layer_degree_zero():
    m = SST(
        input_alphabet=("a",), output_alphabet=("b",), states=("q",),
        registers=("x",), initial="q", init_valuation={"x": ("b",)},
        delta={("q", "a"): "q"}, update={("q", "a"): {"x": (Reg("x"),)}},
        output={"q": (Reg("x"),)},
    )
    simple, report, total = _classified_simple(m)
    assert report.degree == 0
    machine, _bound = remove_bounded_layer(simple, report.partition)
    assert machine.registers == ()
    assert equiv_check(machine, total, 5).equivalent


# ---------------------------------------------------------------------------
# Skeleton / boundary decompositions
# ---------------------------------------------------------------------------

S1 = {"x": (Lit("a"),), "y": (Lit("b"), Reg("x"), Reg("y"), Lit("c"))}
S2 = {"x": (Reg("y"), Lit("d")), "y": (Reg("x"),)}


def test_decompose_worked_example():
    d1 = decompose_copyless(S1)
    assert d1.ske == {"x": (), "y": ("x", "y")}
    assert d1.beg == {"x": (Lit("a"),), "y": (Lit("b"),)}
    assert d1.fol == {"x": (), "y": (Lit("c"),)}
    d2 = decompose_copyless(S2)
    assert d2.ske == {"x": ("y",), "y": ("x",)}
    assert d2.fol == {"x": (), "y": (Lit("d"),)}


def test_compose_worked_example():
    comp = compose_skebegfol(decompose_copyless(S1), decompose_copyless(S2))
    assert comp.beg["x"] == (Lit("b"),)
    assert comp.beg["y"] == (Lit("a"),)
    assert comp.fol["x"] == ()
    assert comp.fol["y"] == (Lit("c"), Lit("d"))
    assert comp.ske["x"] == ("x", "y") and comp.ske["y"] == ()
    assert reassemble(comp) == compose_substitutions(S1, S2)


def test_decompose_rejects_copyful():
    with pytest.raises(MachineError):
        decompose_copyless({"x": (Reg("x"), Reg("x"))})


REGS = ("r0", "r1", "r2", "r3")


@st.composite
def copyless_substitutions(draw):
    regs = list(REGS)
    available = list(regs)
    sub = {}
    for x in regs:
        rhs = []
        for _ in range(draw(st.integers(0, 3))):
            if available and draw(st.booleans()):
                pick = draw(st.sampled_from(sorted(available)))
                available.remove(pick)
                rhs.append(Reg(pick))
            else:
                rhs.append(Lit(draw(st.sampled_from("ab"))))
        sub[x] = tuple(rhs)
    return sub


@settings(max_examples=200, deadline=None)
@given(copyless_substitutions())
def test_decompose_reassemble_roundtrip(sub):
    assert reassemble(decompose_copyless(sub)) == sub


@settings(max_examples=200, deadline=None)
@given(copyless_substitutions(), copyless_substitutions())
def test_compose_agrees_with_direct_composition(s1, s2):
    composed = compose_skebegfol(decompose_copyless(s1), decompose_copyless(s2))
    assert reassemble(composed) == compose_substitutions(s1, s2)


# ---------------------------------------------------------------------------
# Extraction and the external-function chain
# ---------------------------------------------------------------------------


def test_extract_single_layer_is_identity():
    m = corpus.bounded_pair_sst()
    top, registry, binding = extract_sstf(m, (m.registers,))
    assert top is m and registry.entries == {} and binding == {}


def _two_layer_machine():
    simple, report, _total = _classified_simple(corpus.mul_sst())
    machine, _b = remove_bounded_layer(simple, report.partition)
    return machine, report.partition[1:]


def test_extract_mul_layers():
    machine, layers = _two_layer_machine()
    top, registry, binding = extract_sstf(machine, layers)
    assert set(top.funs) == set(binding)
    assert set(registry.entries) == set(binding)
    for w in words_up_to(machine.input_alphabet, 5, cap=2000):
        mine = run_sstf(top, w, registry)
        want = run_sst(machine, w)
        assert mine.output == want.output, w


def test_extract_routes_output_references():
    x, y = Reg("x"), Reg("y")
    m = SST(
        input_alphabet=("a",), output_alphabet=("a",), states=("q",),
        registers=("x", "y"), initial="q",
        init_valuation={"x": (), "y": ()},
        delta={("q", "a"): "q"},
        update={("q", "a"): {"x": (x, Lit("a")), "y": (x, y)}},
        output={"q": (x, y, x)},
    )
    top, registry, _binding = extract_sstf(m, (("x",), ("y",)))
    assert any(r.endswith(".val") for r in top.registers)
    assert not any(isinstance(t, Fun) for rhs in top.output.values() for t in rhs)
    for n in range(6):
        assert run_sstf(top, "a" * n, registry).output == run_sst(m, "a" * n).output


def test_delayed_value_machines():
    m = corpus.bounded_pair_sst()
    top, registry, binding = extract_sstf(m, (("x",), ("y",)))
    f = registry.entries["f_x"]
    # value of x before the last letter
    assert run_sst(f, "aaa").output_text == "aa"
    assert run_sst(f, "a").output_text == ""
    plain = value_sst(m, "x", ("x",))
    assert run_sst(plain, "aaa").output_text == "aaa"


# ---------------------------------------------------------------------------
# Unambiguous nondeterminism and determinization
# ---------------------------------------------------------------------------


def test_unambiguous_chain_on_pair_machine():
    total, _ = make_total(corpus.bounded_pair_sst())
    n = bounded_sstf_to_unambiguous(total, 2)
    assert validate(n) == []
    assert check_copyless(n) == []
    for k in range(5):
        runs = enumerate_nsstf_runs(n, "a" * k)
        assert len(runs) == 1
        assert runs[0][1] == run_sst(total, "a" * k).output


def test_unambiguous_copyless_input_has_binary_profiles():
    rev = corpus.reverse_sst(("a", "b"))
    total, _ = make_total(rev)
    n = bounded_sstf_to_unambiguous(total, 1)
    for w in words_up_to(("a", "b"), 4, cap=200):
        runs = enumerate_nsstf_runs(n, w)
        assert len(runs) == 1
        assert runs[0][1] == run_sst(total, w).output


def test_determinize_pair_machine():
    total, _ = make_total(corpus.bounded_pair_sst())
    det = determinize_nsstf(bounded_sstf_to_unambiguous(total, 2))
    assert check_copyless(det) == []
    assert validate(det) == []
    assert equiv_check(det, total, 6).equivalent


def test_determinize_copyless_roundtrip():
    rev = corpus.reverse_sst(("a", "b"))
    total, _ = make_total(rev)
    det = determinize_nsstf(bounded_sstf_to_unambiguous(total, 1))
    assert check_copyless(det) == []
    assert equiv_check(det, total, 5).equivalent


def test_determinize_slot_budget_respected():
    total, _ = make_total(corpus.bounded_pair_sst())
    n = bounded_sstf_to_unambiguous(total, 2)
    det = determinize_nsstf(n)
    max_slots = 2 * len(n.states) - 1
    per_slot = 2 * len(n.registers)
    assert len(det.registers) <= max_slots * per_slot


# ---------------------------------------------------------------------------
# Splicing
# ---------------------------------------------------------------------------


def test_splice_timing_on_running_prefix():
    # top layer appends the lower register's value once per step
    x, y = Reg("x"), Reg("y")
    m = SST(
        input_alphabet=("a",), output_alphabet=("a",), states=("q",),
        registers=("x", "y"), initial="q",
        init_valuation={"x": (), "y": ()},
        delta={("q", "a"): "q"},
        update={("q", "a"): {"x": (x, Lit("a")), "y": (Fun("f_x"), y)}},
        output={"q": (y,)}, funs=("f_x",),
    )
    lower = value_sst(m, "x", ("x",))
    product, layers, expr = product_ssts({"f_x": (lower, (("x",),))})
    spliced, out_layers = splice_layers(m, product, layers, expr)
    assert check_layered(spliced, out_layers) == []
    registry = FunctionRegistry({"f_x": corpus_prev(m)})
    for n in range(6):
        want = run_sstf(m, "a" * n, registry).output
        got = run_sst(spliced, "a" * n).output
        assert got == want, n


def corpus_prev(m):
    from xducer.layering import _prev_value_sst

    return _prev_value_sst(m, "x", ("x",))


def test_splice_empty_registry_returns_top():
    m = corpus.bounded_pair_sst()
    out, layers = splice_layers(m, m, (), {})
    assert out is m and layers == (m.registers,)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def test_to_k_layered_exponential():
    res = to_k_layered(corpus.exp_sst())
    assert res.kind == "exponential"
    assert res.report.kind == "exponential"


def test_to_k_layered_mul_copyful():
    res = to_k_layered(corpus.mul_sst_copyful())
    assert res.kind == "layered" and res.k == 1
    assert check_layered(res.machine, res.layers) == []
    assert equiv_check(res.machine, corpus.mul_sst_copyful(), 5).equivalent


def test_to_k_layered_reverse_copyful_becomes_copyless():
    res = to_k_layered(corpus.reverse_sst_copyful())
    assert res.kind == "layered" and res.k == 0
    assert check_copyless(res.machine) == []
    assert equiv_check(res.machine, corpus.reverse_sst_copyful(), 4).equivalent


def test_to_k_layered_degree_zero():
    m = SST(
        input_alphabet=("a",), output_alphabet=("b",), states=("q", "r"),
        registers=("x",), initial="q", init_valuation={"x": ("b",)},
        delta={("q", "a"): "r", ("r", "a"): "q"},
        update={("q", "a"): {"x": (Reg("x"),)}, ("r", "a"): {"x": (Reg("x"),)}},
        output={"q": (Reg("x"),)},
    )
    res = to_k_layered(m)
    assert res.k == 0 and res.machine.registers == ()
    assert equiv_check(res.machine, m, 5).equivalent


def test_to_k_layered_respects_domain():
    res = to_k_layered(corpus.mul_sst())
    assert equiv_check(res.machine, corpus.mul_sst(), 5).equivalent


def test_minimize_marbles_exponential():
    res = minimize_marbles(corpus.exp_marble())
    assert res.kind == "exponential"


def test_minimize_marbles_pow2_wasteful():
    res = minimize_marbles(corpus.pow2_marble_wasteful())
    assert res.kind == "marble" and res.k_min == 1
    for n in range(6):
        r = run_marble(res.machine, "a" * n)
        assert r.accepted and len(r.output) == n * n
        assert r.max_stack_depth <= 1
    assert equiv_check(res.machine, corpus.pow2_marble_wasteful(), 5).equivalent


def test_prune_sst_registers_keeps_function():
    m = corpus.mul_sst_copyful()
    total, _ = make_total(m)
    pruned, layers = prune_sst_registers(total, (total.registers,))
    assert "z" not in pruned.registers
    assert equiv_check(pruned, total, 4).equivalent
