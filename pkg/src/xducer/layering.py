"""Copy-layer minimization pipeline for register transducers.

The chain runs: totalize, eliminate states and letters, drop the bounded
bottom layer of the register-flow partition, convert each remaining layer
from per-word-bounded copying to copyless via an unambiguous nondeterministic
intermediate, and splice the recursively processed lower layers back in as a
parallel product.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .growth import GrowthReport, classify, flow_automaton, is_simple, trim
from .machines import (
    DFA,
    Fun,
    FunctionRegistry,
    Lit,
    MachineError,
    NSSTF,
    Reg,
    SST,
    Substitution,
    check_layer_order,
    check_layered,
    find_copy_bound,
    register_occurrences,
)

SINK = "__sink"


# ---------------------------------------------------------------------------
# Totalization and simplification
# ---------------------------------------------------------------------------


def is_total(m: SST) -> bool:
    return (all((q, a) in m.delta for q in m.states for a in m.input_alphabet)
            and all(q in m.output for q in m.states))


def make_total(m: SST) -> tuple:
    """Sink-complete the machine and return it with its domain automaton.

    The completed machine outputs the empty word where undefined; the domain
    automaton recognizes exactly the original domain, so the pair jointly
    determines the original function.
    """
    need_sink = any((q, a) not in m.delta
                    for q in m.states for a in m.input_alphabet)
    states = m.states + ((SINK,) if need_sink else ())
    dfa_delta = {}
    for q in states:
        for a in m.input_alphabet:
            dfa_delta[(q, a)] = m.delta.get((q, a), SINK)
    dfa = DFA(alphabet=m.input_alphabet, states=states, initial=m.initial,
              delta=dfa_delta, accepting=frozenset(m.output))
    if not need_sink and is_total(m):
        return m, dfa
    empty_sub = {x: () for x in m.registers}
    delta = dict(m.delta)
    update = {k: dict(v) for k, v in m.update.items()}
    for q in states:
        for a in m.input_alphabet:
            if (q, a) not in delta:
                delta[(q, a)] = SINK
                update[(q, a)] = dict(empty_sub)
    output = {q: m.output.get(q, ()) for q in states}
    total = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=states, registers=m.registers, initial=m.initial,
        init_valuation=dict(m.init_valuation), delta=delta, update=update,
        output=output, funs=m.funs,
    )
    return total, dfa


def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "_"
    return name


def _state_eliminate(m: SST, keep_letters: bool) -> SST:
    """Collapse a total machine to a single state.

    Register (q, x) holds the value of x when q is the current state and the
    empty word otherwise, so per-letter updates concatenate the relabelled
    updates of all predecessors of q; at most one term is nonempty along a
    run.  The output map must already be letter-free (letters there would
    leak into inactive branches).
    """
    if not is_total(m):
        raise MachineError("state elimination requires a total machine")
    for q, rhs in m.output.items():
        if any(isinstance(t, Lit) for t in rhs):
            raise MachineError("output letters must be routed through registers first")

    def rename(q, x):
        return "%s.%s" % (q, x)

    registers = tuple(rename(q, x) for q in m.states for x in m.registers)
    preds: dict = {}
    for (p, a), q in m.delta.items():
        preds.setdefault((q, a), []).append(p)
    update = {}
    s0 = "s"
    for a in m.input_alphabet:
        sub = {}
        for q in m.states:
            for x in m.registers:
                rhs: list = []
                for p in sorted(preds.get((q, a), ())):
                    for tok in m.update[(p, a)][x]:
                        if isinstance(tok, Reg):
                            rhs.append(Reg(rename(p, tok.name)))
                        elif isinstance(tok, Lit) and keep_letters:
                            rhs.append(tok)
                        elif isinstance(tok, Lit):
                            raise MachineError("letters not allowed here")
                        else:
                            rhs.append(tok)
                sub[rename(q, x)] = tuple(rhs)
        update[(s0, a)] = sub
    out_tokens: list = []
    for q in m.states:
        for tok in m.output[q]:
            out_tokens.append(Reg(rename(q, tok.name)))
    init = {}
    for q in m.states:
        for x in m.registers:
            init[rename(q, x)] = tuple(m.init_valuation[x]) if q == m.initial else ()
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=(s0,), registers=registers, initial=s0,
        init_valuation=init,
        delta={(s0, a): s0 for a in m.input_alphabet},
        update=update, output={s0: tuple(out_tokens)}, funs=m.funs,
    )


def _route_letters(m: SST, in_updates: bool, in_output: bool) -> SST:
    """Replace output letters by constant registers (one per used letter)."""
    used = set()
    if in_updates:
        for s in m.update.values():
            for rhs in s.values():
                used.update(t.sym for t in rhs if isinstance(t, Lit))
    if in_output:
        for rhs in m.output.values():
            used.update(t.sym for t in rhs if isinstance(t, Lit))
    if not used:
        return m
    taken = set(m.registers)
    const = {}
    for b in sorted(used):
        const[b] = _fresh("k.%s" % b, taken)
        taken.add(const[b])

    def rewrite(rhs, active):
        return tuple(Reg(const[t.sym]) if isinstance(t, Lit) and active and t.sym in const
                     else t for t in rhs)

    registers = m.registers + tuple(const[b] for b in sorted(used))
    update = {}
    for key, s in m.update.items():
        sub = {x: rewrite(rhs, in_updates) for x, rhs in s.items()}
        for b in sorted(used):
            sub[const[b]] = (Reg(const[b]),)
        update[key] = sub
    init = dict(m.init_valuation)
    for b in sorted(used):
        init[const[b]] = (b,)
    output = {q: rewrite(rhs, in_output) for q, rhs in m.output.items()}
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=registers, initial=m.initial,
        init_valuation=init, delta=dict(m.delta), update=update,
        output=output, funs=m.funs,
    )


def to_simple(m: SST) -> SST:
    """Equivalent single-state machine with letter-free updates and output."""
    if m.funs:
        raise MachineError("cannot simplify a machine with external functions")
    if not is_total(m):
        raise MachineError("simplification requires a total machine")
    return _state_eliminate(_route_letters(m, True, True), keep_letters=False)


def prune_sst_registers(m: SST, layers: Optional[tuple] = None) -> tuple:
    """Drop registers that stay empty forever or never flow into any output.

    Occurrences of always-empty registers are erased; registers that cannot
    reach an output reference are deleted together with their updates.  The
    layer partition, when given, is filtered alongside (pruning preserves
    the layer discipline).
    """
    nonempty = set()
    for x in m.registers:
        if m.init_valuation[x]:
            nonempty.add(x)
    for s in m.update.values():
        for x, rhs in s.items():
            if any(isinstance(t, (Lit, Fun)) for t in rhs):
                nonempty.add(x)
    changed = True
    while changed:
        changed = False
        for s in m.update.values():
            for x, rhs in s.items():
                if x not in nonempty and any(
                        isinstance(t, Reg) and t.name in nonempty for t in rhs):
                    nonempty.add(x)
                    changed = True
    useful = set()
    for rhs in m.output.values():
        useful.update(t.name for t in rhs if isinstance(t, Reg))
    changed = True
    while changed:
        changed = False
        for s in m.update.values():
            for x, rhs in s.items():
                if x in useful:
                    for t in rhs:
                        if isinstance(t, Reg) and t.name not in useful:
                            useful.add(t.name)
                            changed = True
    keep = useful & nonempty

    def strip(rhs):
        return tuple(t for t in rhs
                     if not isinstance(t, Reg) or t.name in keep)

    registers = tuple(x for x in m.registers if x in keep)
    update = {key: {x: strip(s[x]) for x in registers}
              for key, s in m.update.items()}
    output = {q: strip(rhs) for q, rhs in m.output.items()}
    pruned = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=registers, initial=m.initial,
        init_valuation={x: m.init_valuation[x] for x in registers},
        delta=dict(m.delta), update=update, output=output, funs=m.funs,
    )
    if layers is None:
        return pruned, None
    new_layers = tuple(tuple(x for x in layer if x in keep) for layer in layers)
    if not new_layers:
        new_layers = ((),)
    return pruned, new_layers


def prune_dead_registers(m: SST) -> SST:
    """Drop registers that never hold anything or never reach the output.

    Registers with an everywhere-empty value are erased from all right-hand
    sides; registers that never flow into the output are deleted outright
    (no kept update can mention them).
    """
    if not is_simple(m):
        raise MachineError("register pruning expects a simple machine")
    flow = trim(flow_automaton(m))
    keep = set(flow.states)
    q = m.states[0]

    def strip(rhs):
        return tuple(t for t in rhs if t.name in keep)

    registers = tuple(x for x in m.registers if x in keep)
    update = {}
    for a in m.input_alphabet:
        update[(q, a)] = {x: strip(m.update[(q, a)][x]) for x in registers}
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=registers, initial=m.initial,
        init_valuation={x: m.init_valuation[x] for x in registers},
        delta=dict(m.delta), update=update,
        output={q: strip(m.output[q])},
    )


# ---------------------------------------------------------------------------
# Removing the bounded bottom layer
# ---------------------------------------------------------------------------


def remove_bounded_layer(m: SST, partition: Sequence[Sequence[str]],
                         max_states: int = 20000) -> tuple:
    """Hardcode the bottom height class into states.

    The new states are the reachable valuations of the bottom-class
    registers (their values are bounded, so the closure is finite); updates
    and output of the remaining registers inline those values as letters.
    Returns the rewritten machine and the measured per-word copy bound of
    its layers.
    """
    if not is_simple(m):
        raise MachineError("bounded-layer removal expects a simple machine")
    q0 = m.states[0]
    s0 = tuple(partition[0])
    rest_layers = tuple(tuple(layer) for layer in partition[1:])
    rest = tuple(x for layer in rest_layers for x in layer)

    def val_key(val):
        return tuple((x, val[x]) for x in s0)

    init_val = {x: tuple(m.init_valuation[x]) for x in s0}
    names = {val_key(init_val): "v0"}
    vals = {val_key(init_val): init_val}
    order = [val_key(init_val)]
    frontier = [val_key(init_val)]
    delta = {}
    while frontier:
        if len(names) > max_states:
            raise MachineError(
                "bottom-layer valuation closure exceeded %d states "
                "(partition is probably wrong)" % max_states)
        key = frontier.pop(0)
        val = vals[key]
        for a in sorted(m.input_alphabet):
            new = {}
            for x in s0:
                parts: list = []
                for tok in m.update[(q0, a)][x]:
                    if tok.name not in val:
                        raise MachineError(
                            "bottom-class register %r depends on %r outside the class"
                            % (x, tok.name))
                    parts.extend(val[tok.name])
                new[x] = tuple(parts)
            nk = val_key(new)
            if nk not in names:
                names[nk] = "v%d" % len(names)
                vals[nk] = new
                order.append(nk)
                frontier.append(nk)
            delta[(names[key], a)] = names[nk]

    def inline(rhs, val):
        out: list = []
        for tok in rhs:
            if isinstance(tok, Reg) and tok.name in val:
                out.extend(Lit(b) for b in val[tok.name])
            else:
                out.append(tok)
        return tuple(out)

    update = {}
    output = {}
    for key in order:
        val = vals[key]
        for a in m.input_alphabet:
            update[(names[key], a)] = {
                y: inline(m.update[(q0, a)][y], val) for y in rest
            }
        output[names[key]] = inline(m.output[q0], val)
    machine = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=tuple(names[k] for k in order), registers=rest,
        initial="v0",
        init_valuation={y: tuple(m.init_valuation[y]) for y in rest},
        delta=delta, update=update, output=output,
    )
    bound = find_copy_bound(machine, rest_layers) if rest else 1
    return machine, bound


# ---------------------------------------------------------------------------
# Copyless substitution decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkeBegFol:
    """A copyless substitution split into skeleton plus boundary words.

    ``ske`` maps each register to the register word of its image (letters
    erased); ``beg`` holds the maximal letter prefix of each image; ``fol``
    holds, per source register, the letter block following its unique
    occurrence.  Reassembling beg/ske/fol reproduces the substitution.
    The beg/fol entries are token tuples so the same composition rules work
    for concrete words and for register-reference expressions.
    """

    ske: dict  # register -> tuple of register names
    beg: dict  # register -> token tuple
    fol: dict  # register -> token tuple


def decompose_copyless(s: Substitution) -> SkeBegFol:
    counts = register_occurrences(s)
    if any(c > 1 for c in counts.values()):
        raise MachineError("substitution is not copyless")
    ske, beg, fol = {}, {}, {}
    regs = sorted(s)
    for y in regs:
        fol[y] = ()
    for x in regs:
        rhs = s[x]
        names = []
        i = 0
        while i < len(rhs) and not isinstance(rhs[i], Reg):
            i += 1
        beg[x] = tuple(rhs[:i])
        while i < len(rhs):
            y = rhs[i].name
            names.append(y)
            j = i + 1
            while j < len(rhs) and not isinstance(rhs[j], Reg):
                j += 1
            fol[y] = tuple(rhs[i + 1:j])
            i = j
        ske[x] = tuple(names)
    return SkeBegFol(ske, beg, fol)


def reassemble(sbf: SkeBegFol) -> Substitution:
    s = {}
    for x, names in sbf.ske.items():
        rhs = list(sbf.beg[x])
        for y in names:
            rhs.append(Reg(y))
            rhs.extend(sbf.fol[y])
        s[x] = tuple(rhs)
    return s


def compose_skebegfol(p: SkeBegFol, c: SkeBegFol) -> SkeBegFol:
    """Decomposition of the composite applying ``p`` to the images of ``c``.

    Registers whose image under ``p`` is letter-only get absorbed into the
    neighbouring boundary words; everything stays copyless because each
    boundary entry of either argument lands in exactly one result entry.
    """
    regs = sorted(c.ske)
    ske, beg, fol = {}, {}, {}
    host = {}  # register z -> (register y with z in p.ske[y], index)
    for y, names in p.ske.items():
        for i, z in enumerate(names):
            host[z] = (y, i)
    where = {}  # register y -> (register x with y in c.ske[x], index)
    for x, names in c.ske.items():
        for i, y in enumerate(names):
            where[y] = (x, i)
    for x in regs:
        ys = c.ske[x]
        ske[x] = tuple(z for y in ys for z in p.ske[y])
        b = list(c.beg[x])
        i = 0
        while i < len(ys) and not p.ske[ys[i]]:
            b.extend(p.beg[ys[i]])
            b.extend(c.fol[ys[i]])
            i += 1
        if i < len(ys):
            b.extend(p.beg[ys[i]])
        beg[x] = tuple(b)
    for z in regs:
        if z not in host:
            fol[z] = ()
            continue
        y, i = host[z]
        if i + 1 < len(p.ske[y]):
            fol[z] = tuple(p.fol[z])
            continue
        f = list(p.fol[z])
        if y in where:
            x, j = where[y]
            ys = c.ske[x]
            f.extend(c.fol[y])
            j += 1
            while j < len(ys) and not p.ske[ys[j]]:
                f.extend(p.beg[ys[j]])
                f.extend(c.fol[ys[j]])
                j += 1
            if j < len(ys):
                f.extend(p.beg[ys[j]])
        fol[z] = tuple(f)
    return SkeBegFol(ske, beg, fol)


# ---------------------------------------------------------------------------
# Extracting the top layer as a machine with external functions
# ---------------------------------------------------------------------------


def _prev_value_sst(m: SST, x: str, lower: tuple) -> SST:
    """Total machine computing the value x held before the last input letter."""
    shadow = _fresh("%s.prev" % x, set(lower))
    registers = lower + (shadow,)
    update = {}
    for key, s in m.update.items():
        sub = {u: s[u] for u in lower}
        sub[shadow] = (Reg(x),)
        update[key] = sub
    init = {u: tuple(m.init_valuation[u]) for u in lower}
    init[shadow] = tuple(m.init_valuation[x])
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=registers, initial=m.initial,
        init_valuation=init, delta=dict(m.delta), update=update,
        output={q: (Reg(shadow),) for q in m.states},
    )


def value_sst(m: SST, x: str, lower: tuple) -> SST:
    """Total machine computing the current value of a lower-layer register."""
    update = {key: {u: s[u] for u in lower} for key, s in m.update.items()}
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=lower, initial=m.initial,
        init_valuation={u: tuple(m.init_valuation[u]) for u in lower},
        delta=dict(m.delta), update=update,
        output={q: (Reg(x),) for q in m.states},
    )


def extract_sstf(m: SST, layers: Sequence[Sequence[str]]) -> tuple:
    """Split the top layer off as a machine calling the lower layers.

    Returns (top machine with external functions, registry of lower-layer
    value machines, binding of function names to source registers).  Each
    function f_x yields the value x held *before* the last letter of its
    argument, which is exactly what a register reference inside an update
    denotes; output references to lower registers go through refresh
    registers holding the current value instead.
    """
    if check_layer_order(m, layers):
        raise MachineError("layer order violated")
    if len(layers) == 1:
        return m, FunctionRegistry({}), {}
    lower = tuple(x for layer in layers[:-1] for x in layer)
    top = tuple(layers[-1])
    fun_of = {x: "f_%s" % x for x in lower}
    registry = FunctionRegistry({
        fun_of[x]: _prev_value_sst(m, x, lower) for x in lower
    })
    binding = {fun_of[x]: x for x in lower}

    def top_tokens(rhs):
        out = []
        for tok in rhs:
            if isinstance(tok, Reg) and tok.name in fun_of:
                out.append(Fun(fun_of[tok.name]))
            else:
                out.append(tok)
        return tuple(out)

    hats = {}
    for q, rhs in m.output.items():
        for tok in rhs:
            if isinstance(tok, Reg) and tok.name in fun_of and tok.name not in hats:
                hats[tok.name] = _fresh("%s.val" % tok.name, set(m.registers))
    registers = top + tuple(hats[x] for x in sorted(hats))
    update = {}
    for key, s in m.update.items():
        sub = {y: top_tokens(s[y]) for y in top}
        for x in sorted(hats):
            sub[hats[x]] = top_tokens(s[x])
        update[key] = sub
    output = {}
    for q, rhs in m.output.items():
        output[q] = tuple(
            Reg(hats[t.name]) if isinstance(t, Reg) and t.name in hats else t
            for t in rhs
        )
    init = {y: tuple(m.init_valuation[y]) for y in top}
    for x in sorted(hats):
        init[hats[x]] = tuple(m.init_valuation[x])
    top_machine = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=registers, initial=m.initial,
        init_valuation=init, delta=dict(m.delta), update=update,
        output=output, funs=tuple(sorted(fun_of.values())),
    )
    return top_machine, registry, binding


# ---------------------------------------------------------------------------
# Bounded copies -> unambiguous copyless nondeterminism
# ---------------------------------------------------------------------------


def _profiles(registers: tuple, bound: int):
    if not registers:
        yield ()
        return
    for rest in _profiles(registers[1:], bound):
        for v in range(bound + 1):
            yield ((registers[0], v),) + rest


def _copy_reg(x: str, i: int) -> str:
    return "%s@%d" % (x, i)


def bounded_sstf_to_unambiguous(m: SST, bound: Optional[int] = None,
                                max_profiles: int = 200000) -> NSSTF:
    """Guess, per step, how often each register still reaches the output.

    States pair the original state with an occurrence profile; registers are
    indexed copies.  Transitions respect the backward recurrence of the
    profiles, which forces a unique accepting run, and the updates distribute
    copy indices left-to-right across targets taken in register order, which
    keeps them copyless.
    """
    if not is_total(m):
        raise MachineError("the bounded machine must be total")
    if bound is None:
        bound = find_copy_bound(m, (m.registers,))
    # The guessed counts track occurrences in the *final output*, so an
    # output map using a register several times multiplies the update bound.
    fmult = 1
    for rhs in m.output.values():
        counts = Counter(t.name for t in rhs if isinstance(t, Reg))
        if counts:
            fmult = max(fmult, max(counts.values()))
    bound *= fmult
    if (bound + 1) ** len(m.registers) > max_profiles:
        raise MachineError("profile space too large")
    regs = tuple(sorted(m.registers))
    profiles = list(_profiles(regs, bound))

    def pname(q, g):
        return "%s|%s" % (q, ",".join("%s=%d" % (x, v) for x, v in g))

    states = []
    for q in m.states:
        for g in profiles:
            states.append(pname(q, g))
    initial = {}
    for g in profiles:
        val = {}
        gd = dict(g)
        for x in regs:
            for i in range(1, bound + 1):
                val[_copy_reg(x, i)] = tuple(m.init_valuation[x]) if i <= gd[x] else ()
        initial[pname(m.initial, g)] = val
    transitions = []
    update = {}
    for (q, a), q2 in sorted(m.delta.items()):
        s = m.update[(q, a)]
        occ = {x: Counter() for x in regs}
        for y in regs:
            for tok in s[y]:
                if isinstance(tok, Reg):
                    occ[tok.name][y] += 1
        for g2 in profiles:
            g2d = dict(g2)
            g1d = {x: sum(occ[x][y] * g2d[y] for y in regs) for x in regs}
            if any(v > bound for v in g1d.values()):
                continue
            g1 = tuple((x, g1d[x]) for x in regs)
            key = (pname(q, g1), a, pname(q2, g2))
            transitions.append(key)
            next_index = {x: 1 for x in regs}
            sub = {}
            for y in regs:
                for j in range(1, bound + 1):
                    if j > g2d[y]:
                        sub[_copy_reg(y, j)] = ()
                        continue
                    rhs: list = []
                    for tok in s[y]:
                        if isinstance(tok, Reg):
                            rhs.append(Reg(_copy_reg(tok.name, next_index[tok.name])))
                            next_index[tok.name] += 1
                        else:
                            rhs.append(tok)
                    sub[_copy_reg(y, j)] = tuple(rhs)
            update[key] = sub
    output = {}
    for q, rhs in m.output.items():
        need = Counter(t.name for t in rhs if isinstance(t, Reg))
        g = tuple((x, need.get(x, 0)) for x in regs)
        if any(v > bound for _, v in g):
            raise MachineError("output uses a register more often than the bound")
        counter = Counter()
        toks: list = []
        for t in rhs:
            if isinstance(t, Reg):
                counter[t.name] += 1
                toks.append(Reg(_copy_reg(t.name, counter[t.name])))
            else:
                toks.append(t)
        output[pname(q, g)] = tuple(toks)
    machine = NSSTF(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=tuple(states),
        registers=tuple(_copy_reg(x, i) for x in regs for i in range(1, bound + 1)),
        funs=m.funs, initial=initial, transitions=tuple(sorted(transitions)),
        update=update, output=output,
    )
    return trim_nsstf(machine)


def trim_nsstf(m: NSSTF) -> NSSTF:
    """Keep only states both reachable from an initial state and co-reachable
    from a final one."""
    fwd: dict = {}
    bwd: dict = {}
    for (q, _a, q2) in m.transitions:
        fwd.setdefault(q, set()).add(q2)
        bwd.setdefault(q2, set()).add(q)

    def closure(seed, edges):
        seen = set(seed)
        stack = list(seed)
        while stack:
            q = stack.pop()
            for r in edges.get(q, ()):
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return seen

    keep = closure(set(m.initial), fwd) & closure(set(m.output), bwd)
    transitions = tuple(t for t in m.transitions if t[0] in keep and t[2] in keep)
    return NSSTF(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=tuple(q for q in m.states if q in keep),
        registers=m.registers, funs=m.funs,
        initial={q: v for q, v in m.initial.items() if q in keep},
        transitions=transitions,
        update={k: v for k, v in m.update.items() if k in transitions},
        output={q: v for q, v in m.output.items() if q in keep},
    )


# ---------------------------------------------------------------------------
# Alive-forest determinization
# ---------------------------------------------------------------------------

# Forest encoding: a state is a tuple of (initial state, tree) roots, where
# tree = ("leaf", nsstf state, ske items) or ("br", ske items, children).
# The ske items describe the skeleton of the substitution composed along the
# deterministic branch ending at the node; its boundary words live in the
# result registers addressed by the node's pre-order slot number.


def _tree_ske(tree):
    return tree[2] if tree[0] == "leaf" else tree[1]


def _tree_children(tree):
    return () if tree[0] == "leaf" else tree[2]


def _tree_min_leaf(tree):
    if tree[0] == "leaf":
        return tree[1]
    return min(_tree_min_leaf(c) for c in _tree_children(tree))


def _tree_leaves(tree):
    if tree[0] == "leaf":
        return [tree[1]]
    out = []
    for c in _tree_children(tree):
        out.extend(_tree_leaves(c))
    return out


def _slot_regs(slot: int, x: str):
    return "s%d.%s.beg" % (slot, x), "s%d.%s.fol" % (slot, x)


def _slot_sbf(slot: int, ske_items) -> SkeBegFol:
    """Symbolic decomposition whose boundary words are the slot's registers."""
    ske = {x: names for x, names in ske_items}
    beg, fol = {}, {}
    for x, _names in ske_items:
        b, f = _slot_regs(slot, x)
        beg[x] = (Reg(b),)
        fol[x] = (Reg(f),)
    return SkeBegFol(ske, beg, fol)


def determinize_nsstf(m: NSSTF, max_states: int = 200000) -> SST:
    """Deterministic copyless machine tracking all surviving runs.

    The state stores the shape of the alive forest of initial runs with the
    skeletons of the substitutions along its deterministic branches; their
    boundary words live in per-slot registers.  Extending by a letter adds
    the successor transitions, discards dead subtrees, composes unary chains
    (copylessly, via the boundary-word calculus) and renumbers slots
    canonically.
    """
    regs = tuple(sorted(m.registers))
    ident_ske = tuple((x, (x,)) for x in regs)
    max_slots = max(2 * len(m.states) - 1, 1)
    registers = tuple(
        r for slot in range(max_slots) for x in regs for r in _slot_regs(slot, x)
    )
    empty_sub = {r: () for r in registers}

    succ: dict = {}
    for (q, a, q2) in m.transitions:
        succ.setdefault((q, a), []).append(q2)
    for key in succ:
        succ[key].sort()

    init_forest = tuple(
        (q, ("leaf", q, ident_ske)) for q in sorted(m.initial)
    )

    def slot_assignment(forest):
        slots = {}

        def visit(tree, path):
            slots[path] = len(slots)
            for i, c in enumerate(_tree_children(tree)):
                visit(c, path + (i,))

        for r, (_qi, tree) in enumerate(forest):
            visit(tree, (r,))
        return slots

    def freeze_ske(ske):
        return tuple((x, tuple(ske[x])) for x in regs)

    def extend(forest, a):
        """New forest plus the substitution over the slot registers.

        Works on a parallel pair of trees: the plain tree (state material)
        and a mirror tree of segment decompositions whose boundary words are
        expressions over the old slot registers.
        """
        old_slots = slot_assignment(forest)
        new_leaves: list = []

        def build(tree, path):
            """Returns None (dead) or (plain tree, decomposition tree).

            Decomposition trees mirror plain trees: ("leaf", sbf) or
            ("br", sbf, children); unary chains are already folded.
            """
            slot = old_slots[path]
            sbf_here = _slot_sbf(slot, _tree_ske(tree))
            if tree[0] == "leaf":
                p = tree[1]
                kids = [(p2, decompose_copyless(m.update[(p, a, p2)]))
                        for p2 in succ.get((p, a), ())]
                if not kids:
                    return None
                new_leaves.extend(p2 for p2, _ in kids)
                if len(kids) == 1:
                    p2, lam = kids[0]
                    comp = compose_skebegfol(sbf_here, lam)
                    return ("leaf", p2, freeze_ske(comp.ske)), ("leaf", comp)
                pairs = sorted(
                    ((("leaf", p2, freeze_ske(lam.ske)), ("leaf", lam))
                     for p2, lam in kids),
                    key=lambda ps: _tree_min_leaf(ps[0]))
                plain = ("br", freeze_ske(sbf_here.ske),
                         tuple(p for p, _s in pairs))
                return plain, ("br", sbf_here, tuple(s for _p, s in pairs))
            alive = [got for got in
                     (build(c, path + (i,))
                      for i, c in enumerate(_tree_children(tree)))
                     if got is not None]
            if not alive:
                return None
            if len(alive) == 1:
                sub_plain, sub_dec = alive[0]
                comp = compose_skebegfol(sbf_here, sub_dec[1])
                if sub_plain[0] == "leaf":
                    return (("leaf", sub_plain[1], freeze_ske(comp.ske)),
                            ("leaf", comp))
                return (("br", freeze_ske(comp.ske), sub_plain[2]),
                        ("br", comp, sub_dec[2]))
            pairs = sorted(alive, key=lambda ps: _tree_min_leaf(ps[0]))
            plain = ("br", freeze_ske(sbf_here.ske), tuple(p for p, _s in pairs))
            return plain, ("br", sbf_here, tuple(s for _p, s in pairs))

        roots = []
        for r, (qi, tree) in enumerate(forest):
            got = build(tree, (r,))
            if got is not None:
                roots.append((qi, got[0], got[1]))
        if len(set(new_leaves)) != len(new_leaves):
            raise MachineError(
                "determinization found two runs reaching one state "
                "(machine is ambiguous)")
        roots.sort(key=lambda t: t[0])
        new_forest = tuple((qi, plain) for qi, plain, _dec in roots)
        new_slots = slot_assignment(new_forest)
        if len(new_slots) > max_slots:
            raise MachineError("alive forest exceeded %d slots" % max_slots)
        sub = {}

        def emit(plain, dec, path):
            slot = new_slots[path]
            sbf = dec[1]
            for x in regs:
                b, f = _slot_regs(slot, x)
                sub[b] = tuple(sbf.beg[x])
                sub[f] = tuple(sbf.fol[x])
            if plain[0] == "br":
                for i, (pc, sc) in enumerate(zip(plain[2], dec[2])):
                    emit(pc, sc, path + (i,))

        for r, (_qi, plain, dec) in enumerate(roots):
            emit(plain, dec, (r,))
        full = dict(empty_sub)
        full.update(sub)
        return new_forest, full

    def output_of(forest):
        final_leaves = []

        def walk(tree, path):
            if tree[0] == "leaf":
                if tree[1] in m.output:
                    final_leaves.append((tree[1], path))
            else:
                for i, c in enumerate(_tree_children(tree)):
                    walk(c, path + (i,))

        for r, (_qi, tree) in enumerate(forest):
            walk(tree, (r,))
        if not final_leaves:
            return None
        if len(final_leaves) > 1:
            raise MachineError("two final leaves: machine is ambiguous")
        leaf_state, path = final_leaves[0]
        slots = slot_assignment(forest)
        root_idx = path[0]
        q_init, tree = forest[root_idx]
        chain = []
        node = tree
        chain.append((slots[(root_idx,)], _tree_ske(node)))
        p = (root_idx,)
        for i in path[1:]:
            node = _tree_children(node)[i]
            p = p + (i,)
            chain.append((slots[p], _tree_ske(node)))

        init_val = m.initial[q_init]

        def val_expr(level, x):
            if level < 0:
                return tuple(Lit(b) for b in init_val[x])
            slot, ske_items = chain[level]
            ske = dict(ske_items)
            b, f = {}, {}
            for y in regs:
                br, fr = _slot_regs(slot, y)
                b[y], f[y] = br, fr
            out = [Reg(b[x])]
            for y in ske[x]:
                out.extend(val_expr(level - 1, y))
                out.append(Reg(f[y]))
            return tuple(out)

        toks: list = []
        for t in m.output[leaf_state]:
            if isinstance(t, Reg):
                toks.extend(val_expr(len(chain) - 1, t.name))
            else:
                toks.append(t)
        return tuple(toks)

    if not m.states:
        q = "d0"
        return SST(
            input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
            states=(q,), registers=(), initial=q, init_valuation={},
            delta={(q, a): q for a in m.input_alphabet},
            update={(q, a): {} for a in m.input_alphabet},
            output={}, funs=m.funs,
        )

    names = {init_forest: "d0"}
    order = [init_forest]
    frontier = [init_forest]
    delta = {}
    update = {}
    output = {}
    while frontier:
        if len(names) > max_states:
            raise MachineError("determinization exceeded %d states" % max_states)
        forest = frontier.pop(0)
        for a in sorted(m.input_alphabet):
            new_forest, sub = extend(forest, a)
            if new_forest not in names:
                names[new_forest] = "d%d" % len(names)
                order.append(new_forest)
                frontier.append(new_forest)
            delta[(names[forest], a)] = names[new_forest]
            update[(names[forest], a)] = sub
    for forest in order:
        toks = output_of(forest)
        if toks is not None:
            output[names[forest]] = toks
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=tuple(names[f] for f in order), registers=registers,
        initial="d0", init_valuation={r: () for r in registers},
        delta=delta, update=update, output=output, funs=m.funs,
    )


# ---------------------------------------------------------------------------
# Splicing layers back together
# ---------------------------------------------------------------------------


def product_ssts(components: dict) -> tuple:
    """Parallel product of total machines computing all of them at once.

    ``components`` maps names to (machine, layers).  Returns the product,
    its aligned layer partition, and per-component output expressions
    indexed by product state (registers renamed into the product).
    """
    names = sorted(components)
    machines = {n: components[n][0] for n in names}
    layer_lists = {n: components[n][1] for n in names}
    alphabet = machines[names[0]].input_alphabet

    def rereg(n, x):
        return "%s/%s" % (n, x)

    registers = tuple(rereg(n, x) for n in names for x in machines[n].registers)
    depth = max(len(layer_lists[n]) for n in names)
    layers = tuple(
        tuple(rereg(n, x)
              for n in names
              for x in (layer_lists[n][i] if i < len(layer_lists[n]) else ()))
        for i in range(depth)
    )
    init_tuple = tuple(machines[n].initial for n in names)
    state_name = "&".join

    def rename_tokens(n, rhs):
        return tuple(Reg(rereg(n, t.name)) if isinstance(t, Reg) else t for t in rhs)

    seen = {init_tuple: state_name(init_tuple)}
    order = [init_tuple]
    frontier = [init_tuple]
    delta, update = {}, {}
    while frontier:
        combo = frontier.pop(0)
        for a in sorted(alphabet):
            nxt = []
            ok = True
            for n, q in zip(names, combo):
                if (q, a) not in machines[n].delta:
                    ok = False
                    break
                nxt.append(machines[n].delta[(q, a)])
            if not ok:
                continue
            nxt = tuple(nxt)
            if nxt not in seen:
                seen[nxt] = state_name(nxt)
                order.append(nxt)
                frontier.append(nxt)
            sub = {}
            for n, q in zip(names, combo):
                for x, rhs in machines[n].update[(q, a)].items():
                    sub[rereg(n, x)] = rename_tokens(n, rhs)
            delta[(seen[combo], a)] = seen[nxt]
            update[(seen[combo], a)] = sub
    init_val = {}
    for n in names:
        for x in machines[n].registers:
            init_val[rereg(n, x)] = tuple(machines[n].init_valuation[x])
    expr = {n: {} for n in names}
    for combo in order:
        for n, q in zip(names, combo):
            out = machines[n].output.get(q)
            if out is None:
                raise MachineError("component %r is not total at %r" % (n, q))
            expr[n][seen[combo]] = rename_tokens(n, out)
    product = SST(
        input_alphabet=alphabet,
        output_alphabet=machines[names[0]].output_alphabet,
        states=tuple(seen[c] for c in order), registers=registers,
        initial=state_name(init_tuple), init_valuation=init_val,
        delta=delta, update=update,
        output={seen[c]: () for c in order},
    )
    return product, layers, expr


def splice_layers(top: SST, lower: SST, lower_layers: tuple,
                  fun_expr: dict) -> tuple:
    """Inline external function calls as lower-layer register expressions.

    ``fun_expr`` maps every function name of ``top`` to per-lower-state token
    expressions whose pre-step value equals the call's result at that step.
    Returns the product machine and its layer partition (lower layers
    followed by the top registers).
    """
    if not top.funs:
        return top, lower_layers + (top.registers,) if lower_layers else (top.registers,)
    for f in top.funs:
        if f not in fun_expr:
            raise MachineError("unbound function name %r" % f)

    def t_reg(x):
        return "T/%s" % x

    registers = lower.registers + tuple(t_reg(x) for x in top.registers)
    layers = lower_layers + (tuple(t_reg(x) for x in top.registers),)
    init_val = {x: tuple(lower.init_valuation[x]) for x in lower.registers}
    for x in top.registers:
        init_val[t_reg(x)] = tuple(top.init_valuation[x])

    def pair_name(qt, ql):
        return "%s&&%s" % (qt, ql)

    init = (top.initial, lower.initial)
    seen = {init: pair_name(*init)}
    order = [init]
    frontier = [init]
    delta, update, output = {}, {}, {}
    while frontier:
        qt, ql = frontier.pop(0)
        for a in sorted(top.input_alphabet):
            if (qt, a) not in top.delta or (ql, a) not in lower.delta:
                continue
            nxt = (top.delta[(qt, a)], lower.delta[(ql, a)])
            if nxt not in seen:
                seen[nxt] = pair_name(*nxt)
                order.append(nxt)
                frontier.append(nxt)
            sub = {}
            for x, rhs in lower.update[(ql, a)].items():
                sub[x] = rhs
            for y, rhs in top.update[(qt, a)].items():
                toks: list = []
                for t in rhs:
                    if isinstance(t, Fun):
                        toks.extend(fun_expr[t.name][ql])
                    elif isinstance(t, Reg):
                        toks.append(Reg(t_reg(t.name)))
                    else:
                        toks.append(t)
                sub[t_reg(y)] = tuple(toks)
            delta[(seen[(qt, ql)], a)] = seen[nxt]
            update[(seen[(qt, ql)], a)] = sub
    for (qt, ql) in order:
        if qt in top.output:
            output[seen[(qt, ql)]] = tuple(
                Reg(t_reg(t.name)) if isinstance(t, Reg) else t
                for t in top.output[qt]
            )
    machine = SST(
        input_alphabet=top.input_alphabet, output_alphabet=top.output_alphabet,
        states=tuple(seen[c] for c in order), registers=registers,
        initial=pair_name(*init), init_valuation=init_val,
        delta=delta, update=update, output=output,
    )
    return machine, layers


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayeredResult:
    kind: str                      # "exponential" | "layered"
    report: GrowthReport
    k: Optional[int] = None
    machine: Optional[SST] = None
    layers: Optional[tuple] = None


def reimpose_domain(m: SST, dfa: DFA) -> SST:
    """Restrict a total machine's domain to the automaton's language."""
    if set(dfa.accepting) == set(dfa.states):
        return m

    def name(q, d):
        return "%s##%s" % (q, d)

    init = (m.initial, dfa.initial)
    seen = {init: name(*init)}
    order = [init]
    frontier = [init]
    delta, update, output = {}, {}, {}
    while frontier:
        q, d = frontier.pop(0)
        for a in sorted(m.input_alphabet):
            if (q, a) not in m.delta or (d, a) not in dfa.delta:
                continue
            nxt = (m.delta[(q, a)], dfa.delta[(d, a)])
            if nxt not in seen:
                seen[nxt] = name(*nxt)
                order.append(nxt)
                frontier.append(nxt)
            delta[(seen[(q, d)], a)] = seen[nxt]
            update[(seen[(q, d)], a)] = m.update[(q, a)]
    for (q, d) in order:
        if d in dfa.accepting and q in m.output:
            output[seen[(q, d)]] = m.output[q]
    return SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=tuple(seen[c] for c in order), registers=m.registers,
        initial=name(*init), init_valuation=dict(m.init_valuation),
        delta=delta, update=update, output=output, funs=m.funs,
    )


def _bounded_to_layered(m: SST, layers: tuple, dump=None, depth: int = 0) -> tuple:
    """Per-word-bounded layers to copyless layers, bottom-up.

    The spliced-in components compute the *current* lower-register values:
    a register reference inside a plain update is read before the step,
    which cancels the one-letter shift the external-function tokens carry.
    """
    top, registry, binding = extract_sstf(m, layers)
    top_bound = find_copy_bound(top, (top.registers,)) if top.registers else 1
    nsst = bounded_sstf_to_unambiguous(top, top_bound)
    det = determinize_nsstf(nsst)
    _dump(dump, "det-layer%d" % depth, det)
    if len(layers) == 1:
        return det, (det.registers,)
    lower = tuple(x for layer in layers[:-1] for x in layer)
    components = {}
    for fname in sorted(binding):
        sub = to_k_layered(value_sst(m, binding[fname], lower))
        if sub.kind != "layered":
            raise MachineError("lower-layer value machine classified exponential")
        components[fname] = (sub.machine, sub.layers)
    product, p_layers, expr = product_ssts(components)
    return splice_layers(det, product, p_layers, expr)


def _dump(dump, stage: str, machine) -> None:
    if dump is None:
        return
    from .machine_io import emit_machine
    import os

    emit_machine(machine, os.path.join(dump, "%s.json" % stage))


def to_k_layered(m: SST, dump=None) -> LayeredResult:
    """Rewrite any register transducer into a minimal-layer layered one.

    Returns an exponential growth report when no bounded-layer form exists;
    otherwise a machine with growth-degree-minus-one layers, its partition,
    and the growth report.  The original domain is re-imposed at the end.
    """
    if m.funs:
        raise MachineError("layer minimization expects a plain machine")
    total, dfa = make_total(m)
    _dump(dump, "total", total)
    simple = prune_dead_registers(to_simple(total))
    _dump(dump, "simple", simple)
    report = classify(flow_automaton(simple))
    if report.kind == "exponential":
        return LayeredResult("exponential", report)
    degree = report.degree
    partition = report.partition if report.partition else ((),)
    bounded, bound = remove_bounded_layer(simple, partition)
    _dump(dump, "bounded", bounded)
    if degree == 0:
        machine = reimpose_domain(bounded, dfa)
        return LayeredResult("layered", report, k=0, machine=machine,
                             layers=((),))
    machine, layers = _bounded_to_layered(bounded, partition[1:], dump=dump)
    machine, layers = prune_sst_registers(machine, layers)
    machine = reimpose_domain(machine, dfa)
    _dump(dump, "layered", machine)
    bad = check_layered(machine, layers)
    if bad:
        raise MachineError("internal error: result not layered: %s" % bad[0])
    return LayeredResult("layered", report, k=len(layers) - 1,
                         machine=machine, layers=layers)


@dataclass(frozen=True)
class MarbleResult:
    kind: str                      # "exponential" | "marble"
    report: GrowthReport
    k_min: Optional[int] = None
    machine: Optional[object] = None


def minimize_marbles(t, dump=None) -> MarbleResult:
    """Rebuild a marble transducer with the least possible mark count."""
    from .mt2sst import marble_to_sst, two_way_to_marble
    from .sst2mt import layered_to_marble
    from .machines import TwoWayTransducer

    if isinstance(t, TwoWayTransducer):
        t = two_way_to_marble(t)
    sst = marble_to_sst(t)
    _dump(dump, "crossing-sst", sst)
    res = to_k_layered(sst, dump=dump)
    if res.kind == "exponential":
        return MarbleResult("exponential", res.report)
    machine = layered_to_marble(res.machine, res.layers, strategy="exact")
    _dump(dump, "marble", machine)
    return MarbleResult("marble", res.report, k_min=res.k, machine=machine)
