"""Interpreters for every machine model, with budgets, traces and run stats."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .machines import (
    Fun,
    FunctionRegistry,
    LEFT_END,
    Lit,
    MachineError,
    MarbleTransducer,
    MOVE_RIGHT,
    NAutomaton,
    NSSTF,
    Reg,
    RIGHT_END,
    SST,
    TwoWayTransducer,
    Word,
    as_word,
)

ACCEPT = "accept"
REJECT = "reject"
BUDGET = "budget"
LOOP = "loop"

BUDGET_CAP = 10 ** 7


@dataclass(frozen=True)
class RunResult:
    verdict: str
    output: Optional[Word]
    steps: int
    max_stack_depth: int
    trace: Optional[tuple] = None

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPT

    @property
    def output_text(self) -> Optional[str]:
        if self.output is None:
            return None
        return "".join(self.output)


def default_budget(n_states: int, word_len: int) -> int:
    # Marble configuration spaces are exponential in the input length, so the
    # budget must dominate two-way bounds while staying desk-safe.
    raw = 10 * (word_len + 2) * max(n_states, 1) * (2 ** min(word_len + 2, 20))
    return min(raw, BUDGET_CAP)


def _symbol_at(w: Word, pos: int) -> str:
    if pos == 0:
        return LEFT_END
    if pos == len(w) + 1:
        return RIGHT_END
    return w[pos - 1]


def _check_alphabet(m, w: Word) -> None:
    bad = [a for a in w if a not in m.input_alphabet]
    if bad:
        raise MachineError("input symbol %r not in the machine alphabet" % bad[0])


def _trace_entry(step, state, head, stack, emitted):
    return (step, state, head, stack, tuple(emitted))


def format_trace(result: RunResult) -> str:
    """One line per step: ``step  state  head  stack  emitted`` (tab separated).

    The stack renders top first as ``color@pos,color@pos``.
    """
    if result.trace is None:
        raise MachineError("run was not traced")
    lines = []
    for step, state, head, stack, emitted in result.trace:
        rendered = ",".join("%s@%d" % (c, p) for c, p in stack)
        lines.append("%d\t%s\t%d\t%s\t%s" % (step, state, head, rendered, "".join(emitted)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Two-way transducers
# ---------------------------------------------------------------------------


def run_two_way(t: TwoWayTransducer, w, budget: Optional[int] = None,
                trace: bool = False) -> RunResult:
    """Run to the first configuration (q, |w|+1) with q final.

    Two-way configuration spaces are finite, so revisiting a configuration is
    reported as LOOP.  The run halts and accepts as soon as the accepting
    configuration is reached.
    """
    w = as_word(w)
    _check_alphabet(t, w)
    if budget is None:
        budget = default_budget(len(t.states), len(w))
    state, pos = t.initial, 0
    steps = 0
    emitted: list = []
    seen = {(state, pos)}
    tr = [_trace_entry(0, state, pos, (), ())] if trace else None
    while True:
        if pos == len(w) + 1 and state in t.finals:
            return RunResult(ACCEPT, tuple(emitted), steps, 0,
                             tuple(tr) if trace else None)
        if steps >= budget:
            return RunResult(BUDGET, None, steps, 0, tuple(tr) if trace else None)
        key = (state, _symbol_at(w, pos))
        if key not in t.delta:
            return RunResult(REJECT, None, steps, 0, tuple(tr) if trace else None)
        state2, move = t.delta[key]
        pos2 = pos + 1 if move == MOVE_RIGHT else pos - 1
        if pos2 < 0 or pos2 > len(w) + 1:
            return RunResult(REJECT, None, steps, 0, tuple(tr) if trace else None)
        out = t.out[key]
        emitted.extend(out)
        state, pos = state2, pos2
        steps += 1
        if trace:
            tr.append(_trace_entry(steps, state, pos, (), out))
        if (state, pos) in seen:
            return RunResult(LOOP, None, steps, 0, tuple(tr) if trace else None)
        seen.add((state, pos))


# ---------------------------------------------------------------------------
# Marble transducers
# ---------------------------------------------------------------------------


def _check_stack(stack: tuple, head: int) -> None:
    prev = None
    for c, p in stack:
        if p < head:
            raise MachineError("marble %r below the reading head" % c)
        if prev is not None and p <= prev:
            raise MachineError("marble stack positions not strictly increasing")
        prev = p


def marble_step(t: MarbleTransducer, w: Word, cfg: tuple):
    """One transition from configuration (state, head, stack).

    Returns (new configuration, emitted word) or None when no transition is
    enabled.  Raises MachineError for actions a well-formed machine cannot
    take (move right or drop while standing on a marble).
    """
    state, pos, stack = cfg
    color = stack[0][0] if stack and stack[0][1] == pos else None
    key = (state, _symbol_at(w, pos), color)
    if key not in t.delta:
        return None
    state2, (akind, acolor) = t.delta[key]
    out = t.out[key]
    if akind == "left":
        if pos - 1 < 0:
            return None
        return (state2, pos - 1, stack), out
    if akind == "right":
        if color is not None:
            raise MachineError("invalid machine: move right over a marble")
        if pos + 1 > len(w) + 1:
            return None
        return (state2, pos + 1, stack), out
    if akind == "lift":
        if color is None:
            raise MachineError("invalid machine: lift without a marble")
        return (state2, pos, stack[1:]), out
    if akind == "drop":
        if color is not None:
            raise MachineError("invalid machine: drop on a marbled position")
        return (state2, pos, ((acolor, pos),) + stack), out
    raise MachineError("invalid action %r" % ((akind, acolor),))


def run_marble(t: MarbleTransducer, w, budget: Optional[int] = None,
               trace: bool = False, detect_loops: bool = False) -> RunResult:
    """Simulate the stack-disciplined transition relation.

    Accepts on the first configuration (q, |w|+1, empty stack) with q final.
    Loop detection hashes every visited configuration and is opt-in, since
    marble configuration counts are exponential; the default guard is the
    step budget alone.
    """
    w = as_word(w)
    _check_alphabet(t, w)
    if budget is None:
        budget = default_budget(len(t.states), len(w))
    cfg = (t.initial, 0, ())
    steps = 0
    depth = 0
    emitted: list = []
    seen = {cfg} if detect_loops else None
    tr = [_trace_entry(0, cfg[0], cfg[1], (), ())] if trace else None
    while True:
        state, pos, stack = cfg
        _check_stack(stack, pos)
        if pos == len(w) + 1 and not stack and state in t.finals:
            return RunResult(ACCEPT, tuple(emitted), steps, depth,
                             tuple(tr) if trace else None)
        if steps >= budget:
            return RunResult(BUDGET, None, steps, depth, tuple(tr) if trace else None)
        res = marble_step(t, w, cfg)
        if res is None:
            return RunResult(REJECT, None, steps, depth, tuple(tr) if trace else None)
        cfg, out = res
        emitted.extend(out)
        steps += 1
        depth = max(depth, len(cfg[2]))
        if trace:
            tr.append(_trace_entry(steps, cfg[0], cfg[1], cfg[2], out))
        if seen is not None:
            if cfg in seen:
                return RunResult(LOOP, None, steps, depth, tuple(tr) if trace else None)
            seen.add(cfg)


# ---------------------------------------------------------------------------
# Register transducers
# ---------------------------------------------------------------------------


def eval_fun(registry: Optional[FunctionRegistry], name: str, prefix: Word) -> Word:
    if registry is None:
        raise MachineError("function %r used without a registry" % name)
    entry = registry.get(name)
    if callable(entry) and not isinstance(entry, (SST, TwoWayTransducer, MarbleTransducer)):
        return as_word(entry(prefix))
    res = run_machine(entry, prefix, registry=None)
    if not res.accepted:
        raise MachineError(
            "registry function %r rejects prefix %r (oracle not total)"
            % (name, "".join(prefix))
        )
    return res.output


def _apply_update(m: SST, val: dict, q: str, a: str, prefix: Word,
                  registry: Optional[FunctionRegistry]) -> dict:
    s = m.update[(q, a)]
    fun_cache: dict = {}
    new = {}
    for x in m.registers:
        parts: list = []
        for tok in s[x]:
            if isinstance(tok, Lit):
                parts.append(tok.sym)
            elif isinstance(tok, Reg):
                parts.extend(val[tok.name])
            else:
                if tok.name not in fun_cache:
                    fun_cache[tok.name] = eval_fun(registry, tok.name, prefix)
                parts.extend(fun_cache[tok.name])
        new[x] = tuple(parts)
    return new


def register_values(m: SST, prefix, registry: Optional[FunctionRegistry] = None) -> dict:
    """Register valuation after running the one-way automaton on ``prefix``.

    Raises if the run is undefined (the valuation only exists along runs).
    """
    prefix = as_word(prefix)
    _check_alphabet(m, prefix)
    val = {x: tuple(m.init_valuation[x]) for x in m.registers}
    q = m.initial
    for i, a in enumerate(prefix):
        if (q, a) not in m.delta:
            raise MachineError("one-way run undefined at letter %d" % (i + 1))
        val = _apply_update(m, val, q, a, prefix[: i + 1], registry)
        q = m.delta[(q, a)]
    return val


def run_sst(m: SST, w, registry: Optional[FunctionRegistry] = None,
            trace: bool = False) -> RunResult:
    """One-way run; accepts iff defined everywhere and final state has output."""
    w = as_word(w)
    _check_alphabet(m, w)
    if m.funs and registry is None:
        raise MachineError("machine uses external functions; a registry is required")
    val = {x: tuple(m.init_valuation[x]) for x in m.registers}
    q = m.initial
    tr = [_trace_entry(0, q, 0, (), ())] if trace else None
    for i, a in enumerate(w):
        if (q, a) not in m.delta:
            return RunResult(REJECT, None, i, 0, tuple(tr) if trace else None)
        val = _apply_update(m, val, q, a, w[: i + 1], registry)
        q = m.delta[(q, a)]
        if trace:
            tr.append(_trace_entry(i + 1, q, i + 1, (), ()))
    if q not in m.output:
        return RunResult(REJECT, None, len(w), 0, tuple(tr) if trace else None)
    parts: list = []
    for tok in m.output[q]:
        if isinstance(tok, Lit):
            parts.append(tok.sym)
        elif isinstance(tok, Reg):
            parts.extend(val[tok.name])
        else:
            raise MachineError("function token in output map")
    return RunResult(ACCEPT, tuple(parts), len(w), 0, tuple(tr) if trace else None)


def run_sstf(m: SST, w, registry: FunctionRegistry, trace: bool = False) -> RunResult:
    """Run an SST with external functions against a registry."""
    for f in m.funs:
        if f not in registry:
            raise MachineError("unresolved function name %r" % f)
    return run_sst(m, w, registry=registry, trace=trace)


def enumerate_nsstf_runs(m: NSSTF, w, registry: Optional[FunctionRegistry] = None,
                         max_branches: int = 100000) -> list:
    """All accepting runs with their outputs, by exhaustive branching.

    Returns a list of (state sequence, output word) pairs, ordered by the
    lexicographic state sequence.  Intended for short words; raises once the
    number of explored partial runs exceeds ``max_branches``.
    """
    w = as_word(w)
    _check_alphabet(m, w)
    succ: dict = {}
    for (q, a, q2) in m.transitions:
        succ.setdefault((q, a), []).append(q2)
    for key in succ:
        succ[key].sort()
    results = []
    explored = 0

    def go(q, i, states, val):
        nonlocal explored
        explored += 1
        if explored > max_branches:
            raise MachineError("branching limit exceeded (%d)" % max_branches)
        if i == len(w):
            if q in m.output:
                parts: list = []
                for tok in m.output[q]:
                    if isinstance(tok, Lit):
                        parts.append(tok.sym)
                    else:
                        parts.extend(val[tok.name])
                results.append((tuple(states), tuple(parts)))
            return
        a = w[i]
        for q2 in succ.get((q, a), ()):
            s = m.update[(q, a, q2)]
            fun_cache: dict = {}
            new = {}
            for x in m.registers:
                parts = []
                for tok in s[x]:
                    if isinstance(tok, Lit):
                        parts.append(tok.sym)
                    elif isinstance(tok, Reg):
                        parts.extend(val[tok.name])
                    else:
                        if tok.name not in fun_cache:
                            fun_cache[tok.name] = eval_fun(registry, tok.name, w[: i + 1])
                        parts.extend(fun_cache[tok.name])
                new[x] = tuple(parts)
            go(q2, i + 1, states + [q2], new)

    for q0 in sorted(m.initial):
        val0 = {x: tuple(m.initial[q0][x]) for x in m.registers}
        go(q0, 0, [q0], val0)
    results.sort(key=lambda rv: rv[0])
    return results


# ---------------------------------------------------------------------------
# N-automata
# ---------------------------------------------------------------------------


def eval_nautomaton_vector(m: NAutomaton, w) -> dict:
    """Row vector alpha . mats(w), with exact integer arithmetic."""
    w = as_word(w)
    _check_alphabet(m, w)
    vec = {q: m.alpha.get(q, 0) for q in m.states}
    for a in w:
        if a not in m.mats:
            raise MachineError("letter %r has no weight matrix" % a)
        mat = m.mats[a]
        new = {q: 0 for q in m.states}
        for (p, q), weight in mat.items():
            vp = vec[p]
            if vp:
                new[q] += vp * weight
        vec = new
    return vec


def eval_nautomaton(m: NAutomaton, w) -> int:
    vec = eval_nautomaton_vector(m, w)
    return sum(vec[q] * m.beta.get(q, 0) for q in m.states)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def run_machine(m, w, registry: Optional[FunctionRegistry] = None,
                budget: Optional[int] = None, trace: bool = False) -> RunResult:
    """Run any word-to-word machine description on a word."""
    if isinstance(m, TwoWayTransducer):
        return run_two_way(m, w, budget=budget, trace=trace)
    if isinstance(m, MarbleTransducer):
        return run_marble(m, w, budget=budget, trace=trace)
    if isinstance(m, SST):
        return run_sst(m, w, registry=registry, trace=trace)
    if isinstance(m, NSSTF):
        runs = enumerate_nsstf_runs(m, w, registry=registry)
        if not runs:
            return RunResult(REJECT, None, len(as_word(w)), 0, None)
        if len({out for _, out in runs}) > 1:
            raise MachineError("ambiguous machine: several outputs for one word")
        return RunResult(ACCEPT, runs[0][1], len(as_word(w)), 0, None)
    raise MachineError("cannot run machine of type %s" % type(m).__name__)
