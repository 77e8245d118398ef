"""Marble transducer to register transducer via crossing-sequence summaries.

For each input prefix the one-way machine tracks, per entry state, where the
marble machine first crosses back to the right of the prefix, together with
the output produced along that excursion.  The summaries are stitched letter
by letter through a least fixpoint over a flat order (bottom = "never crosses").
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .machines import (
    LEFT_END,
    Lit,
    MachineError,
    MarbleTransducer,
    Reg,
    RIGHT_END,
    SST,
    validate,
)

# Derivation token kinds: ("const", word) emits a hardcoded word,
# ("call", q) splices the stored excursion output register of entry state q.
CONST = "const"
CALL = "call"


@dataclass(frozen=True)
class Derivation:
    """Stitched one-letter summaries.

    ``entries`` maps (entry state, color-or-None) to (result state or None,
    token tuple); a None result means the excursion never crosses and then
    carries no tokens.
    """

    entries: dict

    def result(self, q: str, color: Optional[str]):
        return self.entries[(q, color)][0]

    def tokens(self, q: str, color: Optional[str]):
        return self.entries[(q, color)][1]


def _local_equation(t: MarbleTransducer, f: dict, symbol: str,
                    node: tuple, accepting_exit: bool):
    """One unfolding step of the stitching equations at ``symbol``.

    Returns ("done", state, tokens), ("bot",) or ("cont", tokens, next node).
    ``f`` is the previous crossing summary (entry state -> state or None).
    With ``accepting_exit`` the move-right case is replaced by halting
    acceptance on final states with no marble present (the right endmarker).
    """
    q, c = node
    if accepting_exit and c is None and q in t.finals:
        return ("done", q, ())
    key = (q, symbol, c)
    if key not in t.delta:
        return ("bot",)
    q2, (akind, acolor) = t.delta[key]
    out = ((CONST, t.out[key]),) if t.out[key] else ()
    if c is None:
        if akind == "right":
            if accepting_exit:
                return ("bot",)  # cannot move beyond the right endmarker
            return ("done", q2, out)
        if akind == "left":
            cont = f[q2]
            if cont is None:
                return ("bot",)
            return ("cont", out + ((CALL, q2),), (cont, None))
        if akind == "drop":
            return ("cont", out, (q2, acolor))
        raise MachineError("invalid machine: %r on empty position" % akind)
    else:
        if akind == "lift":
            return ("cont", out, (q2, None))
        if akind == "left":
            cont = f[q2]
            if cont is None:
                return ("bot",)
            return ("cont", out + ((CALL, q2),), (cont, c))
        raise MachineError("invalid machine: %r on a marble" % akind)


def _solve(t: MarbleTransducer, f: dict, symbol: str,
           accepting_exit: bool) -> Derivation:
    """Least fixpoint of the stitching equations by memoized chain-following.

    Every node has at most one successor, so each chain either terminates
    (crossing found), dies (undefined transition or bottom continuation), or
    cycles; cycles resolve to bottom for every node on them.
    """
    memo: dict = {}
    IN_PROGRESS = ("__in_progress__",)

    def resolve(node):
        cached = memo.get(node)
        if cached is IN_PROGRESS:
            return (None, ())  # cycle: least fixpoint stays at bottom
        if cached is not None:
            return cached
        memo[node] = IN_PROGRESS
        step = _local_equation(t, f, symbol, node, accepting_exit)
        if step[0] == "done":
            res = (step[1], step[2])
        elif step[0] == "bot":
            res = (None, ())
        else:
            _, toks, nxt = step
            sub_res, sub_toks = resolve(nxt)
            res = (None, ()) if sub_res is None else (sub_res, toks + sub_toks)
        memo[node] = res
        return res

    entries = {}
    for q in t.states:
        for c in (None,) + tuple(t.colors):
            entries[(q, c)] = resolve((q, c))
    return Derivation(entries)


def crossing_fixpoint(t: MarbleTransducer, f: dict, symbol: str) -> Derivation:
    """Crossing summary after one more letter, given the previous summary."""
    return _solve(t, f, symbol, accepting_exit=False)


def exit_fixpoint(t: MarbleTransducer, f: dict) -> Derivation:
    """Acceptance stitching at the right endmarker.

    The move-right exit is replaced by halting acceptance: an entry with no
    marble present succeeds exactly when it reaches a final state standing on
    the endmarker with an empty stack.
    """
    return _solve(t, f, RIGHT_END, accepting_exit=True)


def boundary_summary(t: MarbleTransducer, q: str):
    """Run from (q, position 0, empty stack) to the first visit of position 1.

    Only the left endmarker is visible; at most one marble can sit on it, so
    configurations are (state, color-or-None) and loops are detected exactly.
    Returns (state, output word) or (None, ()) when position 1 is never
    reached.
    """
    state, color = q, None
    out: list = []
    seen = {(state, color)}
    while True:
        key = (state, LEFT_END, color)
        if key not in t.delta:
            return None, ()
        q2, (akind, acolor) = t.delta[key]
        out.extend(t.out[key])
        if akind == "right":
            return q2, tuple(out)
        if akind == "left":
            return None, ()  # blocked against the tape start
        if akind == "drop":
            state, color = q2, acolor
        elif akind == "lift":
            state, color = q2, None
        if (state, color) in seen:
            return None, ()
        seen.add((state, color))


FIRST_REG = "first"


def _next_reg(q: str) -> str:
    return "nx_%s" % q


def _transcribe(tokens) -> tuple:
    out = []
    for kind, payload in tokens:
        if kind == CONST:
            out.extend(Lit(b) for b in payload)
        else:
            out.append(Reg(_next_reg(payload)))
    return tuple(out)


def marble_to_sst(t: MarbleTransducer, max_states: int = 50000) -> SST:
    """Equivalent one-way register transducer for a marble transducer.

    States are the reachable crossing summaries (first-crossing state plus
    the per-entry next-crossing map); registers hold the outputs produced
    along those excursions.  Dead excursions keep empty registers.  The
    output map stitches the run at the right endmarker.
    """
    problems = validate(t)
    if problems:
        raise MachineError("invalid marble transducer: %s" % problems[0])

    registers = (FIRST_REG,) + tuple(_next_reg(q) for q in t.states)

    base = {q: boundary_summary(t, q) for q in t.states}
    first0 = base[t.initial][0]
    next0 = tuple((q, base[q][0]) for q in t.states)
    init_state = (first0, next0)
    init_valuation = {FIRST_REG: base[t.initial][1]}
    for q in t.states:
        init_valuation[_next_reg(q)] = base[q][1]

    names = {init_state: "cs0"}
    order = [init_state]
    delta: dict = {}
    update: dict = {}
    output: dict = {}
    frontier = [init_state]
    deriv_cache: dict = {}
    while frontier:
        if len(names) > max_states:
            raise MachineError("crossing-state space exceeded %d states" % max_states)
        state = frontier.pop(0)
        first, next_items = state
        f = dict(next_items)
        for a in sorted(t.input_alphabet):
            key = (next_items, a)
            if key not in deriv_cache:
                deriv_cache[key] = crossing_fixpoint(t, f, a)
            deriv = deriv_cache[key]
            new_next = tuple((q, deriv.result(q, None)) for q in t.states)
            new_first = deriv.result(first, None) if first is not None else None
            target = (new_first, new_next)
            if target not in names:
                names[target] = "cs%d" % len(names)
                order.append(target)
                frontier.append(target)
            sub = {}
            if first is not None and new_first is not None:
                sub[FIRST_REG] = (Reg(FIRST_REG),) + _transcribe(deriv.tokens(first, None))
            else:
                sub[FIRST_REG] = ()
            for q in t.states:
                res = deriv.result(q, None)
                sub[_next_reg(q)] = _transcribe(deriv.tokens(q, None)) if res is not None else ()
            delta[(names[state], a)] = names[target]
            update[(names[state], a)] = sub

    for state in order:
        first, next_items = state
        if first is None:
            continue
        exit_deriv = exit_fixpoint(t, dict(next_items))
        res, toks = exit_deriv.entries[(first, None)]
        if res is not None:
            output[names[state]] = (Reg(FIRST_REG),) + _transcribe(toks)

    return SST(
        input_alphabet=t.input_alphabet, output_alphabet=t.output_alphabet,
        states=tuple(names[s] for s in order), registers=registers,
        initial="cs0", init_valuation=init_valuation,
        delta=delta, update=update, output=output,
    )


def two_way_to_marble(t) -> MarbleTransducer:
    """Embed a two-way transducer as a marble transducer with no colors."""
    from .machines import TwoWayTransducer

    if not isinstance(t, TwoWayTransducer):
        raise MachineError("expected a two-way transducer")
    delta = {}
    out = {}
    for (q, a), (q2, move) in t.delta.items():
        action = ("left", None) if move == "left" else ("right", None)
        delta[(q, a, None)] = (q2, action)
        out[(q, a, None)] = t.out[(q, a)]
    return MarbleTransducer(
        input_alphabet=t.input_alphabet, output_alphabet=t.output_alphabet,
        states=t.states, initial=t.initial, finals=t.finals,
        colors=(), delta=delta, out=out, marble_bound=0,
    )
