"""Machine models: alphabets, substitutions, transducers and structural checks.

All machines are plain frozen dataclasses over interned string identifiers
(states, registers, marble colors, function names).  Maps are ordinary dicts;
construction code keeps insertion order deterministic so that serialized
machines are byte-stable.  Machine values are treated as immutable after
construction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

LEFT_END = "⊢"   # left endmarker, position 0
RIGHT_END = "⊣"  # right endmarker, position |w|+1

MOVE_LEFT = "left"
MOVE_RIGHT = "right"

# Marble head actions: (kind, color-or-None).
ACT_LEFT = ("left", None)
ACT_RIGHT = ("right", None)
ACT_LIFT = ("lift", None)


def act_drop(color: str) -> tuple:
    return ("drop", color)


class MachineError(Exception):
    """Raised on malformed machines or violated preconditions."""


# ---------------------------------------------------------------------------
# Words and tokens
# ---------------------------------------------------------------------------

Word = tuple  # tuple[str, ...]


def as_word(w) -> Word:
    """Coerce a str (one symbol per character) or iterable of symbols."""
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


def word_text(w: Word) -> str:
    return "".join(w)


@dataclass(frozen=True)
class Lit:
    """An output letter inside a substitution or output expression."""

    sym: str


@dataclass(frozen=True)
class Reg:
    """A register reference."""

    name: str


@dataclass(frozen=True)
class Fun:
    """An external function name reference (evaluated on the input prefix)."""

    name: str


Token = Union[Lit, Reg, Fun]

# A substitution maps each register to a sequence of tokens.
Substitution = dict  # dict[str, tuple[Token, ...]]


def lits(w) -> tuple:
    """Word -> tuple of Lit tokens."""
    return tuple(Lit(s) for s in as_word(w))


def identity_substitution(registers: Iterable[str]) -> Substitution:
    return {x: (Reg(x),) for x in registers}


def compose_substitutions(s1: Substitution, s2: Substitution) -> Substitution:
    """Apply s1 homomorphically to every right-hand side of s2.

    The result r satisfies r(x) = s1(s2(x)); letters and function tokens are
    fixed points.  Both substitutions must be over the same register set.
    """
    if set(s1) != set(s2):
        raise MachineError(
            "register mismatch: %s vs %s" % (sorted(s1), sorted(s2))
        )
    return {x: subst_apply(s1, rhs) for x, rhs in s2.items()}


def subst_apply(s: Substitution, tokens: Sequence[Token]) -> tuple:
    """Homomorphic extension of s to a token sequence."""
    out = []
    for tok in tokens:
        if isinstance(tok, Reg):
            try:
                out.extend(s[tok.name])
            except KeyError:
                raise MachineError("unknown register %r" % tok.name) from None
        else:
            out.append(tok)
    return tuple(out)


def register_occurrences(s: Substitution) -> Counter:
    """Count how often each register occurs across all right-hand sides."""
    counts: Counter = Counter()
    for rhs in s.values():
        for tok in rhs:
            if isinstance(tok, Reg):
                counts[tok.name] += 1
    return counts


# ---------------------------------------------------------------------------
# Machine descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoWayTransducer:
    """Deterministic two-way transducer over an endmarked tape.

    ``delta`` maps (state, symbol) to (state, move) where symbol ranges over
    the input alphabet plus the endmarkers, and move is MOVE_LEFT/MOVE_RIGHT.
    ``out`` has the same domain and gives the word emitted by the transition.
    """

    input_alphabet: tuple
    output_alphabet: tuple
    states: tuple
    initial: str
    finals: frozenset
    delta: dict  # (state, symbol) -> (state, move)
    out: dict    # (state, symbol) -> Word


@dataclass(frozen=True)
class MarbleTransducer:
    """Two-way transducer that may drop colored marks under a stack discipline.

    ``delta`` maps (state, symbol, color-or-None) to (state, action); the
    color component is the mark sitting at the head position, None if there is
    none.  When a color is present the action must be ACT_LEFT or ACT_LIFT.
    """

    input_alphabet: tuple
    output_alphabet: tuple
    states: tuple
    initial: str
    finals: frozenset
    colors: tuple
    delta: dict  # (state, symbol, color|None) -> (state, action)
    out: dict    # same keys -> Word
    marble_bound: Optional[int] = None


@dataclass(frozen=True)
class SST:
    """Streaming string transducer, optionally with external function calls.

    With ``funs`` empty this is a plain register transducer; a nonempty
    ``funs`` tuple allows Fun tokens in update right-hand sides (but never in
    the output map).  ``update`` has the same domain as ``delta``.
    """

    input_alphabet: tuple
    output_alphabet: tuple
    states: tuple
    registers: tuple
    initial: str
    init_valuation: dict  # register -> Word
    delta: dict           # (state, letter) -> state
    update: dict          # (state, letter) -> Substitution
    output: dict          # state -> tuple[Token, ...]   (partial)
    funs: tuple = ()

    @property
    def is_sstf(self) -> bool:
        return bool(self.funs)


@dataclass(frozen=True)
class NSSTF:
    """Nondeterministic streaming string transducer with external functions."""

    input_alphabet: tuple
    output_alphabet: tuple
    states: tuple
    registers: tuple
    funs: tuple
    initial: dict      # state -> {register -> Word}   (partial)
    transitions: tuple  # sorted tuple of (state, letter, state)
    update: dict       # (state, letter, state) -> Substitution
    output: dict       # state -> tuple[Token, ...]   (partial)


@dataclass(frozen=True)
class NAutomaton:
    """Automaton weighted over the nonnegative integers.

    ``mats`` maps each letter to a sparse matrix {(p, q): weight}; absent
    entries are zero.  Evaluation of a word w is alpha . mats(w) . beta.
    """

    input_alphabet: tuple
    states: tuple
    alpha: dict  # state -> int
    beta: dict   # state -> int
    mats: dict   # letter -> {(state, state): int}


@dataclass(frozen=True)
class DFA:
    """Total-or-partial deterministic automaton used for domains."""

    alphabet: tuple
    states: tuple
    initial: str
    delta: dict  # (state, letter) -> state
    accepting: frozenset

    def run(self, w) -> Optional[str]:
        q = self.initial
        for a in as_word(w):
            q = self.delta.get((q, a))
            if q is None:
                return None
        return q

    def accepts(self, w) -> bool:
        q = self.run(w)
        return q is not None and q in self.accepting


@dataclass
class FunctionRegistry:
    """Named total functions A* -> B* backing Fun tokens.

    Entries are either machine descriptions (run through the interpreters) or
    plain Python callables taking a word and returning a word; every function
    name used by an SST with externals must resolve here.
    """

    entries: dict = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def get(self, name: str):
        try:
            return self.entries[name]
        except KeyError:
            raise MachineError("unresolved function name %r" % name) from None


MachineDescription = Union[
    TwoWayTransducer, MarbleTransducer, SST, NSSTF, NAutomaton
]


def kind_of(m: MachineDescription) -> str:
    if isinstance(m, TwoWayTransducer):
        return "two-way"
    if isinstance(m, MarbleTransducer):
        return "marble"
    if isinstance(m, SST):
        return "sstf" if m.is_sstf else "sst"
    if isinstance(m, NSSTF):
        return "nsstf"
    if isinstance(m, NAutomaton):
        return "nautomaton"
    raise MachineError("not a machine description: %r" % (m,))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _check_alphabet(name: str, symbols: tuple, report: list) -> None:
    if not symbols:
        report.append("%s is empty" % name)
    if len(set(symbols)) != len(symbols):
        report.append("%s has duplicate symbols" % name)
    for s in (LEFT_END, RIGHT_END):
        if s in symbols:
            report.append("%s contains reserved endmarker %r" % (name, s))


def _check_tokens(where: str, tokens, m: SST, report: list,
                  allow_fun: bool) -> None:
    for tok in tokens:
        if isinstance(tok, Lit):
            if tok.sym not in m.output_alphabet:
                report.append("%s: unknown output letter %r" % (where, tok.sym))
        elif isinstance(tok, Reg):
            if tok.name not in m.registers:
                report.append("%s: unknown register %r" % (where, tok.name))
        elif isinstance(tok, Fun):
            if not allow_fun:
                report.append("%s: function token %r not allowed" % (where, tok.name))
            elif tok.name not in m.funs:
                report.append("%s: unknown function %r" % (where, tok.name))
        else:
            report.append("%s: bad token %r" % (where, tok))


def validate(m: MachineDescription) -> list:
    """Return the list of violated structural invariants (empty iff well formed)."""
    report: list = []
    if isinstance(m, TwoWayTransducer):
        _validate_two_way(m, report)
    elif isinstance(m, MarbleTransducer):
        _validate_marble(m, report)
    elif isinstance(m, SST):
        _validate_sst(m, report)
    elif isinstance(m, NSSTF):
        _validate_nsstf(m, report)
    elif isinstance(m, NAutomaton):
        _validate_nautomaton(m, report)
    else:
        report.append("unknown machine type %r" % type(m).__name__)
    return report


def _validate_two_way(m: TwoWayTransducer, report: list) -> None:
    _check_alphabet("input alphabet", m.input_alphabet, report)
    _check_alphabet("output alphabet", m.output_alphabet, report)
    if m.initial not in m.states:
        report.append("initial state %r not declared" % m.initial)
    for q in m.finals:
        if q not in m.states:
            report.append("final state %r not declared" % q)
    if set(m.delta) != set(m.out):
        report.append("transition and output maps have different domains")
    symbols = set(m.input_alphabet) | {LEFT_END, RIGHT_END}
    for (q, a), (q2, move) in m.delta.items():
        where = "delta[%s,%s]" % (q, a)
        if q not in m.states or q2 not in m.states:
            report.append("%s: undeclared state" % where)
        if a not in symbols:
            report.append("%s: undeclared symbol" % where)
        if move not in (MOVE_LEFT, MOVE_RIGHT):
            report.append("%s: bad move %r" % (where, move))
    for key, w in m.out.items():
        for b in w:
            if b not in m.output_alphabet:
                report.append("out[%s,%s]: unknown output letter %r" % (key[0], key[1], b))


def _validate_marble(m: MarbleTransducer, report: list) -> None:
    _check_alphabet("input alphabet", m.input_alphabet, report)
    _check_alphabet("output alphabet", m.output_alphabet, report)
    if m.initial not in m.states:
        report.append("initial state %r not declared" % m.initial)
    for q in m.finals:
        if q not in m.states:
            report.append("final state %r not declared" % q)
    if set(m.delta) != set(m.out):
        report.append("transition and output maps have different domains")
    symbols = set(m.input_alphabet) | {LEFT_END, RIGHT_END}
    for (q, a, c), (q2, action) in m.delta.items():
        where = "delta[%s,%s,%s]" % (q, a, c)
        if q not in m.states or q2 not in m.states:
            report.append("%s: undeclared state" % where)
        if a not in symbols:
            report.append("%s: undeclared symbol" % where)
        if c is not None and c not in m.colors:
            report.append("%s: undeclared color" % where)
        akind, acolor = action
        if akind not in ("left", "right", "lift", "drop"):
            report.append("%s: bad action %r" % (where, action))
            continue
        if akind == "drop" and acolor not in m.colors:
            report.append("%s: drops undeclared color %r" % (where, acolor))
        if c is not None and akind == "right":
            report.append("%s: move right on marble" % where)
        if c is not None and akind == "drop":
            report.append("%s: drop on marble" % where)
        if c is None and akind == "lift":
            report.append("%s: lift without marble" % where)
    for key, w in m.out.items():
        for b in w:
            if b not in m.output_alphabet:
                report.append("out[%s,%s,%s]: unknown output letter %r" % (key + (b,)))


def _validate_sst(m: SST, report: list) -> None:
    _check_alphabet("input alphabet", m.input_alphabet, report)
    _check_alphabet("output alphabet", m.output_alphabet, report)
    if m.initial not in m.states:
        report.append("initial state %r not declared" % m.initial)
    if set(m.delta) != set(m.update):
        report.append("transition and update maps have different domains")
    if set(m.init_valuation) != set(m.registers):
        report.append("initial valuation does not cover the register set")
    for x, w in m.init_valuation.items():
        for b in w:
            if b not in m.output_alphabet:
                report.append("init[%s]: unknown output letter %r" % (x, b))
    for (q, a), q2 in m.delta.items():
        if q not in m.states or q2 not in m.states:
            report.append("delta[%s,%s]: undeclared state" % (q, a))
        if a not in m.input_alphabet:
            report.append("delta[%s,%s]: undeclared letter" % (q, a))
    for (q, a), s in m.update.items():
        where = "update[%s,%s]" % (q, a)
        if set(s) != set(m.registers):
            report.append("%s: not total on the register set" % where)
        for x, rhs in s.items():
            _check_tokens("%s(%s)" % (where, x), rhs, m, report, allow_fun=True)
    for q, rhs in m.output.items():
        if q not in m.states:
            report.append("output[%s]: undeclared state" % q)
        for tok in rhs:
            if isinstance(tok, Fun):
                report.append("output[%s]: function tokens not allowed in output" % q)
        _check_tokens("output[%s]" % q, [t for t in rhs if not isinstance(t, Fun)],
                      m, report, allow_fun=False)


def _validate_nsstf(m: NSSTF, report: list) -> None:
    _check_alphabet("input alphabet", m.input_alphabet, report)
    _check_alphabet("output alphabet", m.output_alphabet, report)
    if set(m.update) != set(m.transitions):
        report.append("update map domain differs from the transition relation")
    for q, val in m.initial.items():
        if q not in m.states:
            report.append("initial[%s]: undeclared state" % q)
        if set(val) != set(m.registers):
            report.append("initial[%s]: valuation not total" % q)
    shim = SST(
        input_alphabet=m.input_alphabet, output_alphabet=m.output_alphabet,
        states=m.states, registers=m.registers, initial=m.states[0] if m.states else "",
        init_valuation={}, delta={}, update={}, output={}, funs=m.funs,
    )
    for (q, a, q2) in m.transitions:
        if q not in m.states or q2 not in m.states:
            report.append("transition (%s,%s,%s): undeclared state" % (q, a, q2))
        if a not in m.input_alphabet:
            report.append("transition (%s,%s,%s): undeclared letter" % (q, a, q2))
    for key, s in m.update.items():
        where = "update[%s,%s,%s]" % key
        if set(s) != set(m.registers):
            report.append("%s: not total on the register set" % where)
        for x, rhs in s.items():
            _check_tokens("%s(%s)" % (where, x), rhs, shim, report, allow_fun=True)
    for q, rhs in m.output.items():
        for tok in rhs:
            if isinstance(tok, Fun):
                report.append("output[%s]: function tokens not allowed in output" % q)


def _validate_nautomaton(m: NAutomaton, report: list) -> None:
    _check_alphabet("input alphabet", m.input_alphabet, report)
    for a in m.input_alphabet:
        if a not in m.mats:
            report.append("letter %r has no matrix" % a)
    for q in list(m.alpha) + list(m.beta):
        if q not in m.states:
            report.append("vector entry for undeclared state %r" % q)
    for a, mat in m.mats.items():
        for (p, q), v in mat.items():
            if p not in m.states or q not in m.states:
                report.append("matrix %r: undeclared state in entry (%s,%s)" % (a, p, q))
            if v < 0:
                report.append("matrix %r: negative weight at (%s,%s)" % (a, p, q))
    for q, v in list(m.alpha.items()) + list(m.beta.items()):
        if v < 0:
            report.append("negative vector weight at %r" % q)


# ---------------------------------------------------------------------------
# Copy-shape checks
# ---------------------------------------------------------------------------


def _update_items(m) -> list:
    if isinstance(m, SST):
        return sorted(m.update.items(), key=lambda kv: kv[0])
    if isinstance(m, NSSTF):
        return sorted(m.update.items(), key=lambda kv: kv[0])
    raise MachineError("expected an SST or NSSTF, got %s" % type(m).__name__)


def check_copyless(m) -> list:
    """List every (key, register) pair where an update uses a register twice.

    Function tokens are unrestricted; only register duplication counts.
    """
    violations = []
    for key, s in _update_items(m):
        counts = register_occurrences(s)
        for x in sorted(counts):
            if counts[x] > 1:
                violations.append(
                    "update[%s]: register %r used %d times" % (key, x, counts[x])
                )
    return violations


def _layer_index(layers: Sequence[Sequence[str]], registers: tuple) -> dict:
    seen: dict = {}
    for i, layer in enumerate(layers):
        for x in layer:
            if x in seen:
                raise MachineError("layers overlap on register %r" % x)
            seen[x] = i
    if set(seen) != set(registers):
        raise MachineError("layers do not partition the register set")
    return seen


def check_layered(m: SST, layers: Sequence[Sequence[str]]) -> list:
    """Check the layered-update discipline for a register partition.

    A substitution is layered when (i) the update of a layer-i register only
    mentions registers of layers <= i, and (ii) within each layer every
    register is used at most once across that layer's right-hand sides.
    """
    level = _layer_index(layers, m.registers)
    violations = []
    for (q, a), s in sorted(m.update.items()):
        for i, layer in enumerate(layers):
            counts: Counter = Counter()
            for x in layer:
                for tok in s.get(x, ()):
                    if isinstance(tok, Reg):
                        if level[tok.name] > i:
                            violations.append(
                                "update[%s,%s](%s): register %r from layer %d used in layer %d"
                                % (q, a, x, tok.name, level[tok.name], i)
                            )
                        elif level[tok.name] == i:
                            counts[tok.name] += 1
            for y in sorted(counts):
                if counts[y] > 1:
                    violations.append(
                        "update[%s,%s]: register %r used %d times within layer %d"
                        % (q, a, y, counts[y], i)
                    )
    return violations


def check_layer_order(m: SST, layers: Sequence[Sequence[str]]) -> list:
    """Only condition (i) of check_layered: no upward references."""
    level = _layer_index(layers, m.registers)
    violations = []
    for (q, a), s in sorted(m.update.items()):
        for x in sorted(s):
            for tok in s[x]:
                if isinstance(tok, Reg) and level[tok.name] > level[x]:
                    violations.append(
                        "update[%s,%s](%s): upward reference to %r" % (q, a, x, tok.name)
                    )
    return violations


@dataclass(frozen=True)
class BoundedCheck:
    bounded: bool
    witness: Optional[Word]  # word whose composed update exceeds the bound


def check_bounded(m: SST, layers: Sequence[Sequence[str]], bound: int,
                  max_states: int = 200000) -> BoundedCheck:
    """Decide whether every layer is per-word copy-bounded by ``bound``.

    Explores the reachable per-layer occurrence matrices of composed updates,
    saturating entries at bound+1 so the closure is finite.  The check runs
    from every machine state.  On failure the breadth-first witness word is
    returned.
    """
    level = _layer_index(layers, m.registers)
    order_violations = check_layer_order(m, layers)
    if order_violations:
        raise MachineError("layer order violated: %s" % order_violations[0])

    layer_regs = [tuple(sorted(layer)) for layer in layers]
    cap = bound + 1

    def step(mats, q, a):
        s = m.update[(q, a)]
        new = []
        for li, regs in enumerate(layer_regs):
            cur = mats[li]
            # occurrence counts of layer-li registers inside this letter's update
            cols = {}
            for x in regs:
                c: Counter = Counter()
                for tok in s[x]:
                    if isinstance(tok, Reg) and level[tok.name] == li:
                        c[tok.name] += 1
                cols[x] = c
            mat = {}
            for yi, y in enumerate(regs):
                for xi, x in enumerate(regs):
                    total = 0
                    for zi, z in enumerate(regs):
                        total += cur[yi][zi] * cols[x][z]
                        if total > cap:
                            total = cap
                            break
                    mat[(yi, xi)] = min(total, cap)
            new.append(tuple(tuple(mat[(yi, xi)] for xi in range(len(regs)))
                             for yi in range(len(regs))))
        return tuple(new)

    def exceeded(mats):
        for li, regs in enumerate(layer_regs):
            for yi in range(len(regs)):
                if sum(mats[li][yi]) > bound:
                    return True
        return False

    identity = tuple(
        tuple(tuple(1 if i == j else 0 for j in range(len(regs)))
              for i in range(len(regs)))
        for regs in layer_regs
    )
    start = [(q, identity) for q in m.states]
    seen = set(start)
    frontier = [(node, ()) for node in start]
    while frontier:
        if len(seen) > max_states:
            raise MachineError("bounded-copy closure exceeded %d states" % max_states)
        nxt = []
        for (q, mats), word in frontier:
            for a in sorted(m.input_alphabet):
                if (q, a) not in m.delta:
                    continue
                q2 = m.delta[(q, a)]
                mats2 = step(mats, q, a)
                w2 = word + (a,)
                if exceeded(mats2):
                    return BoundedCheck(False, w2)
                node = (q2, mats2)
                if node not in seen:
                    seen.add(node)
                    nxt.append((node, w2))
        frontier = nxt
    return BoundedCheck(True, None)


def find_copy_bound(m: SST, layers: Sequence[Sequence[str]],
                    max_bound: int = 64) -> int:
    """Smallest B such that check_bounded passes, probing upward."""
    for b in range(1, max_bound + 1):
        if check_bounded(m, layers, b).bounded:
            return b
    raise MachineError("no copy bound found up to %d" % max_bound)
