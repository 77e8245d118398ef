"""JSON machine files: parsing, schema checks, byte-stable emission."""

from __future__ import annotations

import json
from typing import Optional

from .machines import (
    Fun,
    Lit,
    MachineError,
    MarbleTransducer,
    NAutomaton,
    NSSTF,
    Reg,
    SST,
    TwoWayTransducer,
    kind_of,
    validate,
)

KINDS = ("two-way", "marble", "sst", "sstf", "nsstf", "nautomaton")


class MachineFileError(MachineError):
    """Malformed machine file; the message names the offending field."""


def _err(path: str, msg: str):
    raise MachineFileError("%s: %s" % (path, msg))


def _need(doc: dict, field: str, kind, path: str):
    if field not in doc:
        _err(path, "missing field %r" % field)
    value = doc[field]
    if kind is not None and not isinstance(value, kind):
        _err("%s.%s" % (path, field), "expected %s" % kind.__name__)
    return value


def _word(value, path: str) -> tuple:
    if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
        _err(path, "expected a list of symbols")
    return tuple(value)


def _tokens(value, path: str) -> tuple:
    if not isinstance(value, list):
        _err(path, "expected a token list")
    out = []
    for i, tok in enumerate(value):
        where = "%s[%d]" % (path, i)
        if not isinstance(tok, dict) or len(tok) != 1:
            _err(where, "expected an object with one of lit/reg/fun")
        (key, payload), = tok.items()
        if not isinstance(payload, str):
            _err(where, "token payload must be a string")
        if key == "lit":
            out.append(Lit(payload))
        elif key == "reg":
            out.append(Reg(payload))
        elif key == "fun":
            out.append(Fun(payload))
        else:
            _err(where, "unknown token kind %r" % key)
    return tuple(out)


def _token_json(tok) -> dict:
    if isinstance(tok, Lit):
        return {"lit": tok.sym}
    if isinstance(tok, Reg):
        return {"reg": tok.name}
    return {"fun": tok.name}


def _substitution(value, path: str) -> dict:
    if not isinstance(value, dict):
        _err(path, "expected an update object")
    return {x: _tokens(rhs, "%s.%s" % (path, x)) for x, rhs in value.items()}


def _action(value, path: str) -> tuple:
    if value in ("left", "right", "lift"):
        return (value, None)
    if isinstance(value, dict) and list(value) == ["drop"] \
            and isinstance(value["drop"], str):
        return ("drop", value["drop"])
    _err(path, "bad action %r" % (value,))


def machine_to_json(m) -> dict:
    kind = kind_of(m)
    doc = {"kind": kind}
    if kind == "nautomaton":
        doc["input_alphabet"] = list(m.input_alphabet)
        doc["states"] = list(m.states)
        doc["alpha"] = {q: v for q, v in sorted(m.alpha.items()) if v}
        doc["beta"] = {q: v for q, v in sorted(m.beta.items()) if v}
        doc["matrices"] = {
            a: [{"from": p, "to": q, "weight": wgt}
                for (p, q), wgt in sorted(mat.items()) if wgt]
            for a, mat in sorted(m.mats.items())
        }
        return doc
    doc["input_alphabet"] = list(m.input_alphabet)
    doc["output_alphabet"] = list(m.output_alphabet)
    doc["states"] = list(m.states)
    if kind == "two-way":
        doc["initial"] = m.initial
        doc["finals"] = sorted(m.finals)
        doc["transitions"] = [
            {"state": q, "symbol": s, "to": q2, "move": move,
             "output": list(m.out[(q, s)])}
            for (q, s), (q2, move) in sorted(m.delta.items())
        ]
    elif kind == "marble":
        doc["initial"] = m.initial
        doc["finals"] = sorted(m.finals)
        doc["colors"] = list(m.colors)
        if m.marble_bound is not None:
            doc["declared_marble_bound"] = m.marble_bound
        doc["transitions"] = [
            {"state": q, "symbol": s, "color": c, "to": q2,
             "action": akind if pay is None else {"drop": pay},
             "output": list(m.out[(q, s, c)])}
            for (q, s, c), (q2, (akind, pay)) in sorted(
                m.delta.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or ""))
        ]
    elif kind in ("sst", "sstf"):
        doc["initial"] = m.initial
        doc["registers"] = list(m.registers)
        doc["initial_valuation"] = {x: list(w) for x, w in sorted(m.init_valuation.items())}
        doc["transitions"] = [
            {"state": q, "symbol": a, "to": m.delta[(q, a)],
             "update": {x: [_token_json(t) for t in rhs]
                        for x, rhs in sorted(m.update[(q, a)].items())}}
            for (q, a) in sorted(m.delta)
        ]
        doc["output"] = {q: [_token_json(t) for t in rhs]
                         for q, rhs in sorted(m.output.items())}
        if kind == "sstf":
            doc["functions"] = list(m.funs)
    elif kind == "nsstf":
        doc["registers"] = list(m.registers)
        doc["functions"] = list(m.funs)
        doc["initial"] = {q: {x: list(w) for x, w in sorted(val.items())}
                          for q, val in sorted(m.initial.items())}
        doc["transitions"] = [
            {"from": q, "symbol": a, "to": q2,
             "update": {x: [_token_json(t) for t in rhs]
                        for x, rhs in sorted(m.update[(q, a, q2)].items())}}
            for (q, a, q2) in sorted(m.transitions)
        ]
        doc["output"] = {q: [_token_json(t) for t in rhs]
                         for q, rhs in sorted(m.output.items())}
    return doc


def machine_from_json(doc, path: str = "$"):
    if not isinstance(doc, dict):
        _err(path, "expected an object")
    kind = _need(doc, "kind", str, path)
    if kind not in KINDS:
        _err("%s.kind" % path, "unknown machine kind %r" % kind)
    input_alphabet = tuple(_word(_need(doc, "input_alphabet", list, path),
                                 "%s.input_alphabet" % path))
    states = tuple(_word(_need(doc, "states", list, path), "%s.states" % path))
    if kind == "nautomaton":
        alpha = {q: v for q, v in _need(doc, "alpha", dict, path).items()}
        beta = {q: v for q, v in _need(doc, "beta", dict, path).items()}
        mats = {}
        raw = _need(doc, "matrices", dict, path)
        for a in input_alphabet:
            entries = raw.get(a, [])
            where = "%s.matrices.%s" % (path, a)
            if not isinstance(entries, list):
                _err(where, "expected a list of entries")
            mat = {}
            for i, ent in enumerate(entries):
                for field in ("from", "to", "weight"):
                    if field not in ent:
                        _err("%s[%d]" % (where, i), "missing %r" % field)
                if not isinstance(ent["weight"], int) or isinstance(ent["weight"], bool):
                    _err("%s[%d].weight" % (where, i), "expected an integer")
                mat[(ent["from"], ent["to"])] = ent["weight"]
            mats[a] = mat
        return NAutomaton(input_alphabet, states, alpha, beta, mats)
    output_alphabet = tuple(_word(_need(doc, "output_alphabet", list, path),
                                  "%s.output_alphabet" % path))
    if kind == "two-way":
        delta, out = {}, {}
        for i, ent in enumerate(_need(doc, "transitions", list, path)):
            where = "%s.transitions[%d]" % (path, i)
            q = _need(ent, "state", str, where)
            s = _need(ent, "symbol", str, where)
            move = _need(ent, "move", str, where)
            if move not in ("left", "right"):
                _err("%s.move" % where, "bad move %r" % move)
            delta[(q, s)] = (_need(ent, "to", str, where), move)
            out[(q, s)] = _word(ent.get("output", []), "%s.output" % where)
        return TwoWayTransducer(
            input_alphabet, output_alphabet, states,
            _need(doc, "initial", str, path),
            frozenset(_need(doc, "finals", list, path)), delta, out)
    if kind == "marble":
        delta, out = {}, {}
        for i, ent in enumerate(_need(doc, "transitions", list, path)):
            where = "%s.transitions[%d]" % (path, i)
            q = _need(ent, "state", str, where)
            s = _need(ent, "symbol", str, where)
            c = ent.get("color")
            if c is not None and not isinstance(c, str):
                _err("%s.color" % where, "expected a string or null")
            action = _action(_need(ent, "action", None, where), "%s.action" % where)
            delta[(q, s, c)] = (_need(ent, "to", str, where), action)
            out[(q, s, c)] = _word(ent.get("output", []), "%s.output" % where)
        return MarbleTransducer(
            input_alphabet, output_alphabet, states,
            _need(doc, "initial", str, path),
            frozenset(_need(doc, "finals", list, path)),
            tuple(_word(_need(doc, "colors", list, path), "%s.colors" % path)),
            delta, out, doc.get("declared_marble_bound"))
    if kind in ("sst", "sstf"):
        registers = tuple(_word(_need(doc, "registers", list, path),
                                "%s.registers" % path))
        init_val = {x: _word(w, "%s.initial_valuation.%s" % (path, x))
                    for x, w in _need(doc, "initial_valuation", dict, path).items()}
        delta, update = {}, {}
        for i, ent in enumerate(_need(doc, "transitions", list, path)):
            where = "%s.transitions[%d]" % (path, i)
            q = _need(ent, "state", str, where)
            a = _need(ent, "symbol", str, where)
            delta[(q, a)] = _need(ent, "to", str, where)
            update[(q, a)] = _substitution(_need(ent, "update", dict, where),
                                           "%s.update" % where)
        output = {q: _tokens(rhs, "%s.output.%s" % (path, q))
                  for q, rhs in _need(doc, "output", dict, path).items()}
        funs = tuple(doc.get("functions", [])) if kind == "sstf" else ()
        return SST(input_alphabet, output_alphabet, states, registers,
                   _need(doc, "initial", str, path), init_val, delta, update,
                   output, funs)
    # nsstf
    registers = tuple(_word(_need(doc, "registers", list, path),
                            "%s.registers" % path))
    initial = {q: {x: _word(w, "%s.initial.%s.%s" % (path, q, x))
                   for x, w in val.items()}
               for q, val in _need(doc, "initial", dict, path).items()}
    transitions, update = [], {}
    for i, ent in enumerate(_need(doc, "transitions", list, path)):
        where = "%s.transitions[%d]" % (path, i)
        key = (_need(ent, "from", str, where), _need(ent, "symbol", str, where),
               _need(ent, "to", str, where))
        transitions.append(key)
        update[key] = _substitution(_need(ent, "update", dict, where),
                                    "%s.update" % where)
    output = {q: _tokens(rhs, "%s.output.%s" % (path, q))
              for q, rhs in _need(doc, "output", dict, path).items()}
    return NSSTF(input_alphabet, output_alphabet, states, registers,
                 tuple(doc.get("functions", [])), initial,
                 tuple(sorted(transitions)), update, output)


def dumps_machine(m, layers: Optional[tuple] = None) -> str:
    doc = machine_to_json(m)
    if layers is not None:
        doc["layers"] = [list(layer) for layer in layers]
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def emit_machine(m, path: str, layers: Optional[tuple] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_machine(m, layers))


def parse_machine(path: str, check: bool = True):
    """Load a machine file; returns (machine, layers-or-None).

    Structural invariants are verified after parsing unless ``check`` is
    disabled (the validate subcommand reports them itself).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MachineFileError("%s: malformed JSON: %s" % (path, exc)) from None
    machine = machine_from_json(doc)
    layers = doc.get("layers")
    if layers is not None:
        layers = tuple(tuple(layer) for layer in layers)
    if check:
        problems = validate(machine)
        if problems:
            raise MachineFileError("%s: %s" % (path, "; ".join(problems)))
    return machine, layers
