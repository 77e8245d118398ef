"""Word-to-word transducer toolkit.

Models two-way transducers, marble transducers and streaming string
transducers (plain, layered, nondeterministic, and with external function
calls); converts between them; analyzes asymptotic output growth through
flow automata; and rewrites machines to use the minimal number of marbles
or copy layers.
"""

from .machines import (
    DFA,
    Fun,
    FunctionRegistry,
    LEFT_END,
    Lit,
    MachineError,
    MarbleTransducer,
    NAutomaton,
    NSSTF,
    Reg,
    RIGHT_END,
    SST,
    TwoWayTransducer,
    as_word,
    check_bounded,
    check_copyless,
    check_layered,
    compose_substitutions,
    validate,
)
from .semantics import (
    RunResult,
    enumerate_nsstf_runs,
    eval_nautomaton,
    run_machine,
    run_marble,
    run_sst,
    run_sstf,
    run_two_way,
)
from .growth import GrowthReport, classify, classify_function, flow_automaton
from .layering import minimize_marbles, to_k_layered
from .mt2sst import marble_to_sst, two_way_to_marble
from .oracle import equiv_check
from .sst2mt import layered_to_marble, sst_to_marble

__all__ = [
    "DFA", "Fun", "FunctionRegistry", "LEFT_END", "Lit", "MachineError",
    "MarbleTransducer", "NAutomaton", "NSSTF", "Reg", "RIGHT_END", "SST",
    "TwoWayTransducer", "as_word", "check_bounded", "check_copyless",
    "check_layered", "compose_substitutions", "validate", "RunResult",
    "enumerate_nsstf_runs", "eval_nautomaton", "run_machine", "run_marble",
    "run_sst", "run_sstf", "run_two_way", "GrowthReport", "classify",
    "classify_function", "flow_automaton", "minimize_marbles", "to_k_layered",
    "marble_to_sst", "two_way_to_marble", "equiv_check", "layered_to_marble",
    "sst_to_marble",
]
