"""Symbolic analysis of security protocols under explicit adversary models.

The package generates the bounded executions of a message-passing protocol
under a chosen adversary (passive eavesdropper, active insider, active
outsider), then evaluates knowledge queries against them: what holds, what
an agent implicitly knows, and what its knowledge algorithm can actually
compute.  Built-in algorithms cover extraction-only adversaries, offline
guessing, and protocol-specific key reassembly.
"""

__version__ = "0.1.0"

from .answers import KnowledgeAnswer
from .formulas import (
    And,
    CanCompute,
    Formula,
    Has,
    Know,
    Not,
    Prim,
    Received,
    Sent,
    parse_formula,
    render_formula,
)
from .histories import History, Recv, Send, history_of
from .scenario import Scenario, ScenarioError, parse_scenario, parse_scenario_file, render_scenario
from .systems import (
    AdversaryMode,
    AdversarySpec,
    Bounds,
    Point,
    ProtocolSpec,
    RoleSpec,
    System,
    generate_system,
)
from .terms import (
    Atom,
    Concat,
    Encrypt,
    Key,
    KeyKind,
    KeySpace,
    Message,
    conc,
    decr,
    encr,
    parse_message,
    render_message,
    submessage,
)
from .workbench import Report, corpus_list, corpus_run, run_scenario

__all__ = [
    "__version__",
    "KnowledgeAnswer",
    "And", "CanCompute", "Formula", "Has", "Know", "Not", "Prim", "Received", "Sent",
    "parse_formula", "render_formula",
    "History", "Recv", "Send", "history_of",
    "Scenario", "ScenarioError", "parse_scenario", "parse_scenario_file", "render_scenario",
    "AdversaryMode", "AdversarySpec", "Bounds", "Point", "ProtocolSpec", "RoleSpec",
    "System", "generate_system",
    "Atom", "Concat", "Encrypt", "Key", "KeyKind", "KeySpace", "Message",
    "conc", "decr", "encr", "parse_message", "render_message", "submessage",
    "Report", "corpus_list", "corpus_run", "run_scenario",
]
