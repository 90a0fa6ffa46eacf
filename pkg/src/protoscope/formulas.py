"""Query language over protocol executions.

Formulas are built from three primitives about an agent's history (sent,
received, has), closed under negation and conjunction, and two modalities:
``Know`` (truth in every state the agent cannot distinguish from the
current one) and ``CanCompute`` (the agent's knowledge algorithm answers
Yes).  Disjunction and implication are derived forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .terms import (
    KeySpace,
    Message,
    MessageParseError,
    _Scanner,
    _parse_term,
    render_message,
)


@dataclass(frozen=True, slots=True)
class Sent:
    """Agent ``agent`` sent message ``message`` (to anyone)."""

    agent: str
    message: Message


@dataclass(frozen=True, slots=True)
class Received:
    agent: str
    message: Message


@dataclass(frozen=True, slots=True)
class Has:
    """``message`` occurs as a submessage of something ``agent`` received."""

    agent: str
    message: Message


Primitive = Union[Sent, Received, Has]


@dataclass(frozen=True, slots=True)
class Prim:
    prim: Primitive


@dataclass(frozen=True, slots=True)
class Not:
    inner: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Know:
    agent: str
    inner: "Formula"


@dataclass(frozen=True, slots=True)
class CanCompute:
    """Algorithmic knowledge: the agent's algorithm answers Yes."""

    agent: str
    inner: "Formula"


Formula = Union[Prim, Not, And, Know, CanCompute]


def has(agent: str, message: Message) -> Formula:
    return Prim(Has(agent, message))


def sent(agent: str, message: Message) -> Formula:
    return Prim(Sent(agent, message))


def received(agent: str, message: Message) -> Formula:
    return Prim(Received(agent, message))


def or_(left: Formula, right: Formula) -> Formula:
    # derived form: phi or psi == not(not phi and not psi)
    return Not(And(Not(left), Not(right)))


def implies(left: Formula, right: Formula) -> Formula:
    return or_(Not(left), right)


# --- textual form ----------------------------------------------------------
#
#   f := "K(" agent "," f ")" | "X(" agent "," f ")"
#      | "not(" f ")" | "and(" f "," f ")" | "or(" f "," f ")"
#      | "implies(" f "," f ")"
#      | "send(" agent "," msg ")" | "recv(" agent "," msg ")"
#      | "has(" agent "," msg ")"
#
# or/implies parse into their derived forms and are not reproduced by the
# renderer.


def parse_formula(
    text: str,
    keys: KeySpace,
    agents: Iterable[str],
    atoms: Optional[Iterable[str]] = None,
) -> Formula:
    agent_set = set(agents)
    atom_set = None if atoms is None else set(atoms)
    scanner = _Scanner(text)
    formula = _parse_formula(scanner, keys, agent_set, atom_set)
    if not scanner.at_end():
        raise MessageParseError("trailing input after formula", scanner.pos)
    return formula


def _parse_agent(s: _Scanner, agents: set[str]) -> str:
    name, start = s.ident()
    if name not in agents:
        raise MessageParseError(f"unknown agent {name!r}", start)
    return name


def _parse_formula(
    s: _Scanner, keys: KeySpace, agents: set[str], atoms: Optional[set[str]]
) -> Formula:
    name, start = s.ident()
    s.expect("(")
    if name in ("K", "X"):
        agent = _parse_agent(s, agents)
        s.expect(",")
        inner = _parse_formula(s, keys, agents, atoms)
        s.expect(")")
        return Know(agent, inner) if name == "K" else CanCompute(agent, inner)
    if name == "not":
        inner = _parse_formula(s, keys, agents, atoms)
        s.expect(")")
        return Not(inner)
    if name in ("and", "or", "implies"):
        left = _parse_formula(s, keys, agents, atoms)
        s.expect(",")
        right = _parse_formula(s, keys, agents, atoms)
        s.expect(")")
        if name == "and":
            return And(left, right)
        return or_(left, right) if name == "or" else implies(left, right)
    if name in ("send", "recv", "has"):
        agent = _parse_agent(s, agents)
        s.expect(",")
        message = _parse_term(s, keys, atoms)
        s.expect(")")
        prim = {"send": Sent, "recv": Received, "has": Has}[name]
        return Prim(prim(agent, message))
    raise MessageParseError(f"unknown formula constructor {name!r}", start)


def render_formula(f: Formula) -> str:
    if isinstance(f, Prim):
        p = f.prim
        tag = {Sent: "send", Received: "recv", Has: "has"}[type(p)]
        return f"{tag}({p.agent},{render_message(p.message)})"
    if isinstance(f, Not):
        return f"not({render_formula(f.inner)})"
    if isinstance(f, And):
        return f"and({render_formula(f.left)},{render_formula(f.right)})"
    if isinstance(f, Know):
        return f"K({f.agent},{render_formula(f.inner)})"
    if isinstance(f, CanCompute):
        return f"X({f.agent},{render_formula(f.inner)})"
    raise TypeError(f"not a formula: {f!r}")
