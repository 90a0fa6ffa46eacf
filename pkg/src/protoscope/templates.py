"""Message templates for protocol roles: variables, key maps, matching.

A template is a message tree whose leaves may be variables (sorted: agent,
atom, key, or any message) or key-map applications such as ``pk(peer)``
that resolve an agent to one of its keys.  Instantiation substitutes a
binding frame; matching unifies a template against a concrete message,
extending the frame at unbound variables.  Matching is structural — the
free algebra guarantees at most one way to take a message apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Union

from .terms import (
    Atom,
    Concat,
    Encrypt,
    Key,
    KeySpace,
    Message,
    MessageParseError,
    _Scanner,
    render_message,
)


class VarSort(str, Enum):
    AGENT = "agent"
    ATOM = "atom"
    KEY = "key"
    MSG = "msg"


@dataclass(frozen=True, slots=True)
class TVar:
    name: str
    sort: VarSort


@dataclass(frozen=True, slots=True)
class TConst:
    value: Message


@dataclass(frozen=True, slots=True)
class TPair:
    left: "Template"
    right: "Template"


@dataclass(frozen=True, slots=True)
class TKeyMap:
    """A key looked up by agent, e.g. pk(peer) or pw(A)."""

    map_name: str
    agent: Union[TVar, TConst]


@dataclass(frozen=True, slots=True)
class TEnc:
    body: "Template"
    key: Union[TVar, TConst, TKeyMap]


Template = Union[TVar, TConst, TPair, TEnc]

Frame = Mapping[str, Message]


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class TemplateContext:
    """What identifiers mean inside a protocol: the declared agents, the
    keyspace, and the named agent-to-key maps."""

    keys: KeySpace
    agents: frozenset[str]
    keymaps: Mapping[str, Mapping[str, Key]]

    def resolve_keymap(self, map_name: str, agent: str) -> Key:
        try:
            return self.keymaps[map_name][agent]
        except KeyError:
            raise TemplateError(
                f"key map {map_name!r} has no entry for agent {agent!r}"
            ) from None


def template_vars(t: Template) -> frozenset[TVar]:
    if isinstance(t, TVar):
        return frozenset((t,))
    if isinstance(t, TConst):
        return frozenset()
    if isinstance(t, TPair):
        return template_vars(t.left) | template_vars(t.right)
    if isinstance(t, TEnc):
        out = template_vars(t.body)
        if isinstance(t.key, TVar):
            out |= {t.key}
        elif isinstance(t.key, TKeyMap) and isinstance(t.key.agent, TVar):
            out |= {t.key.agent}
        return out
    raise TypeError(f"not a template: {t!r}")


def _sort_accepts(sort: VarSort, m: Message, ctx: TemplateContext) -> bool:
    if sort is VarSort.MSG:
        return True
    if sort is VarSort.AGENT:
        return isinstance(m, Atom) and m.id in ctx.agents
    if sort is VarSort.ATOM:
        return isinstance(m, Atom)
    if sort is VarSort.KEY:
        return isinstance(m, Key)
    raise TypeError(sort)


def instantiate(t: Template, frame: Frame, ctx: TemplateContext) -> Message:
    """Substitute the frame; every variable must be bound."""
    if isinstance(t, TVar):
        try:
            return frame[t.name]
        except KeyError:
            raise TemplateError(f"variable {t.name!r} unbound at send time") from None
    if isinstance(t, TConst):
        return t.value
    if isinstance(t, TPair):
        return Concat(instantiate(t.left, frame, ctx), instantiate(t.right, frame, ctx))
    if isinstance(t, TEnc):
        key = _resolve_key(t.key, frame, ctx)
        return Encrypt(instantiate(t.body, frame, ctx), key)
    raise TypeError(f"not a template: {t!r}")


def _resolve_key(
    spec: Union[TVar, TConst, TKeyMap], frame: Frame, ctx: TemplateContext
) -> Key:
    if isinstance(spec, TConst):
        if not isinstance(spec.value, Key):
            raise TemplateError(f"{render_message(spec.value)} is not a key")
        return spec.value
    if isinstance(spec, TVar):
        bound = frame.get(spec.name)
        if not isinstance(bound, Key):
            raise TemplateError(f"key variable {spec.name!r} unbound or not a key")
        return bound
    agent_msg = (
        spec.agent.value if isinstance(spec.agent, TConst) else frame.get(spec.agent.name)
    )
    if not isinstance(agent_msg, Atom):
        raise TemplateError(
            f"key map {spec.map_name!r} applied to unbound or non-agent argument"
        )
    return ctx.resolve_keymap(spec.map_name, agent_msg.id)


def match(
    t: Template, m: Message, frame: Frame, ctx: TemplateContext
) -> Optional[dict[str, Message]]:
    """Match ``m`` against ``t`` under ``frame``.

    Returns the extended frame, or None when the shapes disagree, a bound
    variable disagrees, or a candidate binding fails its sort.
    """
    out = dict(frame)
    return out if _match_into(t, m, out, ctx) else None


def _match_into(t: Template, m: Message, frame: dict, ctx: TemplateContext) -> bool:
    if isinstance(t, TVar):
        if t.name in frame:
            return frame[t.name] == m
        if not _sort_accepts(t.sort, m, ctx):
            return False
        frame[t.name] = m
        return True
    if isinstance(t, TConst):
        return t.value == m
    if isinstance(t, TPair):
        return (
            isinstance(m, Concat)
            and _match_into(t.left, m.left, frame, ctx)
            and _match_into(t.right, m.right, frame, ctx)
        )
    if isinstance(t, TEnc):
        if not isinstance(m, Encrypt):
            return False
        if not _match_key(t.key, m.key, frame, ctx):
            return False
        return _match_into(t.body, m.body, frame, ctx)
    raise TypeError(f"not a template: {t!r}")


def _match_key(
    spec: Union[TVar, TConst, TKeyMap], key: Key, frame: dict, ctx: TemplateContext
) -> bool:
    if isinstance(spec, TConst):
        return spec.value == key
    if isinstance(spec, TVar):
        if spec.name in frame:
            return frame[spec.name] == key
        if spec.sort not in (VarSort.KEY, VarSort.MSG):
            return False
        frame[spec.name] = key
        return True
    # key map: with a bound or constant agent, compare; with an unbound
    # agent variable, invert the map — but only when the match is unique
    if isinstance(spec.agent, TConst):
        agent = spec.agent.value
        return isinstance(agent, Atom) and ctx.resolve_keymap(spec.map_name, agent.id) == key
    if spec.agent.name in frame:
        agent = frame[spec.agent.name]
        return isinstance(agent, Atom) and ctx.resolve_keymap(spec.map_name, agent.id) == key
    mapping = ctx.keymaps.get(spec.map_name, {})
    owners = [a for a, k in mapping.items() if k == key]
    if len(owners) != 1:
        return False
    frame[spec.agent.name] = Atom(owners[0])
    return True


def render_template(t: Template) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TConst):
        return render_message(t.value)
    if isinstance(t, TPair):
        return f"pair({render_template(t.left)},{render_template(t.right)})"
    if isinstance(t, TEnc):
        return f"enc({render_template(t.body)},{_render_keyspec(t.key)})"
    raise TypeError(f"not a template: {t!r}")


def _render_keyspec(spec: Union[TVar, TConst, TKeyMap]) -> str:
    if isinstance(spec, TVar):
        return spec.name
    if isinstance(spec, TConst):
        return render_message(spec.value)
    arg = spec.agent.name if isinstance(spec.agent, TVar) else render_message(spec.agent.value)
    return f"{spec.map_name}({arg})"


def parse_template(
    text: str,
    ctx: TemplateContext,
    var_sorts: Mapping[str, VarSort],
    atoms: frozenset[str],
) -> Template:
    """Parse the message grammar extended with variables and key maps.

    Identifier resolution order: declared variable, declared key, declared
    agent or atom.  ``name(arg)`` is a key-map application.
    """
    scanner = _Scanner(text)
    t = _parse_tmpl(scanner, ctx, var_sorts, atoms)
    if not scanner.at_end():
        raise MessageParseError("trailing input after template", scanner.pos)
    return t


def _parse_tmpl(
    s: _Scanner, ctx: TemplateContext, var_sorts: Mapping[str, VarSort], atoms: frozenset[str]
) -> Template:
    name, start = s.ident()
    if name == "pair" and s.peek() == "(":
        s.expect("(")
        left = _parse_tmpl(s, ctx, var_sorts, atoms)
        s.expect(",")
        right = _parse_tmpl(s, ctx, var_sorts, atoms)
        s.expect(")")
        return TPair(left, right)
    if name == "enc" and s.peek() == "(":
        s.expect("(")
        body = _parse_tmpl(s, ctx, var_sorts, atoms)
        s.expect(",")
        key = _parse_keyspec(s, ctx, var_sorts)
        s.expect(")")
        return TEnc(body, key)
    if s.peek() == "(" and name in ctx.keymaps:
        raise MessageParseError(
            f"key map {name!r} can only appear in the key slot of enc(...)", start
        )
    return _leaf(name, start, ctx, var_sorts, atoms)


def _parse_keyspec(
    s: _Scanner, ctx: TemplateContext, var_sorts: Mapping[str, VarSort]
) -> Union[TVar, TConst, TKeyMap]:
    name, start = s.ident()
    if s.peek() == "(":
        if name not in ctx.keymaps:
            raise MessageParseError(f"unknown key map {name!r}", start)
        s.expect("(")
        arg_name, arg_start = s.ident()
        s.expect(")")
        if arg_name in var_sorts:
            if var_sorts[arg_name] is not VarSort.AGENT:
                raise MessageParseError(
                    f"key map argument {arg_name!r} must be an agent variable", arg_start
                )
            return TKeyMap(name, TVar(arg_name, VarSort.AGENT))
        if arg_name in ctx.agents:
            return TKeyMap(name, TConst(Atom(arg_name)))
        raise MessageParseError(f"unknown agent {arg_name!r}", arg_start)
    if name in var_sorts:
        if var_sorts[name] not in (VarSort.KEY, VarSort.MSG):
            raise MessageParseError(f"variable {name!r} cannot stand for a key", start)
        return TVar(name, var_sorts[name])
    key = ctx.keys.get(name)
    if key is None:
        raise MessageParseError(f"unknown key {name!r}", start)
    return TConst(key)


def _leaf(
    name: str,
    start: int,
    ctx: TemplateContext,
    var_sorts: Mapping[str, VarSort],
    atoms: frozenset[str],
) -> Template:
    if name in var_sorts:
        return TVar(name, var_sorts[name])
    key = ctx.keys.get(name)
    if key is not None:
        return TConst(key)
    if name in ctx.agents or name in atoms:
        return TConst(Atom(name))
    raise MessageParseError(f"unknown identifier {name!r}", start)
