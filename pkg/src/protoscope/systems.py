"""Bounded generation of protocol executions under an adversary model.

A run is a time-indexed sequence of global states (environment pool plus
one history per agent); a system is the set of all runs reachable within
the declared bounds.  One primitive action happens per time step and every
other agent stutters, except that in passive mode a principal's send and
the adversary's eavesdropped copy land in the same step, which is what
keeps every sent message in the adversary's state at every point.

The scheduler is the weakest one satisfying the structural constraints:
messages sit in an in-flight pool; delivery only happens when the payload
matches what some session of the recipient expects next; in the active
modes the adversary may intercept any in-flight principal message instead,
and may inject any message it can construct that some session could
accept.  Validators re-check the constraints on finished systems so that
generator and checkers stay honest against each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping, Optional, Sequence, Union

from .adversaries import KnowledgeAlgorithm
from .formulas import Has, Prim
from .histories import Event, History, Recv, Send
from .templates import (
    Template,
    TemplateContext,
    TemplateError,
    TVar,
    VarSort,
    instantiate,
    match,
    template_vars,
)
from .terms import Atom, Concat, Encrypt, Key, KeySpace, Message, render_message, submessages


class AdversaryMode(str, Enum):
    PASSIVE = "passive"
    INSIDER = "insider"
    OUTSIDER = "outsider"


@dataclass(frozen=True, slots=True)
class Envelope:
    """An in-flight message.  ``origin`` is bookkeeping for the scheduler
    (the adversary does not intercept its own sends); nothing on the wire
    reveals it and it is not part of the exported state."""

    to: str
    payload: Message
    origin: str

    def sort_key(self) -> tuple[str, str]:
        return (self.to, render_message(self.payload))


@dataclass(frozen=True)
class GlobalState:
    env: tuple[Envelope, ...]
    histories: Mapping[str, History]


Run = tuple[GlobalState, ...]


@dataclass(frozen=True, slots=True)
class Point:
    run: int
    time: int


@dataclass
class System:
    runs: tuple[Run, ...]
    agents: tuple[str, ...]
    adversary: str
    mode: AdversaryMode
    keyspace: KeySpace
    truncated_runs: int = 0

    def points(self) -> Iterator[Point]:
        for r, run in enumerate(self.runs):
            for t in range(len(run)):
                yield Point(r, t)

    def point_count(self) -> int:
        return sum(len(run) for run in self.runs)

    def state(self, pt: Point) -> GlobalState:
        return self.runs[pt.run][pt.time]

    def history(self, pt: Point, agent: str) -> History:
        return self.runs[pt.run][pt.time].histories[agent]


# --- protocol specification -------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: VarSort
    choices: tuple[str, ...] = ()  # session parameters enumerate these agents


@dataclass(frozen=True)
class SendStep:
    dest: str  # an agent id or the name of an agent-sorted variable
    template: Template


@dataclass(frozen=True)
class RecvStep:
    template: Template


RoleStep = Union[SendStep, RecvStep]


@dataclass(frozen=True)
class RoleSpec:
    name: str
    agent: str
    vars: tuple[VarDecl, ...] = ()
    fresh: tuple[str, ...] = ()
    steps: tuple[RoleStep, ...] = ()
    sessions: int = 1


@dataclass(frozen=True)
class ProtocolSpec:
    roles: tuple[RoleSpec, ...]
    pools: Mapping[str, tuple[Atom, ...]]
    context: TemplateContext


@dataclass(frozen=True)
class AdversarySpec:
    agent: str
    mode: AdversaryMode
    algorithm: str


@dataclass(frozen=True)
class Bounds:
    max_steps: int = 12
    adversary_sends: Optional[int] = None
    state_budget: int = 2_000_000


class ProtocolError(ValueError):
    pass


class BoundExceededError(RuntimeError):
    def __init__(self, bound: str, where: str):
        super().__init__(f"bound exceeded: {bound} ({where})")
        self.bound = bound
        self.where = where


def validate_protocol(protocol: ProtocolSpec) -> None:
    """Reject roles whose sends could ever hit an unbound variable."""
    for role in protocol.roles:
        declared = {v.name: v for v in role.vars}
        bindable = {v.name for v in role.vars if v.choices} | set(role.fresh)
        for name in role.fresh:
            if name not in declared:
                raise ProtocolError(
                    f"role {role.name!r}: fresh variable {name!r} not declared"
                )
        bound = set()
        for idx, step in enumerate(role.steps):
            tvars = {v.name for v in template_vars(step.template)}
            unknown = tvars - set(declared)
            if unknown:
                raise ProtocolError(
                    f"role {role.name!r} step {idx + 1}: undeclared variables {sorted(unknown)}"
                )
            if isinstance(step, SendStep):
                needs = tvars | ({step.dest} if step.dest in declared else set())
                dangling = needs - bound - bindable
                if dangling:
                    raise ProtocolError(
                        f"role {role.name!r} step {idx + 1}: variables {sorted(dangling)} "
                        "are neither bound by an earlier receive nor fresh/choice"
                    )
                bound |= needs
            else:
                bound |= tvars


# --- constructibility --------------------------------------------------------


def can_construct(m: Message, history: History, algorithm: KnowledgeAlgorithm) -> bool:
    """Is ``m`` in the closure, under pairing and encryption, of what the
    algorithm says its owner has?"""

    def has_yes(x: Message) -> bool:
        answer = algorithm.evaluate(Prim(Has(algorithm.owner, x)), history)
        return answer.value == "Yes"

    def go(x: Message) -> bool:
        if isinstance(x, (Atom, Key)):
            return has_yes(x)
        if isinstance(x, Concat):
            return go(x.left) and go(x.right)
        if isinstance(x, Encrypt):
            return has_yes(x) or (go(x.body) and has_yes(x.key))
        raise TypeError(f"not a message: {x!r}")

    return go(m)


# --- generation --------------------------------------------------------------


@dataclass(frozen=True)
class _Session:
    role: RoleSpec
    index: int
    pc: int
    frame: tuple[tuple[str, Message], ...]  # sorted binding items

    def frame_dict(self) -> dict[str, Message]:
        return dict(self.frame)

    def with_step(self, frame: Mapping[str, Message]) -> "_Session":
        items = tuple(sorted(frame.items()))
        return _Session(self.role, self.index, self.pc + 1, items)

    def key(self) -> tuple:
        return (self.role.name, self.index)


@dataclass(frozen=True)
class _Node:
    env: tuple[Envelope, ...]
    histories: tuple[tuple[str, History], ...]
    sessions: tuple[_Session, ...]
    pools_used: tuple[tuple[str, frozenset[Atom]], ...]
    adv_sent: frozenset[tuple[str, Message]]


class _Generator:
    def __init__(
        self,
        protocol: ProtocolSpec,
        adversary: AdversarySpec,
        bounds: Bounds,
        initial_keys: Mapping[str, frozenset[Key]],
        algorithm: Optional[KnowledgeAlgorithm],
    ):
        self.protocol = protocol
        self.adversary = adversary
        self.bounds = bounds
        self.ctx = protocol.context
        self.keyspace = protocol.context.keys
        self.agents = tuple(sorted(self.ctx.agents))
        self.initial_keys = {
            a: frozenset(initial_keys.get(a, frozenset())) for a in self.agents
        }
        self.algorithm = algorithm
        if adversary.mode is not AdversaryMode.PASSIVE and algorithm is None:
            raise ProtocolError("active adversaries need a knowledge algorithm")
        self.runs: list[Run] = []
        self.truncated = 0
        self.visited = 0
        self._construct_cache: dict[tuple[Message, History], bool] = {}

    # -- helpers

    def _constructible(self, m: Message, history: History) -> bool:
        key = (m, history)
        if key not in self._construct_cache:
            self._construct_cache[key] = can_construct(m, history, self.algorithm)
        return self._construct_cache[key]

    def _state(self, node: _Node) -> GlobalState:
        return GlobalState(node.env, dict(node.histories))

    def _history(self, node: _Node, agent: str) -> History:
        for a, h in node.histories:
            if a == agent:
                return h
        raise KeyError(agent)

    def _with_history(self, node: _Node, agent: str, history: History) -> _Node:
        histories = tuple(
            (a, history if a == agent else h) for a, h in node.histories
        )
        return replace(node, histories=histories)

    def _pool_available(self, node: _Node, agent: str) -> list[Atom]:
        used: frozenset[Atom] = frozenset()
        for a, u in node.pools_used:
            if a == agent:
                used = u
        pool = self.protocol.pools.get(agent, ())
        return [a for a in pool if a not in used]

    def _mark_pool(self, node: _Node, agent: str, drawn: set[Atom]) -> _Node:
        pools = dict(node.pools_used)
        pools[agent] = pools.get(agent, frozenset()) | frozenset(drawn)
        return replace(node, pools_used=tuple(sorted(pools.items())))

    def _remove_envelope(self, node: _Node, env_item: Envelope) -> _Node:
        env = list(node.env)
        env.remove(env_item)
        return replace(node, env=tuple(env))

    def _add_envelope(self, node: _Node, env_item: Envelope) -> _Node:
        env = sorted(node.env + (env_item,), key=Envelope.sort_key)
        return replace(node, env=tuple(env))

    def _replace_session(self, node: _Node, old: _Session, new: _Session) -> _Node:
        sessions = tuple(new if s is old else s for s in node.sessions)
        return replace(node, sessions=sessions)

    # -- action enumeration

    def _role_send_actions(self, node: _Node) -> list[tuple[tuple, _Node]]:
        actions = []
        for session in node.sessions:
            if session.pc >= len(session.role.steps):
                continue
            step = session.role.steps[session.pc]
            if not isinstance(step, SendStep):
                continue
            role = session.role
            frame = session.frame_dict()
            needed = {v.name for v in template_vars(step.template)}
            if step.dest not in self.ctx.agents:
                needed.add(step.dest)
            unbound = [n for n in sorted(needed) if n not in frame]
            choice_vars = []
            fresh_vars = []
            for name in unbound:
                decl = next(v for v in role.vars if v.name == name)
                if name in role.fresh:
                    fresh_vars.append(name)
                elif decl.choices:
                    choice_vars.append((name, decl.choices))
                else:  # validated earlier; defensive
                    raise ProtocolError(f"variable {name!r} unbound at send")
            pool = self._pool_available(node, role.agent)
            fresh_options = (
                list(itertools.permutations(pool, len(fresh_vars))) if fresh_vars else [()]
            )
            choice_options = list(
                itertools.product(*(choices for _, choices in choice_vars))
            )
            for choices in choice_options:
                for draws in fresh_options:
                    frame2 = dict(frame)
                    for (name, _), agent_id in zip(choice_vars, choices):
                        frame2[name] = Atom(agent_id)
                    for name, atom in zip(fresh_vars, draws):
                        frame2[name] = atom
                    dest = (
                        step.dest
                        if step.dest in self.ctx.agents
                        else frame2[step.dest].id
                    )
                    if (
                        self.adversary.mode is AdversaryMode.OUTSIDER
                        and dest == self.adversary.agent
                    ):
                        continue
                    payload = instantiate(step.template, frame2, self.ctx)
                    actions.append(
                        (
                            ("1-send", role.agent, session.key(), dest, render_message(payload)),
                            self._apply_role_send(
                                node, session, frame2, dest, payload, set(draws)
                            ),
                        )
                    )
        return actions

    def _apply_role_send(
        self,
        node: _Node,
        session: _Session,
        frame: dict[str, Message],
        dest: str,
        payload: Message,
        drawn: set[Atom],
    ) -> _Node:
        agent = session.role.agent
        out = self._with_history(
            node, agent, self._history(node, agent).append(Send(dest, payload))
        )
        if self.adversary.mode is AdversaryMode.PASSIVE:
            adv = self.adversary.agent
            out = self._with_history(
                out, adv, self._history(out, adv).append(Recv(payload))
            )
        out = self._add_envelope(out, Envelope(dest, payload, agent))
        out = self._replace_session(out, session, session.with_step(frame))
        if drawn:
            out = self._mark_pool(out, agent, drawn)
        return out

    def _delivery_actions(self, node: _Node) -> list[tuple[tuple, _Node]]:
        actions = []
        adv = self.adversary.agent
        seen: set[tuple] = set()
        for env_item in node.env:
            key = env_item.sort_key() + (env_item.origin,)
            if key in seen:  # duplicate in-flight copies are the same action
                continue
            seen.add(key)
            if env_item.to == adv:
                out = self._remove_envelope(node, env_item)
                out = self._with_history(
                    out, adv, self._history(out, adv).append(Recv(env_item.payload))
                )
                actions.append((("2-deliver", adv, (), "", key[1]), out))
                continue
            for session in node.sessions:
                if session.role.agent != env_item.to:
                    continue
                if session.pc >= len(session.role.steps):
                    continue
                step = session.role.steps[session.pc]
                if not isinstance(step, RecvStep):
                    continue
                frame2 = match(step.template, env_item.payload, session.frame_dict(), self.ctx)
                if frame2 is None:
                    continue
                out = self._remove_envelope(node, env_item)
                out = self._with_history(
                    out,
                    env_item.to,
                    self._history(out, env_item.to).append(Recv(env_item.payload)),
                )
                out = self._replace_session(out, session, session.with_step(frame2))
                actions.append(
                    (("2-deliver", env_item.to, session.key(), "", key[1]), out)
                )
            if (
                self.adversary.mode is not AdversaryMode.PASSIVE
                and env_item.origin != adv
            ):
                out = self._remove_envelope(node, env_item)
                out = self._with_history(
                    out, adv, self._history(out, adv).append(Recv(env_item.payload))
                )
                actions.append((("3-intercept", adv, (), env_item.to, key[1]), out))
        return actions

    def _adversary_send_actions(self, node: _Node) -> list[tuple[tuple, _Node]]:
        if self.adversary.mode is AdversaryMode.PASSIVE:
            return []
        if (
            self.bounds.adversary_sends is not None
            and len(node.adv_sent) >= self.bounds.adversary_sends
        ):
            return []
        adv = self.adversary.agent
        adv_history = self._history(node, adv)
        atom_domain, key_domain, msg_domain = self._adversary_domains(adv_history)
        actions = []
        for session in node.sessions:
            if session.role.agent == adv or session.pc >= len(session.role.steps):
                continue
            step = session.role.steps[session.pc]
            if not isinstance(step, RecvStep):
                continue
            frame = session.frame_dict()
            unbound = sorted(
                {v for v in template_vars(step.template) if v.name not in frame},
                key=lambda v: v.name,
            )
            domains = []
            for var in unbound:
                if var.sort is VarSort.AGENT:
                    domains.append([Atom(a) for a in self.agents])
                elif var.sort is VarSort.ATOM:
                    domains.append(atom_domain)
                elif var.sort is VarSort.KEY:
                    domains.append(key_domain)
                else:
                    domains.append(msg_domain)
            for values in itertools.product(*domains):
                frame2 = dict(frame)
                for var, value in zip(unbound, values):
                    frame2[var.name] = value
                try:
                    payload = instantiate(step.template, frame2, self.ctx)
                except TemplateError:
                    continue
                dest = session.role.agent
                if (dest, payload) in node.adv_sent:
                    continue
                if not self._constructible(payload, adv_history):
                    continue
                out = self._with_history(
                    node, adv, adv_history.append(Send(dest, payload))
                )
                out = self._add_envelope(out, Envelope(dest, payload, adv))
                out = replace(
                    out, adv_sent=node.adv_sent | {(dest, payload)}
                )
                actions.append(
                    (("4-advsend", adv, session.key(), dest, render_message(payload)), out)
                )
        return actions

    def _adversary_domains(
        self, adv_history: History
    ) -> tuple[list[Atom], list[Key], list[Message]]:
        observed: set[Message] = set()
        for m in adv_history.received():
            observed |= submessages(m)
        atoms = sorted(
            (m for m in observed if isinstance(m, Atom)), key=lambda a: a.id
        )
        keys = list(self.keyspace.all_keys())
        msgs = sorted(
            observed | set(adv_history.initial), key=render_message
        )
        return atoms, keys, msgs

    # -- search

    def run(self) -> System:
        histories = tuple(
            (a, History(self.initial_keys[a], ())) for a in self.agents
        )
        sessions = []
        for role in self.protocol.roles:
            for i in range(role.sessions):
                sessions.append(_Session(role, i, 0, ()))
        root = _Node(
            env=(),
            histories=histories,
            sessions=tuple(sessions),
            pools_used=(),
            adv_sent=frozenset(),
        )
        self._dfs(root, [self._state(root)])
        return System(
            runs=tuple(self.runs),
            agents=self.agents,
            adversary=self.adversary.agent,
            mode=self.adversary.mode,
            keyspace=self.keyspace,
            truncated_runs=self.truncated,
        )

    def _dfs(self, node: _Node, states: list[GlobalState]) -> None:
        self.visited += 1
        if self.visited > self.bounds.state_budget:
            raise BoundExceededError(
                "state_budget",
                f"more than {self.bounds.state_budget} states explored",
            )
        if len(states) - 1 >= self.bounds.max_steps:
            self.truncated += 1
            self.runs.append(tuple(states))
            return
        actions = (
            self._role_send_actions(node)
            + self._delivery_actions(node)
            + self._adversary_send_actions(node)
        )
        if not actions:
            self.runs.append(tuple(states))
            return
        for _, child in sorted(actions, key=lambda item: item[0]):
            states.append(self._state(child))
            self._dfs(child, states)
            states.pop()


def generate_system(
    protocol: ProtocolSpec,
    adversary: AdversarySpec,
    bounds: Bounds,
    initial_keys: Mapping[str, frozenset[Key]],
    algorithm: Optional[KnowledgeAlgorithm] = None,
) -> System:
    """Enumerate every run reachable within the bounds, deterministically.

    The adversary's construction power (A2) is decided by ``algorithm``;
    passive generation does not need one.
    """
    validate_protocol(protocol)
    return _Generator(protocol, adversary, bounds, initial_keys, algorithm).run()


# --- validators ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    clause: str
    run: int
    time: int
    agent: str
    detail: str

    def __str__(self) -> str:
        return f"{self.clause} at run {self.run} time {self.time} agent {self.agent}: {self.detail}"


def check_mp(system: System) -> list[Violation]:
    """The message-passing constraints: histories are well-formed (MP1),
    every receive has a matching earlier-or-same-time send (MP2), and
    histories start empty and grow one event at a time (MP3)."""
    violations = []
    for r, run in enumerate(system.runs):
        for agent in system.agents:
            if run[0].histories[agent].events:
                violations.append(
                    Violation("MP3", r, 0, agent, "history not empty at time 0")
                )
        for t, state in enumerate(run):
            sent_payloads = set()
            for agent in system.agents:
                history = state.histories[agent]
                for event in history.events:
                    if isinstance(event, Send):
                        sent_payloads.add(event.payload)
                    elif not isinstance(event, Recv):
                        violations.append(
                            Violation("MP1", r, t, agent, f"foreign event {event!r}")
                        )
            for agent in system.agents:
                history = state.histories[agent]
                for event in history.events:
                    if isinstance(event, Recv) and event.payload not in sent_payloads:
                        violations.append(
                            Violation(
                                "MP2",
                                r,
                                t,
                                agent,
                                f"recv({render_message(event.payload)}) has no matching send",
                            )
                        )
            if t == 0:
                continue
            for agent in system.agents:
                prev = run[t - 1].histories[agent]
                cur = state.histories[agent]
                grew = len(cur.events) - len(prev.events)
                if (
                    cur.initial != prev.initial
                    or grew not in (0, 1)
                    or cur.events[: len(prev.events)] != prev.events
                ):
                    violations.append(
                        Violation("MP3", r, t, agent, "history shrank or jumped")
                    )
    return violations


def check_passive(system: System, adversary: str) -> list[Violation]:
    """P1: the adversary only ever receives.  P2: every principal send is
    already in the adversary's receive set at the same time."""
    violations = []
    for r, run in enumerate(system.runs):
        for t, state in enumerate(run):
            adv_history = state.histories[adversary]
            for event in adv_history.events:
                if not isinstance(event, Recv):
                    violations.append(
                        Violation("P1", r, t, adversary, f"adversary event {event!r}")
                    )
            adv_received = set(adv_history.received())
            for agent in system.agents:
                if agent == adversary:
                    continue
                for event in state.histories[agent].events:
                    if isinstance(event, Send) and event.payload not in adv_received:
                        violations.append(
                            Violation(
                                "P2",
                                r,
                                t,
                                agent,
                                f"send({render_message(event.payload)}) not copied to adversary",
                            )
                        )
    return violations


def check_active_insider(
    system: System, adversary: str, algorithm: KnowledgeAlgorithm
) -> list[Violation]:
    """A1: adversary receives correspond to someone's send.  A2: adversary
    sends are constructible from its state when they happen."""
    violations = []
    for r, run in enumerate(system.runs):
        for t, state in enumerate(run):
            sent_payloads = {
                e.payload
                for agent in system.agents
                for e in state.histories[agent].events
                if isinstance(e, Send)
            }
            for event in state.histories[adversary].events:
                if isinstance(event, Recv) and event.payload not in sent_payloads:
                    violations.append(
                        Violation(
                            "A1",
                            r,
                            t,
                            adversary,
                            f"recv({render_message(event.payload)}) was never sent",
                        )
                    )
        final = run[-1].histories[adversary]
        for idx, event in enumerate(final.events):
            if not isinstance(event, Send):
                continue
            send_time = _first_time_with(run, adversary, idx + 1)
            history_then = run[send_time].histories[adversary]
            if not can_construct(event.payload, history_then, algorithm):
                violations.append(
                    Violation(
                        "A2",
                        r,
                        send_time,
                        adversary,
                        f"send({render_message(event.payload)}) not constructible",
                    )
                )
    return violations


def _first_time_with(run: Run, agent: str, event_count: int) -> int:
    for t, state in enumerate(run):
        if len(state.histories[agent].events) >= event_count:
            return t
    return len(run) - 1


def check_outsider(
    system: System, adversary: str, algorithm: KnowledgeAlgorithm
) -> list[Violation]:
    """Insider checks plus A3: nobody addresses the adversary."""
    violations = check_active_insider(system, adversary, algorithm)
    for r, run in enumerate(system.runs):
        state = run[-1]
        for agent in system.agents:
            for event in state.histories[agent].events:
                if isinstance(event, Send) and event.to == adversary:
                    violations.append(
                        Violation(
                            "A3",
                            r,
                            len(run) - 1,
                            agent,
                            f"message addressed to the adversary: {render_message(event.payload)}",
                        )
                    )
    return violations


# --- export -------------------------------------------------------------------


def _event_json(event: Event) -> dict:
    if isinstance(event, Send):
        return {"kind": "send", "to": event.to, "msg": render_message(event.payload)}
    return {"kind": "recv", "msg": render_message(event.payload)}


def system_to_json_dict(system: System) -> dict:
    return {
        "schema": 1,
        "mode": system.mode.value,
        "adversary": system.adversary,
        "agents": list(system.agents),
        "truncated_runs": system.truncated_runs,
        "runs": [
            {
                "id": r,
                "states": [
                    {
                        "time": t,
                        "env": [
                            {"to": e.to, "msg": render_message(e.payload)}
                            for e in state.env
                        ],
                        "agents": {
                            agent: {
                                "initkeys": sorted(
                                    k.id for k in state.histories[agent].initial
                                ),
                                "events": [
                                    _event_json(e) for e in state.histories[agent].events
                                ],
                            }
                            for agent in system.agents
                        },
                    }
                    for t, state in enumerate(run)
                ],
            }
            for r, run in enumerate(system.runs)
        ],
    }
