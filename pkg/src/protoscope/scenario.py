"""The scenario file format: agents, keys, roles, bounds, and queries.

A scenario is a line-based text file.  Top-level lines start with a
keyword; a ``role`` line opens a block of var/fresh/send/recv lines that
runs until the next top-level keyword.  ``#`` starts a comment.

    scenario challenge
    mode passive
    algorithm lowe
    agent A
    agent S
    agent E adversary
    key pa symmetric
    keymap pw A pa
    pool S ns
    bounds steps 8
    role client A
      var n atom
      send S A
      recv n
      send S enc(n,pw(A))
    role server S
      var who agent
      fresh chal
      recv who
      send who chal
      recv enc(chal,pw(who))
    query exists X(E,has(E,pa)) expect true

Parsing either returns a fully resolved scenario or raises with every
positioned diagnostic collected along the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .adversaries import DdgConfig
from .formulas import Formula, parse_formula, render_formula
from .systems import (
    AdversaryMode,
    AdversarySpec,
    Bounds,
    ProtocolSpec,
    RecvStep,
    RoleSpec,
    SendStep,
    VarDecl,
)
from .templates import (
    TemplateContext,
    VarSort,
    parse_template,
    render_template,
)
from .terms import IDENT_RE, Atom, Key, KeySpace, MessageParseError


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Query:
    quantifier: str  # "exists" | "forall"
    formula: Formula
    expected: Optional[bool] = None


@dataclass
class Scenario:
    name: str
    mode: AdversaryMode
    algorithm: str
    agents: tuple[str, ...]
    adversary: str
    keyspace: KeySpace
    keymaps: dict[str, dict[str, Key]]
    atoms: frozenset[str]
    initkeys: dict[str, frozenset[Key]]
    pools: dict[str, tuple[Atom, ...]]
    bounds: Bounds
    roles: tuple[RoleSpec, ...]
    queries: tuple[Query, ...]
    soundness: tuple[Formula, ...]
    ddg: Optional[DdgConfig] = None
    lowe_literal_a: bool = False

    def context(self) -> TemplateContext:
        return TemplateContext(
            keys=self.keyspace,
            agents=frozenset(self.agents),
            keymaps=self.keymaps,
        )

    def protocol(self) -> ProtocolSpec:
        return ProtocolSpec(roles=self.roles, pools=self.pools, context=self.context())

    def adversary_spec(self) -> AdversarySpec:
        return AdversarySpec(self.adversary, self.mode, self.algorithm)


def parse_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def parse_scenario(text: str) -> Scenario:
    return _Parser(text).parse()


_TOP_KEYWORDS = {
    "scenario",
    "mode",
    "algorithm",
    "agent",
    "key",
    "keymap",
    "atom",
    "initkeys",
    "pool",
    "bounds",
    "option",
    "ddg",
    "role",
    "query",
    "soundness",
}


@dataclass
class _RawRole:
    line: int
    name: str
    agent: str
    sessions: int
    body: list[tuple[int, list[str]]] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.diagnostics: list[Diagnostic] = []
        self.name: Optional[str] = None
        self.mode = AdversaryMode.PASSIVE
        self.algorithm = "dolev-yao"
        self.agents: list[str] = []
        self.adversary: Optional[str] = None
        self.keyspace = KeySpace()
        self.keymaps: dict[str, dict[str, Key]] = {}
        self.atoms: set[str] = set()
        self.initkeys: dict[str, set[Key]] = {}
        self.pools: dict[str, tuple[Atom, ...]] = {}
        self.bounds = Bounds()
        self.raw_roles: list[_RawRole] = []
        self.query_lines: list[tuple[int, list[str]]] = []
        self.soundness_lines: list[tuple[int, list[str]]] = []
        self.ddg_key: Optional[str] = None
        self.ddg_bits: list[str] = []
        self.lowe_literal_a = False

    def fail(self, line: int, message: str) -> None:
        self.diagnostics.append(Diagnostic(line, message))

    def parse(self) -> Scenario:
        current_role: Optional[_RawRole] = None
        for idx, raw in enumerate(self.lines, start=1):
            stripped = raw.split("#", 1)[0].strip()
            if not stripped:
                continue
            tokens = stripped.split()
            head = tokens[0]
            if head in _TOP_KEYWORDS:
                current_role = self._top_level(idx, head, tokens[1:])
            elif current_role is not None and head in ("var", "fresh", "send", "recv"):
                current_role.body.append((idx, tokens))
            else:
                self.fail(idx, f"unknown directive {head!r}")
        self._check_declarations()
        roles = tuple(self._resolve_role(r) for r in self.raw_roles)
        queries = tuple(self._resolve_query(line, toks) for line, toks in self.query_lines)
        soundness = tuple(self._resolve_soundness())
        ddg = self._resolve_ddg()
        if self.diagnostics:
            raise ScenarioError(self.diagnostics)
        return Scenario(
            name=self.name or "unnamed",
            mode=self.mode,
            algorithm=self.algorithm,
            agents=tuple(self.agents),
            adversary=self.adversary,
            keyspace=self.keyspace,
            keymaps=self.keymaps,
            atoms=frozenset(self.atoms),
            initkeys={a: frozenset(ks) for a, ks in self.initkeys.items()},
            pools=self.pools,
            bounds=self.bounds,
            roles=tuple(r for r in roles if r is not None),
            queries=tuple(q for q in queries if q is not None),
            soundness=soundness,
            ddg=ddg,
            lowe_literal_a=self.lowe_literal_a,
        )

    # -- top-level directives

    def _top_level(self, line: int, head: str, args: list[str]) -> Optional[_RawRole]:
        if head == "role":
            return self._role_header(line, args)
        handler = getattr(self, f"_kw_{head}")
        handler(line, args)
        return None

    def _kw_scenario(self, line: int, args: list[str]) -> None:
        if len(args) != 1:
            self.fail(line, "usage: scenario <name>")
            return
        self.name = args[0]

    def _kw_mode(self, line: int, args: list[str]) -> None:
        try:
            self.mode = AdversaryMode(args[0]) if args else None
        except ValueError:
            self.mode = None
        if self.mode is None:
            self.fail(line, "usage: mode passive|insider|outsider")
            self.mode = AdversaryMode.PASSIVE

    def _kw_algorithm(self, line: int, args: list[str]) -> None:
        if len(args) != 1:
            self.fail(line, "usage: algorithm <name>")
            return
        self.algorithm = args[0]

    def _kw_agent(self, line: int, args: list[str]) -> None:
        if not args or len(args) > 2 or (len(args) == 2 and args[1] != "adversary"):
            self.fail(line, "usage: agent <id> [adversary]")
            return
        name = args[0]
        if not IDENT_RE.fullmatch(name):
            self.fail(line, f"bad agent id {name!r}")
            return
        if name in self.agents:
            self.fail(line, f"agent {name!r} declared twice")
            return
        self.agents.append(name)
        if len(args) == 2:
            if self.adversary is not None:
                self.fail(line, "only one adversary per system")
            self.adversary = name

    def _kw_key(self, line: int, args: list[str]) -> None:
        try:
            if len(args) == 2 and args[1] == "symmetric":
                self.keyspace.add_symmetric(args[0])
            elif len(args) == 3 and args[1] == "public":
                self.keyspace.add_pair(args[0], args[2])
            else:
                self.fail(line, "usage: key <id> symmetric | key <id> public <inverse-id>")
        except ValueError as exc:
            self.fail(line, str(exc))

    def _kw_keymap(self, line: int, args: list[str]) -> None:
        if len(args) != 3:
            self.fail(line, "usage: keymap <fn> <agent> <key>")
            return
        fn, agent, key_id = args
        key = self.keyspace.get(key_id)
        if key is None:
            self.fail(line, f"unknown key {key_id!r}")
            return
        self.keymaps.setdefault(fn, {})
        if agent in self.keymaps[fn]:
            self.fail(line, f"keymap {fn!r} already maps {agent!r}")
            return
        self.keymaps[fn][agent] = key

    def _kw_atom(self, line: int, args: list[str]) -> None:
        if not args:
            self.fail(line, "usage: atom <id> ...")
        for name in args:
            if not IDENT_RE.fullmatch(name):
                self.fail(line, f"bad atom id {name!r}")
            else:
                self.atoms.add(name)

    def _kw_initkeys(self, line: int, args: list[str]) -> None:
        if not args:
            self.fail(line, "usage: initkeys <agent> [<key> ...]")
            return
        agent, key_ids = args[0], args[1:]
        bucket = self.initkeys.setdefault(agent, set())
        for key_id in key_ids:
            key = self.keyspace.get(key_id)
            if key is None:
                self.fail(line, f"unknown key {key_id!r}")
            else:
                bucket.add(key)

    def _kw_pool(self, line: int, args: list[str]) -> None:
        if len(args) < 2:
            self.fail(line, "usage: pool <agent> <atom> ...")
            return
        agent = args[0]
        if agent in self.pools:
            self.fail(line, f"pool for {agent!r} declared twice")
            return
        self.atoms.update(args[1:])
        self.pools[agent] = tuple(Atom(a) for a in args[1:])

    def _kw_bounds(self, line: int, args: list[str]) -> None:
        if len(args) % 2 != 0:
            self.fail(line, "usage: bounds steps <n> [adv-sends <n>] [state-budget <n>]")
            return
        fields = {"steps": "max_steps", "adv-sends": "adversary_sends", "state-budget": "state_budget"}
        for name, value in zip(args[::2], args[1::2]):
            if name not in fields:
                self.fail(line, f"unknown bound {name!r}")
                continue
            try:
                n = int(value)
                if n <= 0:
                    raise ValueError
            except ValueError:
                self.fail(line, f"bound {name!r} needs a positive integer, got {value!r}")
                continue
            self.bounds = replace(self.bounds, **{fields[name]: n})

    def _kw_option(self, line: int, args: list[str]) -> None:
        if args == ["lowe-literal-a"]:
            self.lowe_literal_a = True
        else:
            self.fail(line, f"unknown option {' '.join(args)!r}")

    def _kw_ddg(self, line: int, args: list[str]) -> None:
        if len(args) >= 2 and args[0] == "key" and len(args) == 2:
            self.ddg_key = args[1]
        elif len(args) >= 2 and args[0] == "bits":
            self.ddg_bits.extend(args[1:])
            self.atoms.update(args[1:])
        else:
            self.fail(line, "usage: ddg key <key> | ddg bits <atom> ...")

    def _kw_query(self, line: int, args: list[str]) -> None:
        self.query_lines.append((line, args))

    def _kw_soundness(self, line: int, args: list[str]) -> None:
        self.soundness_lines.append((line, args))

    def _role_header(self, line: int, args: list[str]) -> Optional[_RawRole]:
        sessions = 1
        if len(args) == 4 and args[2] == "sessions":
            try:
                sessions = int(args[3])
                if sessions <= 0:
                    raise ValueError
            except ValueError:
                self.fail(line, f"sessions needs a positive integer, got {args[3]!r}")
                return None
            args = args[:2]
        if len(args) != 2:
            self.fail(line, "usage: role <name> <agent> [sessions <n>]")
            return None
        role = _RawRole(line, args[0], args[1], sessions)
        self.raw_roles.append(role)
        return role

    # -- resolution

    def _check_declarations(self) -> None:
        if self.name is None:
            self.fail(1, "missing scenario <name>")
        if not self.agents:
            self.fail(1, "no agents declared")
        if self.adversary is None:
            self.fail(1, "no adversary declared (agent <id> adversary)")
        key_ids = {k.id for k in self.keyspace.all_keys()}
        clashes = (self.atoms & (set(self.agents) | key_ids)) | (
            key_ids & set(self.agents)
        )
        for name in sorted(clashes):
            self.fail(1, f"identifier {name!r} declared as more than one kind")
        for agent in list(self.initkeys) + list(self.pools):
            if agent not in self.agents:
                self.fail(1, f"unknown agent {agent!r} in initkeys/pool")
        for fn, mapping in self.keymaps.items():
            for agent in mapping:
                if agent not in self.agents:
                    self.fail(1, f"keymap {fn!r} names unknown agent {agent!r}")

    def _resolve_role(self, raw: _RawRole) -> Optional[RoleSpec]:
        if raw.agent not in self.agents:
            self.fail(raw.line, f"role {raw.name!r} played by unknown agent {raw.agent!r}")
            return None
        var_decls: list[VarDecl] = []
        fresh: list[str] = []
        steps_raw: list[tuple[int, list[str]]] = []
        reserved = set(self.agents) | self.atoms | {k.id for k in self.keyspace.all_keys()}
        for line, tokens in raw.body:
            head = tokens[0]
            if head == "var":
                decl = self._parse_var(line, tokens[1:], reserved)
                if decl:
                    var_decls.append(decl)
            elif head == "fresh":
                if len(tokens) != 2:
                    self.fail(line, "usage: fresh <var>")
                    continue
                name = tokens[1]
                if name in reserved or any(v.name == name for v in var_decls):
                    self.fail(line, f"fresh variable {name!r} shadows another identifier")
                    continue
                var_decls.append(VarDecl(name, VarSort.ATOM))
                fresh.append(name)
            else:
                steps_raw.append((line, tokens))
        ctx = TemplateContext(
            keys=self.keyspace,
            agents=frozenset(self.agents),
            keymaps=self.keymaps,
        )
        sorts = {v.name: v.sort for v in var_decls}
        steps = []
        for line, tokens in steps_raw:
            step = self._parse_step(line, tokens, ctx, sorts, var_decls)
            if step is not None:
                steps.append(step)
        return RoleSpec(
            name=raw.name,
            agent=raw.agent,
            vars=tuple(var_decls),
            fresh=tuple(fresh),
            steps=tuple(steps),
            sessions=raw.sessions,
        )

    def _parse_var(
        self, line: int, args: list[str], reserved: set[str]
    ) -> Optional[VarDecl]:
        if len(args) < 2:
            self.fail(line, "usage: var <name> agent|atom|key|msg [choices <agent> ...]")
            return None
        name = args[0]
        if name in reserved:
            self.fail(line, f"variable {name!r} shadows another identifier")
            return None
        try:
            sort = VarSort(args[1])
        except ValueError:
            self.fail(line, f"unknown sort {args[1]!r}")
            return None
        choices: tuple[str, ...] = ()
        if len(args) > 2:
            if args[2] != "choices" or sort is not VarSort.AGENT:
                self.fail(line, "choices are only valid on agent variables")
                return None
            choices = tuple(args[3:])
            unknown = [c for c in choices if c not in self.agents]
            if unknown:
                self.fail(line, f"unknown agents in choices: {unknown}")
                return None
        return VarDecl(name, sort, choices)

    def _parse_step(self, line, tokens, ctx, sorts, var_decls):
        head = tokens[0]
        try:
            if head == "send":
                if len(tokens) < 3:
                    self.fail(line, "usage: send <dest> <template>")
                    return None
                dest = tokens[1]
                dest_ok = dest in self.agents or any(
                    v.name == dest and v.sort is VarSort.AGENT for v in var_decls
                )
                if not dest_ok:
                    self.fail(line, f"send destination {dest!r} is not an agent or agent variable")
                    return None
                template = parse_template(
                    "".join(tokens[2:]), ctx, sorts, frozenset(self.atoms)
                )
                return SendStep(dest, template)
            if head == "recv":
                if len(tokens) < 2:
                    self.fail(line, "usage: recv <template>")
                    return None
                template = parse_template(
                    "".join(tokens[1:]), ctx, sorts, frozenset(self.atoms)
                )
                return RecvStep(template)
        except MessageParseError as exc:
            self.fail(line, str(exc))
            return None
        self.fail(line, f"unknown role step {head!r}")
        return None

    def _resolve_query(self, line: int, tokens: list[str]) -> Optional[Query]:
        if not tokens or tokens[0] not in ("exists", "forall"):
            self.fail(line, "usage: query exists|forall <formula> [expect true|false]")
            return None
        quantifier = tokens[0]
        rest = tokens[1:]
        expected = None
        if len(rest) >= 2 and rest[-2] == "expect":
            if rest[-1] not in ("true", "false"):
                self.fail(line, "expect needs true or false")
                return None
            expected = rest[-1] == "true"
            rest = rest[:-2]
        if not rest:
            self.fail(line, "query is missing its formula")
            return None
        try:
            formula = parse_formula(
                "".join(rest), self.keyspace, self.agents, self.atoms | set(self.agents)
            )
        except MessageParseError as exc:
            self.fail(line, str(exc))
            return None
        return Query(quantifier, formula, expected)

    def _resolve_soundness(self) -> tuple[Formula, ...]:
        formulas: list[Formula] = []
        for line, tokens in self.soundness_lines:
            for token in tokens:
                try:
                    formulas.append(
                        parse_formula(
                            token, self.keyspace, self.agents, self.atoms | set(self.agents)
                        )
                    )
                except MessageParseError as exc:
                    self.fail(line, str(exc))
        return tuple(formulas)

    def _resolve_ddg(self) -> Optional[DdgConfig]:
        if self.ddg_key is None and not self.ddg_bits:
            return None
        if self.ddg_key is None or not self.ddg_bits:
            self.fail(1, "ddg needs both a key and bits")
            return None
        key = self.keyspace.get(self.ddg_key)
        if key is None:
            self.fail(1, f"unknown ddg key {self.ddg_key!r}")
            return None
        try:
            return DdgConfig(key, tuple(Atom(b) for b in self.ddg_bits))
        except ValueError as exc:
            self.fail(1, str(exc))
            return None


# --- rendering ------------------------------------------------------------


def render_scenario(scenario: Scenario) -> str:
    """Canonical text for a scenario; parsing it back gives the same
    scenario (the round-trip fixpoint the corpus tests rely on)."""
    out = [f"scenario {scenario.name}", f"mode {scenario.mode.value}", f"algorithm {scenario.algorithm}"]
    for agent in scenario.agents:
        suffix = " adversary" if agent == scenario.adversary else ""
        out.append(f"agent {agent}{suffix}")
    rendered_pairs = set()
    for key in scenario.keyspace.all_keys():
        inv = scenario.keyspace.inverse(key)
        if key == inv:
            out.append(f"key {key.id} symmetric")
        elif key.kind.value == "public" and (key.id, inv.id) not in rendered_pairs:
            out.append(f"key {key.id} public {inv.id}")
            rendered_pairs.add((key.id, inv.id))
    for fn in sorted(scenario.keymaps):
        for agent in sorted(scenario.keymaps[fn]):
            out.append(f"keymap {fn} {agent} {scenario.keymaps[fn][agent].id}")
    pool_atoms = {a.id for pool in scenario.pools.values() for a in pool}
    ddg_bits = {a.id for a in scenario.ddg.bit_atoms} if scenario.ddg else set()
    plain_atoms = sorted(scenario.atoms - pool_atoms - ddg_bits)
    if plain_atoms:
        out.append("atom " + " ".join(plain_atoms))
    for agent in scenario.agents:
        keys = scenario.initkeys.get(agent, frozenset())
        if keys:
            out.append(f"initkeys {agent} " + " ".join(sorted(k.id for k in keys)))
    for agent in sorted(scenario.pools):
        out.append(f"pool {agent} " + " ".join(a.id for a in scenario.pools[agent]))
    bounds = scenario.bounds
    bound_bits = [f"bounds steps {bounds.max_steps}"]
    if bounds.adversary_sends is not None:
        bound_bits.append(f"adv-sends {bounds.adversary_sends}")
    defaults = Bounds()
    if bounds.state_budget != defaults.state_budget:
        bound_bits.append(f"state-budget {bounds.state_budget}")
    out.append(" ".join(bound_bits))
    if scenario.lowe_literal_a:
        out.append("option lowe-literal-a")
    if scenario.ddg:
        out.append(f"ddg key {scenario.ddg.target_key.id}")
        out.append("ddg bits " + " ".join(a.id for a in scenario.ddg.bit_atoms))
    for role in scenario.roles:
        header = f"role {role.name} {role.agent}"
        if role.sessions != 1:
            header += f" sessions {role.sessions}"
        out.append(header)
        for var in role.vars:
            if var.name in role.fresh:
                continue
            decl = f"  var {var.name} {var.sort.value}"
            if var.choices:
                decl += " choices " + " ".join(var.choices)
            out.append(decl)
        for name in role.fresh:
            out.append(f"  fresh {name}")
        for step in role.steps:
            if isinstance(step, SendStep):
                out.append(f"  send {step.dest} {render_template(step.template)}")
            else:
                out.append(f"  recv {render_template(step.template)}")
    for query in scenario.queries:
        line = f"query {query.quantifier} {render_formula(query.formula)}"
        if query.expected is not None:
            line += f" expect {'true' if query.expected else 'false'}"
        out.append(line)
    if scenario.soundness:
        out.append("soundness " + " ".join(render_formula(f) for f in scenario.soundness))
    return "\n".join(out) + "\n"
