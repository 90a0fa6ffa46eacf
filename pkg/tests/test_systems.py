import json

import pytest

from protoscope.adversaries import AlgorithmConfig, default_registry
from protoscope.histories import History, Recv, Send
from protoscope.systems import (
    AdversaryMode,
    AdversarySpec,
    Bounds,
    BoundExceededError,
    GlobalState,
    Point,
    ProtocolError,
    ProtocolSpec,
    RecvStep,
    RoleSpec,
    SendStep,
    System,
    VarDecl,
    can_construct,
    check_active_insider,
    check_mp,
    check_outsider,
    check_passive,
    generate_system,
    system_to_json_dict,
    validate_protocol,
)
from protoscope.templates import TConst, TemplateContext, TVar, VarSort
from protoscope.terms import Atom, KeySpace, conc, encr
from protoscope.workbench import build_system, corpus_scenario


def _simple_context():
    ks = KeySpace()
    return TemplateContext(keys=ks, agents=frozenset({"A", "B", "E"}), keymaps={}), ks


def _one_send_protocol():
    """A sends the atom x to B; E eavesdrops."""
    ctx, ks = _simple_context()
    role = RoleSpec(name="talk", agent="A", steps=(SendStep("B", TConst(Atom("x"))),))
    return ProtocolSpec(roles=(role,), pools={}, context=ctx), ks


def _dy(ks, owner="E"):
    return default_registry().build("dolev-yao", owner, ks, AlgorithmConfig())


def test_one_role_passive_generation():
    protocol, ks = _one_send_protocol()
    adv = AdversarySpec("E", AdversaryMode.PASSIVE, "dolev-yao")
    system = generate_system(protocol, adv, Bounds(max_steps=6), {})
    assert len(system.runs) == 1
    run = system.runs[0]
    # time 0 empty, send+copy at time 1
    assert run[0].histories["A"].events == ()
    assert run[1].histories["A"].events == (Send("B", Atom("x")),)
    assert run[1].histories["E"].events == (Recv(Atom("x")),)
    # P1: the adversary never sends
    assert all(
        not isinstance(e, Send)
        for state in run
        for e in state.histories["E"].events
    )
    assert check_mp(system) == []
    assert check_passive(system, "E") == []


def test_generation_is_deterministic():
    scenario = corpus_scenario("ns")
    first, _ = build_system(scenario)
    second, _ = build_system(scenario)
    assert system_to_json_dict(first) == system_to_json_dict(second)


def test_generated_insider_system_passes_checks():
    scenario = corpus_scenario("ns")
    system, alg = build_system(scenario)
    assert check_mp(system) == []
    assert check_active_insider(system, "E", alg) == []


def test_generated_outsider_system_passes_checks():
    scenario = corpus_scenario("nsl")
    system, alg = build_system(scenario, mode="outsider")
    assert check_mp(system) == []
    assert check_outsider(system, "E", alg) == []


def test_state_budget_diagnostic():
    scenario = corpus_scenario("ns")
    scenario.bounds = Bounds(max_steps=12, adversary_sends=2, state_budget=10)
    with pytest.raises(BoundExceededError) as err:
        build_system(scenario)
    assert err.value.bound == "state_budget"


def test_truncation_at_step_bound():
    scenario = corpus_scenario("ddg")
    scenario.bounds = Bounds(max_steps=3)
    system, _ = build_system(scenario)
    assert system.truncated_runs == len(system.runs) == 1
    assert len(system.runs[0]) == 4


def test_ill_formed_template_rejected():
    ctx, ks = _simple_context()
    dangling = RoleSpec(
        name="bad",
        agent="A",
        vars=(VarDecl("x", VarSort.ATOM),),
        steps=(SendStep("B", TVar("x", VarSort.ATOM)),),
    )
    with pytest.raises(ProtocolError):
        validate_protocol(ProtocolSpec(roles=(dangling,), pools={}, context=ctx))


# --- can_construct ----------------------------------------------------------


def test_can_construct_examples():
    ks = KeySpace()
    kb, kb_inv = ks.add_pair("kB", "kB_inv")
    n_b = Atom("nB")
    alg = _dy(ks, owner="E")
    # both parts extractable: one encryption step away
    ell = History(frozenset({kb}), (Recv(n_b),))
    assert can_construct(encr(n_b, kb), ell, alg)
    # the nonce hides under a key the agent cannot invert
    boxed = History(frozenset(), (Recv(encr(n_b, kb)),))
    assert not can_construct(n_b, boxed, alg)
    # but the whole ciphertext replays as received
    assert can_construct(encr(n_b, kb), boxed, alg)
    # pairs need both halves
    assert not can_construct(conc(n_b, Atom("other")), ell, alg)
    assert can_construct(conc(n_b, n_b), ell, alg)


# --- validators on hand-built systems ---------------------------------------


def _mini_system(histories_by_time, mode=AdversaryMode.PASSIVE):
    """Build a one-run system from {agent: [events at t0, t1, ...]} where
    each entry is the FULL event tuple at that time."""
    ks = KeySpace()
    agents = tuple(sorted(histories_by_time))
    times = max(len(v) for v in histories_by_time.values())
    states = []
    for t in range(times):
        hist = {
            agent: History(frozenset(), tuple(histories_by_time[agent][t]))
            for agent in agents
        }
        states.append(GlobalState((), hist))
    return System(
        runs=(tuple(states),),
        agents=agents,
        adversary="E",
        mode=mode,
        keyspace=ks,
    )


X = Atom("x")


def test_check_mp_flags_unmatched_recv():
    system = _mini_system({"A": [[], [Recv(X)]], "E": [[], []]})
    clauses = {v.clause for v in check_mp(system)}
    assert clauses == {"MP2"}


def test_check_mp_flags_shrinking_history():
    # the receive event vanishes between t1 and t2; the send stays matched
    system = _mini_system(
        {"A": [[], [Send("E", X)], [Send("E", X)]], "E": [[], [Recv(X)], []]}
    )
    clauses = {v.clause for v in check_mp(system)}
    assert clauses == {"MP3"}


def test_check_mp_flags_nonempty_start():
    system = _mini_system({"A": [[Send("B", X)]], "E": [[Recv(X)]]})
    assert {v.clause for v in check_mp(system)} == {"MP3"}


def test_check_passive_flags_adversary_send():
    system = _mini_system({"A": [[], []], "E": [[], [Send("A", X)]]})
    clauses = {v.clause for v in check_passive(system, "E")}
    assert clauses == {"P1"}


def test_check_passive_flags_missing_copy():
    system = _mini_system({"A": [[], [Send("B", X)]], "B": [[], []], "E": [[], []]})
    clauses = {v.clause for v in check_passive(system, "E")}
    assert clauses == {"P2"}


def test_check_insider_flags_unconstructible_send():
    system = _mini_system(
        {"A": [[], []], "E": [[], [Send("A", X)]]}, mode=AdversaryMode.INSIDER
    )
    alg = _dy(system.keyspace)
    clauses = {v.clause for v in check_active_insider(system, "E", alg)}
    assert clauses == {"A2"}


def test_check_insider_flags_ghost_recv():
    system = _mini_system(
        {"A": [[], []], "E": [[], [Recv(X)]]}, mode=AdversaryMode.INSIDER
    )
    alg = _dy(system.keyspace)
    clauses = {v.clause for v in check_active_insider(system, "E", alg)}
    assert clauses == {"A1"}


def test_check_outsider_flags_message_to_adversary():
    # A's send to E is copied into E's state so only A3 trips
    system = _mini_system(
        {"A": [[], [Send("E", X)]], "E": [[], [Recv(X)]]}, mode=AdversaryMode.OUTSIDER
    )
    alg = _dy(system.keyspace)
    clauses = {v.clause for v in check_outsider(system, "E", alg)}
    assert clauses == {"A3"}


def test_system_export_schema():
    protocol, ks = _one_send_protocol()
    adv = AdversarySpec("E", AdversaryMode.PASSIVE, "dolev-yao")
    system = generate_system(protocol, adv, Bounds(max_steps=6), {})
    doc = system_to_json_dict(system)
    assert doc["schema"] == 1
    assert doc["agents"] == ["A", "B", "E"]
    run = doc["runs"][0]
    assert run["states"][0]["time"] == 0
    assert run["states"][1]["agents"]["A"]["events"] == [
        {"kind": "send", "to": "B", "msg": "x"}
    ]
    json.dumps(doc)  # serializable as-is
