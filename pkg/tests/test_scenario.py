import pytest

from protoscope.corpus import corpus_names, corpus_text
from protoscope.scenario import (
    ScenarioError,
    parse_scenario,
    render_scenario,
)
from protoscope.systems import AdversaryMode


def test_corpus_files_parse():
    for name in corpus_names():
        scenario = parse_scenario(corpus_text(name))
        assert scenario.name == name
        assert scenario.adversary in scenario.agents


def test_nsl_structure():
    scenario = parse_scenario(corpus_text("nsl"))
    assert scenario.agents == ("A", "B", "E")
    assert scenario.adversary == "E"
    assert scenario.mode is AdversaryMode.INSIDER
    assert scenario.algorithm == "dolev-yao"
    assert len(scenario.roles) == 2
    assert scenario.bounds.max_steps == 12
    assert scenario.queries[0].expected is False


def test_round_trip_fixpoint():
    for name in corpus_names():
        original = parse_scenario(corpus_text(name))
        rendered = render_scenario(original)
        reparsed = parse_scenario(rendered)
        assert render_scenario(reparsed) == rendered
        assert reparsed.agents == original.agents
        assert reparsed.mode == original.mode
        assert reparsed.queries == original.queries
        assert [r.name for r in reparsed.roles] == [r.name for r in original.roles]


def test_unknown_algorithm_diagnosed_at_run_time():
    # parsing keeps the name; the registry rejects it with suggestions
    from protoscope.adversaries import UnknownAlgorithmError
    from protoscope.workbench import run_scenario

    scenario = parse_scenario(corpus_text("challenge").replace("algorithm lowe", "algorithm rot13"))
    with pytest.raises(UnknownAlgorithmError):
        run_scenario(scenario)


def test_diagnostics_carry_line_numbers():
    bad = "\n".join(
        [
            "scenario broken",
            "agent A adversary",
            "key kA public",  # missing inverse id
            "initkeys A kZ",  # unknown key
            "bounds steps -3",
            "role ghost Z",  # unknown agent
            "query sometimes has(A,x)",  # bad quantifier
        ]
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(bad)
    lines = {d.line for d in err.value.diagnostics}
    assert {3, 4, 5, 6, 7} <= lines


def test_duplicate_and_clashing_identifiers():
    bad = "\n".join(
        [
            "scenario broken",
            "agent A",
            "agent A adversary",
            "key A symmetric",
        ]
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(bad)
    messages = " | ".join(d.message for d in err.value.diagnostics)
    assert "declared twice" in messages
    assert "more than one kind" in messages


def test_missing_adversary_is_an_error():
    with pytest.raises(ScenarioError) as err:
        parse_scenario("scenario x\nagent A\n")
    assert any("adversary" in d.message for d in err.value.diagnostics)


def test_role_variable_shadowing_rejected():
    bad = "\n".join(
        [
            "scenario shadow",
            "agent A",
            "agent E adversary",
            "atom x",
            "role r A",
            "  var x atom",
            "  send E x",
        ]
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(bad)
    assert any("shadows" in d.message for d in err.value.diagnostics)


def test_send_before_binding_rejected():
    bad = "\n".join(
        [
            "scenario dangling",
            "agent A",
            "agent E adversary",
            "role r A",
            "  var x atom",
            "  send E x",
        ]
    )
    from protoscope.systems import ProtocolError
    from protoscope.workbench import run_scenario

    scenario = parse_scenario(bad)
    with pytest.raises(ProtocolError):
        run_scenario(scenario)
