import json

import pytest

from protoscope.corpus import UnknownCorpusError
from protoscope.workbench import (
    corpus_list,
    corpus_run,
    corpus_scenario,
    dump_system_json,
    run_scenario,
)


def _stable(report_dict):
    out = dict(report_dict)
    out.pop("generated_at")
    return out


def test_corpus_list():
    assert corpus_list() == ["challenge", "ddg", "ns", "nsl"]


def test_unknown_corpus_name():
    with pytest.raises(UnknownCorpusError):
        corpus_run("nope")


def test_report_deterministic_modulo_timestamp():
    first = corpus_run("challenge", debug_lowe=True).to_json_dict()
    second = corpus_run("challenge", debug_lowe=True).to_json_dict()
    assert _stable(first) == _stable(second)
    json.dumps(first)


def test_exists_verdict_carries_witness():
    report = corpus_run("challenge")
    query = report.queries[0]
    assert query.verdict is True and query.witness is not None
    assert report.exit_code == 0


def test_expectation_mismatch_sets_exit_code():
    report = corpus_run("challenge", algorithm="dolev-yao")
    assert report.queries[0].verdict is False
    assert report.exit_code == 1


def test_forall_query_counterexample():
    scenario = corpus_scenario("challenge")
    from protoscope.scenario import Query
    from protoscope.formulas import parse_formula

    formula = parse_formula(
        "has(E,ns)", scenario.keyspace, scenario.agents, scenario.atoms | set(scenario.agents)
    )
    scenario.queries = (Query("forall", formula, None),)
    report = run_scenario(scenario)
    query = report.queries[0]
    # at time 0 nothing is received yet
    assert query.verdict is False and query.counterexample is not None
    assert report.exit_code == 1  # undeclared forall defaults to expecting true


def test_workers_do_not_change_the_report():
    base = run_scenario(corpus_scenario("nsl"), workers=1).to_json_dict()
    threaded = run_scenario(corpus_scenario("nsl"), workers=4).to_json_dict()
    assert _stable(base) == _stable(threaded)


def test_workers_env_var(monkeypatch):
    monkeypatch.setenv("PROTOSCOPE_WORKERS", "3")
    report = run_scenario(corpus_scenario("challenge"))
    assert report.exit_code == 0


def test_debug_validators_deduplicated():
    report = corpus_run("challenge", debug_lowe=True)
    assert len(report.lowe_debug) == len(set(report.lowe_debug))
    found = report.lowe_debug[0]
    assert found.clause == "b" and found.tag.value == "enc"


def test_dump_system_json():
    scenario = corpus_scenario("ddg")
    doc = json.loads(dump_system_json(scenario))
    assert doc["schema"] == 1
    assert doc["mode"] == "passive"
    assert len(doc["runs"]) == 1


def test_report_json_shape():
    doc = corpus_run("nsl").to_json_dict()
    assert doc["schema"] == 1
    assert doc["scenario"]["name"] == "nsl"
    assert doc["system"]["runs"] > 0
    assert doc["validators"] == {"mp": [], "adversary": []}
    assert doc["queries"][0]["formula"] == "X(E,has(E,nB1))"
    assert doc["soundness"][0]["yes_violations"] == 0
    assert doc["soundness"][0]["no_violations"] > 0
