"""Run a scenario end to end and assemble the report.

The pipeline is: resolve the adversary's algorithm from the registry,
generate the bounded system, re-validate it with the structural checkers,
evaluate every query, and run the soundness comparison for the formulas
the scenario asks about.  Reports are deterministic for a given scenario
and overrides; the only field that changes between runs is the timestamp.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

from .adversaries import (
    AlgorithmConfig,
    AlgorithmRegistry,
    KnowledgeAlgorithm,
    default_registry,
)
from .corpus import corpus_names, corpus_text
from .formulas import Formula, render_formula
from .logic import Evaluator, check_soundness
from .lowe import ValidatorFound
from .scenario import Query, Scenario, parse_scenario
from .systems import (
    AdversaryMode,
    Point,
    System,
    check_active_insider,
    check_mp,
    check_outsider,
    check_passive,
    generate_system,
    system_to_json_dict,
)

WORKERS_ENV_VAR = "PROTOSCOPE_WORKERS"
REPORT_SCHEMA = 1


@dataclass(frozen=True)
class QueryResult:
    quantifier: str
    formula: Formula
    verdict: bool
    expected: Optional[bool]
    witness: Optional[Point]
    counterexample: Optional[Point]

    @property
    def ok(self) -> bool:
        """Whether this query keeps the exit code at zero.

        Declared expectations are compared directly; an undeclared forall
        query is expected to be true, an undeclared exists query merely
        informs.
        """
        if self.expected is not None:
            return self.verdict == self.expected
        return self.verdict if self.quantifier == "forall" else True

    def to_json_dict(self) -> dict:
        def point(pt: Optional[Point]):
            return None if pt is None else {"run": pt.run, "time": pt.time}

        return {
            "quantifier": self.quantifier,
            "formula": render_formula(self.formula),
            "verdict": self.verdict,
            "expected": self.expected,
            "ok": self.ok,
            "witness": point(self.witness),
            "counterexample": point(self.counterexample),
        }


@dataclass
class Report:
    scenario_name: str
    mode: str
    algorithm: str
    agents: tuple[str, ...]
    adversary: str
    bounds: dict
    run_count: int
    point_count: int
    truncated_runs: int
    mp_violations: list[str]
    mode_violations: list[str]
    queries: list[QueryResult]
    soundness: list[dict]
    lowe_debug: list[ValidatorFound] = field(default_factory=list)
    generated_at: str = ""

    @property
    def exit_code(self) -> int:
        return 0 if all(q.ok for q in self.queries) else 1

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "generated_at": self.generated_at,
            "scenario": {
                "name": self.scenario_name,
                "mode": self.mode,
                "algorithm": self.algorithm,
                "agents": list(self.agents),
                "adversary": self.adversary,
                "bounds": self.bounds,
            },
            "system": {
                "runs": self.run_count,
                "points": self.point_count,
                "truncated_runs": self.truncated_runs,
            },
            "validators": {
                "mp": self.mp_violations,
                "adversary": self.mode_violations,
            },
            "queries": [q.to_json_dict() for q in self.queries],
            "soundness": self.soundness,
            "lowe_debug": [v.to_json_dict() for v in self.lowe_debug],
            "exit_code": self.exit_code,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _evaluate_points(
    evaluator: Evaluator, formula: Formula, points: list[Point], workers: int
) -> Iterable[tuple[Point, bool]]:
    if workers <= 1:
        for pt in points:
            yield pt, evaluator.evaluate(pt, formula)
        return
    # chunked so the scan below still short-circuits early in point order
    chunk = max(64, len(points) // (workers * 8) or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, len(points), chunk):
            block = points[start : start + chunk]
            results = list(pool.map(lambda pt: evaluator.evaluate(pt, formula), block))
            yield from zip(block, results)


def _run_query(
    evaluator: Evaluator, query: Query, points: list[Point], workers: int
) -> QueryResult:
    witness = counterexample = None
    if query.quantifier == "exists":
        verdict = False
        for pt, value in _evaluate_points(evaluator, query.formula, points, workers):
            if value:
                verdict, witness = True, pt
                break
    else:
        verdict = True
        for pt, value in _evaluate_points(evaluator, query.formula, points, workers):
            if not value:
                verdict, counterexample = False, pt
                break
    return QueryResult(
        query.quantifier, query.formula, verdict, query.expected, witness, counterexample
    )


def build_system(
    scenario: Scenario,
    registry: Optional[AlgorithmRegistry] = None,
    mode: Optional[str] = None,
    algorithm: Optional[str] = None,
    debug_sink: Optional[list[ValidatorFound]] = None,
) -> tuple[System, KnowledgeAlgorithm]:
    """Generate the scenario's system under optional mode/algorithm
    overrides; returns the system and the adversary's algorithm."""
    registry = registry or default_registry()
    effective_mode = AdversaryMode(mode) if mode else scenario.mode
    effective_algorithm = algorithm or scenario.algorithm
    config = AlgorithmConfig(
        ddg=scenario.ddg,
        lowe_literal_clause_a=scenario.lowe_literal_a,
        lowe_debug_sink=debug_sink,
    )
    alg = registry.build(
        effective_algorithm, scenario.adversary, scenario.keyspace, config
    )
    adv_spec = scenario.adversary_spec()
    adv_spec = type(adv_spec)(adv_spec.agent, effective_mode, effective_algorithm)
    system = generate_system(
        scenario.protocol(), adv_spec, scenario.bounds, scenario.initkeys, alg
    )
    return system, alg


def run_scenario(
    scenario: Scenario,
    registry: Optional[AlgorithmRegistry] = None,
    mode: Optional[str] = None,
    algorithm: Optional[str] = None,
    debug_lowe: bool = False,
    workers: Optional[int] = None,
) -> Report:
    debug_sink: Optional[list[ValidatorFound]] = [] if debug_lowe else None
    system, alg = build_system(scenario, registry, mode, algorithm, debug_sink)

    mp = [str(v) for v in check_mp(system)]
    if system.mode is AdversaryMode.PASSIVE:
        mode_violations = [str(v) for v in check_passive(system, system.adversary)]
    elif system.mode is AdversaryMode.INSIDER:
        mode_violations = [str(v) for v in check_active_insider(system, system.adversary, alg)]
    else:
        mode_violations = [str(v) for v in check_outsider(system, system.adversary, alg)]

    evaluator = Evaluator(system, {system.adversary: alg})
    points = list(system.points())
    workers_n = _worker_count(workers)
    results = [_run_query(evaluator, q, points, workers_n) for q in scenario.queries]

    soundness = []
    if scenario.soundness:
        report = check_soundness(evaluator, system.adversary, scenario.soundness)
        soundness.append(report.to_json_dict())

    seen: set = set()
    debug = []
    for found in debug_sink or []:
        if found not in seen:
            seen.add(found)
            debug.append(found)

    bounds = {
        "steps": scenario.bounds.max_steps,
        "adversary_sends": scenario.bounds.adversary_sends,
    }
    return Report(
        scenario_name=scenario.name,
        mode=system.mode.value,
        algorithm=alg.name if algorithm is None else algorithm,
        agents=system.agents,
        adversary=system.adversary,
        bounds=bounds,
        run_count=len(system.runs),
        point_count=system.point_count(),
        truncated_runs=system.truncated_runs,
        mp_violations=mp,
        mode_violations=mode_violations,
        queries=results,
        soundness=soundness,
        lowe_debug=debug,
        generated_at=datetime.now(timezone.utc).isoformat(),
    )


def corpus_list() -> list[str]:
    return corpus_names()


def corpus_scenario(name: str) -> Scenario:
    return parse_scenario(corpus_text(name))


def corpus_run(
    name: str,
    mode: Optional[str] = None,
    algorithm: Optional[str] = None,
    debug_lowe: bool = False,
    workers: Optional[int] = None,
) -> Report:
    return run_scenario(
        corpus_scenario(name),
        mode=mode,
        algorithm=algorithm,
        debug_lowe=debug_lowe,
        workers=workers,
    )


def dump_system_json(scenario: Scenario, mode: Optional[str] = None, algorithm: Optional[str] = None) -> str:
    system, _ = build_system(scenario, mode=mode, algorithm=algorithm)
    return json.dumps(system_to_json_dict(system), indent=2, sort_keys=True)
