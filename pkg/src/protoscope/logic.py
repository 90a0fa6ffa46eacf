"""Evaluating queries against a generated system.

Primitives read an agent's history at a point.  ``Know`` quantifies over
every point of the system whose local state the agent cannot tell apart
from the current one — relative to the generated, bounded system, which is
the only thing that is mechanically checkable.  ``CanCompute`` runs the
agent's knowledge algorithm on its local state and is true exactly on Yes.

The soundness checker compares an algorithm's Yes/No answers against the
``Know`` modality in both directions and reports counterexamples, because
the two directions fail differently: Yes-soundness is a theorem for the
built-in algorithms, while No-soundness breaks wherever implicit knowledge
outruns what the algorithm can compute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .adversaries import KnowledgeAlgorithm
from .answers import KnowledgeAnswer
from .formulas import And, CanCompute, Formula, Has, Know, Not, Prim, Primitive, Received, Sent, render_formula
from .histories import History, Recv, Send
from .systems import Point, System
from .terms import submessage


class UnknownPointError(KeyError):
    pass


class UnregisteredAlgorithmError(KeyError):
    pass


class Evaluator:
    """Caches per-system evaluation state: the indistinguishability classes
    per agent and the truth of Know per (local state, formula)."""

    def __init__(
        self, system: System, algorithms: Mapping[str, KnowledgeAlgorithm] = ()
    ):
        self.system = system
        self.algorithms = dict(algorithms or {})
        self._classes: dict[str, dict[History, list[Point]]] = {}
        self._know_cache: dict[tuple[str, History, Formula], bool] = {}
        self._prim_cache: dict[tuple[History, Primitive], bool] = {}

    def _check_point(self, pt: Point) -> None:
        if not (0 <= pt.run < len(self.system.runs)):
            raise UnknownPointError(f"no run {pt.run}")
        if not (0 <= pt.time < len(self.system.runs[pt.run])):
            raise UnknownPointError(f"no time {pt.time} in run {pt.run}")

    def local_state(self, pt: Point, agent: str) -> History:
        self._check_point(pt)
        return self.system.history(pt, agent)

    def classes_for(self, agent: str) -> dict[History, list[Point]]:
        if agent not in self._classes:
            classes: dict[History, list[Point]] = {}
            for pt in self.system.points():
                classes.setdefault(self.system.history(pt, agent), []).append(pt)
            self._classes[agent] = classes
        return self._classes[agent]

    def eval_prim(self, pt: Point, prim: Primitive) -> bool:
        history = self.local_state(pt, prim.agent)
        key = (history, prim)
        cached = self._prim_cache.get(key)
        if cached is None:
            cached = self._prim_cache[key] = _prim_holds(history, prim)
        return cached

    def indistinguishable(self, p1: Point, p2: Point, agent: str) -> bool:
        return self.local_state(p1, agent) == self.local_state(p2, agent)

    def evaluate(self, pt: Point, formula: Formula) -> bool:
        self._check_point(pt)
        if isinstance(formula, Prim):
            return self.eval_prim(pt, formula.prim)
        if isinstance(formula, Not):
            return not self.evaluate(pt, formula.inner)
        if isinstance(formula, And):
            return self.evaluate(pt, formula.left) and self.evaluate(pt, formula.right)
        if isinstance(formula, Know):
            history = self.local_state(pt, formula.agent)
            key = (formula.agent, history, formula.inner)
            cached = self._know_cache.get(key)
            if cached is None:
                peers = self.classes_for(formula.agent)[history]
                cached = all(self.evaluate(p, formula.inner) for p in peers)
                self._know_cache[key] = cached
            return cached
        if isinstance(formula, CanCompute):
            algorithm = self.algorithms.get(formula.agent)
            if algorithm is None:
                raise UnregisteredAlgorithmError(
                    f"agent {formula.agent!r} has no registered knowledge algorithm"
                )
            history = self.local_state(pt, formula.agent)
            return algorithm.evaluate(formula.inner, history) is KnowledgeAnswer.YES
        raise TypeError(f"not a formula: {formula!r}")


def _prim_holds(history: History, prim: Primitive) -> bool:
    if isinstance(prim, Sent):
        return any(
            isinstance(e, Send) and e.payload == prim.message for e in history.events
        )
    if isinstance(prim, Received):
        return any(
            isinstance(e, Recv) and e.payload == prim.message for e in history.events
        )
    if isinstance(prim, Has):
        return any(submessage(prim.message, got) for got in history.received())
    raise TypeError(f"not a primitive: {prim!r}")


def eval_prim(system: System, pt: Point, prim: Primitive) -> bool:
    return Evaluator(system).eval_prim(pt, prim)


def indistinguishable(system: System, p1: Point, p2: Point, agent: str) -> bool:
    return Evaluator(system).indistinguishable(p1, p2, agent)


def evaluate(
    system: System,
    pt: Point,
    formula: Formula,
    algorithms: Mapping[str, KnowledgeAlgorithm] = (),
) -> bool:
    return Evaluator(system, algorithms).evaluate(pt, formula)


@dataclass
class SoundnessReport:
    """Per-direction tallies of an algorithm's agreement with Know."""

    agent: str
    points_checked: int = 0
    yes_answers: int = 0
    yes_violations: list[tuple[Point, Formula]] = field(default_factory=list)
    no_answers: int = 0
    no_violations: list[tuple[Point, Formula]] = field(default_factory=list)

    @property
    def yes_sound(self) -> bool:
        return not self.yes_violations

    @property
    def no_sound(self) -> bool:
        return not self.no_violations

    def to_json_dict(self) -> dict:
        def examples(violations):
            return [
                {"run": pt.run, "time": pt.time, "formula": render_formula(f)}
                for pt, f in violations[:5]
            ]

        return {
            "agent": self.agent,
            "points_checked": self.points_checked,
            "yes_answers": self.yes_answers,
            "yes_violations": len(self.yes_violations),
            "yes_counterexamples": examples(self.yes_violations),
            "no_answers": self.no_answers,
            "no_violations": len(self.no_violations),
            "no_counterexamples": examples(self.no_violations),
        }


def check_soundness(
    evaluator: Evaluator, agent: str, formulas: Iterable[Formula]
) -> SoundnessReport:
    """For every point and formula: Yes must imply Know, No must imply the
    negation of Know.  Unknown answers claim nothing and are skipped."""
    algorithm = evaluator.algorithms.get(agent)
    if algorithm is None:
        raise UnregisteredAlgorithmError(
            f"agent {agent!r} has no registered knowledge algorithm"
        )
    report = SoundnessReport(agent=agent)
    formulas = list(formulas)
    for pt in evaluator.system.points():
        history = evaluator.system.history(pt, agent)
        report.points_checked += 1
        for formula in formulas:
            answer = algorithm.evaluate(formula, history)
            if answer is KnowledgeAnswer.YES:
                report.yes_answers += 1
                if not evaluator.evaluate(pt, Know(agent, formula)):
                    report.yes_violations.append((pt, formula))
            elif answer is KnowledgeAnswer.NO:
                report.no_answers += 1
                if evaluator.evaluate(pt, Know(agent, formula)):
                    report.no_violations.append((pt, formula))
    return report
