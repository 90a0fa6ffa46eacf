"""Request and response models for the analysis service.

Response models mirror the report JSON produced by the workbench, so the
service boundary double-checks the shape of everything it returns.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class CheckRequest(BaseModel):
    scenario_text: str
    algorithm: Optional[str] = None
    mode: Optional[Literal["passive", "insider", "outsider"]] = None
    debug_lowe: bool = False


class RunOptions(BaseModel):
    algorithm: Optional[str] = None
    mode: Optional[Literal["passive", "insider", "outsider"]] = None
    debug_lowe: bool = False


class PointModel(BaseModel):
    run: int
    time: int


class QueryResultModel(BaseModel):
    quantifier: Literal["exists", "forall"]
    formula: str
    verdict: bool
    expected: Optional[bool]
    ok: bool
    witness: Optional[PointModel]
    counterexample: Optional[PointModel]


class ScenarioEchoModel(BaseModel):
    name: str
    mode: str
    algorithm: str
    agents: list[str]
    adversary: str
    bounds: dict


class SystemStatsModel(BaseModel):
    runs: int
    points: int
    truncated_runs: int


class ValidatorsModel(BaseModel):
    mp: list[str]
    adversary: list[str]


class SoundnessCounterexampleModel(BaseModel):
    run: int
    time: int
    formula: str


class SoundnessModel(BaseModel):
    agent: str
    points_checked: int
    yes_answers: int
    yes_violations: int
    yes_counterexamples: list[SoundnessCounterexampleModel]
    no_answers: int
    no_violations: int
    no_counterexamples: list[SoundnessCounterexampleModel]


class LoweDebugModel(BaseModel):
    guess: str
    premises: list[str]
    tag: Literal["enc", "dec", "fst", "snd"]
    conclusion: str
    clause: Literal["a", "b", "c"]


class ReportModel(BaseModel):
    schema_version: int = Field(alias="schema")
    generated_at: str
    scenario: ScenarioEchoModel
    system: SystemStatsModel
    validators: ValidatorsModel
    queries: list[QueryResultModel]
    soundness: list[SoundnessModel]
    lowe_debug: list[LoweDebugModel]
    exit_code: int

    model_config = {"populate_by_name": True}


class DiagnosticModel(BaseModel):
    line: int
    message: str


class ErrorResponse(BaseModel):
    detail: str
    diagnostics: list[DiagnosticModel] = []
