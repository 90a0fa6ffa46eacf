"""Knowledge algorithms: the contract, the built-ins, and the registry.

A knowledge algorithm is an agent's procedure for deciding formulas from
its own local state.  Algorithms are immutable once built and their
``evaluate`` is a pure function of (formula, history), so concurrent
evaluation needs no coordination.  Answers per history are cached because
evaluation sweeps ask about the same local state over and over.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Callable, Optional

from .answers import KnowledgeAnswer, answer_from_bool, evaluate_propositional
from .dolevyao import dy_has_answer
from .formulas import Formula
from .histories import History
from .lowe import ValidatorFound, lowe_evaluate
from .terms import Atom, Key, KeySpace, Message, submessage


@dataclass(frozen=True)
class KnowledgeAlgorithm:
    """A named, owner-bound decision procedure over the owner's histories."""

    name: str
    owner: str
    evaluate: Callable[[Formula, History], KnowledgeAnswer]


@dataclass(frozen=True)
class DdgConfig:
    """Which key the Duck-Duck-Goose listener is reassembling, and the atoms
    that stand for its bits, in order."""

    target_key: Key
    bit_atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.bit_atoms:
            raise ValueError("ddg needs at least one bit atom")
        if len(set(self.bit_atoms)) != len(self.bit_atoms):
            raise ValueError("ddg bit atoms must be pairwise distinct")

    @property
    def bit_count(self) -> int:
        return len(self.bit_atoms)


def make_dolev_yao(owner: str, keys: KeySpace) -> KnowledgeAlgorithm:
    deciders: dict[History, Callable[[Message], KnowledgeAnswer]] = {}

    def evaluate(formula: Formula, history: History) -> KnowledgeAnswer:
        decide = deciders.get(history)
        if decide is None:
            decide = deciders[history] = dy_has_answer(history, keys)
        return evaluate_propositional(formula, owner, decide)

    return KnowledgeAlgorithm("dolev-yao", owner, evaluate)


def make_lowe(
    owner: str,
    keys: KeySpace,
    literal_clause_a: bool = False,
    debug_sink: Optional[list[ValidatorFound]] = None,
) -> KnowledgeAlgorithm:
    cache: dict[tuple[Formula, History], KnowledgeAnswer] = {}

    def evaluate(formula: Formula, history: History) -> KnowledgeAnswer:
        key = (formula, history)
        if key not in cache:
            cache[key] = lowe_evaluate(
                formula, history, owner, keys, literal_clause_a, debug_sink
            )
        return cache[key]

    return KnowledgeAlgorithm("lowe", owner, evaluate)


def make_ddg(owner: str, keys: KeySpace, config: DdgConfig) -> KnowledgeAlgorithm:
    """Yes on the target key exactly when every bit atom has shown up in
    some received message; No on the owner's other has-queries; Unknown
    elsewhere, like the other adversary algorithms."""

    def evaluate(formula: Formula, history: History) -> KnowledgeAnswer:
        received = history.received()

        def own_has(m: Message) -> KnowledgeAnswer:
            if m != config.target_key:
                return KnowledgeAnswer.NO
            return answer_from_bool(
                all(
                    any(submessage(bit, got) for got in received)
                    for bit in config.bit_atoms
                )
            )

        return evaluate_propositional(formula, owner, own_has)

    return KnowledgeAlgorithm("ddg", owner, evaluate)


def combine(first: KnowledgeAlgorithm, second: KnowledgeAlgorithm) -> KnowledgeAlgorithm:
    """Yes when the first algorithm says Yes, otherwise whatever the second
    says — including overriding a first-algorithm No."""
    if first.owner != second.owner:
        raise ValueError(
            f"cannot combine algorithms with different owners: "
            f"{first.owner!r} vs {second.owner!r}"
        )

    def evaluate(formula: Formula, history: History) -> KnowledgeAnswer:
        answer = first.evaluate(formula, history)
        if answer is KnowledgeAnswer.YES:
            return answer
        return second.evaluate(formula, history)

    return KnowledgeAlgorithm(f"{first.name}+{second.name}", first.owner, evaluate)


@dataclass(frozen=True)
class AlgorithmConfig:
    """Scenario-supplied knobs consumed by algorithm builders."""

    ddg: Optional[DdgConfig] = None
    lowe_literal_clause_a: bool = False
    lowe_debug_sink: Optional[list[ValidatorFound]] = None


class UnknownAlgorithmError(KeyError):
    def __init__(self, name: str, available: list[str]):
        hint = ""
        close = difflib.get_close_matches(name, available, n=2)
        if close:
            hint = f" (did you mean {' or '.join(repr(c) for c in close)}?)"
        super().__init__(
            f"unknown knowledge algorithm {name!r}; available: "
            f"{', '.join(available)}{hint}"
        )
        self.name = name
        self.available = available


Builder = Callable[[str, KeySpace, AlgorithmConfig], KnowledgeAlgorithm]


class AlgorithmRegistry:
    """Named builders; a scenario binds one to its adversary."""

    def __init__(self):
        self._builders: dict[str, Builder] = {}

    def register(self, name: str, builder: Builder) -> None:
        self._builders[name] = builder

    def names(self) -> list[str]:
        return sorted(self._builders)

    def lookup(self, name: str) -> Builder:
        try:
            return self._builders[name]
        except KeyError:
            raise UnknownAlgorithmError(name, self.names()) from None

    def build(
        self, name: str, owner: str, keys: KeySpace, config: AlgorithmConfig
    ) -> KnowledgeAlgorithm:
        return self.lookup(name)(owner, keys, config)


def _build_dy(owner: str, keys: KeySpace, config: AlgorithmConfig) -> KnowledgeAlgorithm:
    return make_dolev_yao(owner, keys)


def _build_lowe(owner: str, keys: KeySpace, config: AlgorithmConfig) -> KnowledgeAlgorithm:
    return make_lowe(
        owner, keys, config.lowe_literal_clause_a, config.lowe_debug_sink
    )


def _require_ddg(config: AlgorithmConfig) -> DdgConfig:
    if config.ddg is None:
        raise ValueError("the ddg algorithm needs a ddg key/bits configuration")
    return config.ddg


def _build_ddg(owner: str, keys: KeySpace, config: AlgorithmConfig) -> KnowledgeAlgorithm:
    return make_ddg(owner, keys, _require_ddg(config))


def _build_dy_ddg(owner: str, keys: KeySpace, config: AlgorithmConfig) -> KnowledgeAlgorithm:
    combined = combine(make_dolev_yao(owner, keys), make_ddg(owner, keys, _require_ddg(config)))
    return KnowledgeAlgorithm("dy+ddg", owner, combined.evaluate)


def default_registry() -> AlgorithmRegistry:
    registry = AlgorithmRegistry()
    registry.register("dolev-yao", _build_dy)
    registry.register("lowe", _build_lowe)
    registry.register("ddg", _build_ddg)
    registry.register("dy+ddg", _build_dy_ddg)
    return registry
