"""Three-valued answers produced by knowledge algorithms.

An algorithm answers Yes, No, or Unknown ("?", insufficient resources to
decide).  Negation and conjunction combine answers pointwise: the negation
of ? is ?, No wins a conjunction, and Yes-and-? is ?.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable

from .formulas import And, CanCompute, Formula, Has, Know, Not, Prim


class KnowledgeAnswer(Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "?"

    def __str__(self) -> str:
        return self.value


YES = KnowledgeAnswer.YES
NO = KnowledgeAnswer.NO
UNKNOWN = KnowledgeAnswer.UNKNOWN


def answer_not(a: KnowledgeAnswer) -> KnowledgeAnswer:
    if a is YES:
        return NO
    if a is NO:
        return YES
    return UNKNOWN


def answer_and(a: KnowledgeAnswer, b: KnowledgeAnswer) -> KnowledgeAnswer:
    if a is NO or b is NO:
        return NO
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return YES


def answer_from_bool(b: bool) -> KnowledgeAnswer:
    return YES if b else NO


def evaluate_propositional(
    formula: Formula,
    owner: str,
    own_has: Callable[[object], KnowledgeAnswer],
) -> KnowledgeAnswer:
    """Shared algorithm skeleton for the adversary models.

    Only the owner's has-primitive carries information; ``own_has`` decides
    it from the owner's local state.  Every other primitive and every
    modality is Unknown, and Boolean structure combines three-valued.
    """
    if isinstance(formula, Prim):
        p = formula.prim
        if isinstance(p, Has) and p.agent == owner:
            return own_has(p.message)
        return UNKNOWN
    if isinstance(formula, Not):
        return answer_not(evaluate_propositional(formula.inner, owner, own_has))
    if isinstance(formula, And):
        return answer_and(
            evaluate_propositional(formula.left, owner, own_has),
            evaluate_propositional(formula.right, owner, own_has),
        )
    if isinstance(formula, (Know, CanCompute)):
        return UNKNOWN
    raise TypeError(f"not a formula: {formula!r}")
