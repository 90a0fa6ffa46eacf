"""The Dolev-Yao adversary: extraction-only derivation and its algorithm.

Two independent routes compute the same thing and are cross-checked in the
test suite.  ``dy_derives`` is the derivation relation itself, a fixpoint
closure under four rules: membership, decryption with a derivable inverse
key, and the two projections.  ``dolev_yao_algorithm`` is the per-query
recursive algorithm built from ``submsg``/``getkeys``/``keysof``; its Yes
answers must coincide with the closure on every history.

Note there are no composition rules: a Dolev-Yao adversary recognizes what
it can extract, it does not enumerate what it could build.
"""

from __future__ import annotations

from functools import lru_cache
from typing import AbstractSet, Callable

from .answers import KnowledgeAnswer, answer_from_bool, evaluate_propositional
from .histories import History
from .terms import Concat, Encrypt, Key, KeySpace, Message


def dy_closure(messages: AbstractSet[Message], keys: KeySpace) -> frozenset[Message]:
    """Everything extractable from ``messages``: split pairs, open
    ciphertexts whose inverse key has itself been extracted."""
    known = set(messages)
    changed = True
    while changed:
        changed = False
        for m in list(known):
            if isinstance(m, Concat):
                for part in (m.left, m.right):
                    if part not in known:
                        known.add(part)
                        changed = True
            elif isinstance(m, Encrypt):
                if keys.inverse(m.key) in known and m.body not in known:
                    known.add(m.body)
                    changed = True
    return frozenset(known)


def dy_derives(messages: AbstractSet[Message], m: Message, keys: KeySpace) -> bool:
    return m in dy_closure(messages, keys)


def submsg(m: Message, m2: Message, opened: AbstractSet[Key], keys: KeySpace) -> bool:
    """Is ``m`` reachable inside ``m2``, splitting pairs freely and opening
    only ciphertexts whose inverse key is in ``opened``?"""
    if m == m2:
        return True
    if isinstance(m2, Encrypt) and keys.inverse(m2.key) in opened:
        return submsg(m, m2.body, opened, keys)
    if isinstance(m2, Concat):
        return submsg(m, m2.left, opened, keys) or submsg(m, m2.right, opened, keys)
    return False


def getkeys(m: Message, opened: AbstractSet[Key], keys: KeySpace) -> frozenset[Key]:
    """Keys visible in ``m`` given decryption capability ``opened``."""
    if isinstance(m, Key):
        return frozenset((m,))
    if isinstance(m, Encrypt) and keys.inverse(m.key) in opened:
        return getkeys(m.body, opened, keys)
    if isinstance(m, Concat):
        return getkeys(m.left, opened, keys) | getkeys(m.right, opened, keys)
    return frozenset()


def initkeys(history: History) -> frozenset[Key]:
    """The immutable initial-information component of a local state."""
    return history.initial


def keysof(history: History, keys: KeySpace) -> frozenset[Key]:
    """Least fixpoint of the keys an agent can lay hands on.

    The initial keys stay in the union at every iteration; dropping them
    would leave an agent unable to use a key nothing re-exhibits.
    """
    received = history.received()
    current = frozenset(history.initial)
    while True:
        step = frozenset(history.initial).union(
            *(getkeys(m, current, keys) for m in received)
        )
        if step == current:
            return current
        current = step


def _reachable(m: Message, opened: frozenset[Key], keys: KeySpace) -> frozenset[Message]:
    """The set {x : submsg(x, m, opened)}; memoized because algorithm sweeps
    ask about the same received messages millions of times."""
    return _reachable_cached(m, opened, keys)


@lru_cache(maxsize=None)
def _reachable_cached(
    m: Message, opened: frozenset[Key], keys: KeySpace
) -> frozenset[Message]:
    out = {m}
    if isinstance(m, Encrypt) and keys.inverse(m.key) in opened:
        out |= _reachable_cached(m.body, opened, keys)
    elif isinstance(m, Concat):
        out |= _reachable_cached(m.left, opened, keys)
        out |= _reachable_cached(m.right, opened, keys)
    return frozenset(out)


def dy_has_answer(history: History, keys: KeySpace) -> Callable[[Message], KnowledgeAnswer]:
    """The owner's has-decision of the Dolev-Yao algorithm, prepared once
    per local state: initial keys are Yes, then each received message is
    searched with the keys the history opens."""
    opened = keysof(history, keys)
    reach = [_reachable(m, opened, keys) for m in history.received()]

    def decide(m: Message) -> KnowledgeAnswer:
        if m in history.initial:
            return KnowledgeAnswer.YES
        return answer_from_bool(any(m in r for r in reach))

    return decide


def dy_evaluate(formula, history: History, owner: str, keys: KeySpace) -> KnowledgeAnswer:
    return evaluate_propositional(formula, owner, dy_has_answer(history, keys))
