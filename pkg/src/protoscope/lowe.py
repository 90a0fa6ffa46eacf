"""The Lowe guessing adversary: tagged reductions, traces, validation.

The model has two halves that must agree and are implemented separately on
purpose:

* ``validates`` is the declarative side: a guess is validated when some
  monotone trace of one-step reductions from the intercepted messages plus
  the guess derives a validator in a way that depends on the guess.  It is
  implemented as an exhaustive search over monotone traces and serves as
  the oracle.

* ``guess`` is the operational side: an accumulate-and-check loop over
  unexplored reductions of the closed-up intercepted set.  It is what the
  ``lowe`` knowledge algorithm actually runs, and it reports the validator
  it found for debugging.

A reduction undoes another when they are the encryption/decryption mirror
over the same body and key; monotone traces avoid such pairs in either
order, which is what stops an adversary from "validating" by encrypting
its own data and decrypting it again.  Because mirrored reductions cannot
coexist in a monotone trace, both halves branch over the choice of sides
before saturating.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import AbstractSet, Iterable, Optional, Sequence

from .dolevyao import dy_derives, dy_has_answer
from .answers import KnowledgeAnswer, answer_from_bool, evaluate_propositional
from .histories import History
from .terms import Concat, Encrypt, Key, KeySpace, Message, render_message, submessages


class ReductionTag(str, Enum):
    ENC = "enc"
    DEC = "dec"
    FST = "fst"
    SND = "snd"


@dataclass(frozen=True, slots=True)
class TaggedReduction:
    premises: frozenset[Message]
    tag: ReductionTag
    conclusion: Message

    def __post_init__(self):
        ok = {
            ReductionTag.FST: self._fst_shape,
            ReductionTag.SND: self._snd_shape,
            ReductionTag.ENC: self._enc_shape,
            ReductionTag.DEC: self._dec_shape,
        }[self.tag]()
        if not ok:
            raise ValueError(f"reduction shape does not match tag {self.tag.value}")

    def _fst_shape(self) -> bool:
        (p,) = tuple(self.premises) if len(self.premises) == 1 else (None,)
        return isinstance(p, Concat) and p.left == self.conclusion

    def _snd_shape(self) -> bool:
        (p,) = tuple(self.premises) if len(self.premises) == 1 else (None,)
        return isinstance(p, Concat) and p.right == self.conclusion

    def _enc_shape(self) -> bool:
        c = self.conclusion
        return (
            isinstance(c, Encrypt)
            and self.premises == frozenset((c.body, c.key))
        )

    def _dec_shape(self) -> bool:
        # premises are {ciphertext, inverse key}; the keyspace is not to
        # hand here, so accept any {Encrypt(body=conclusion, k), Key} pair
        # and let the constructors guarantee the inverse relationship.
        ciphers = [p for p in self.premises if isinstance(p, Encrypt) and p.body == self.conclusion]
        keys = [p for p in self.premises if isinstance(p, Key)]
        return bool(ciphers) and bool(keys) and len(self.premises) == 2

    def sort_key(self) -> tuple:
        return (
            tuple(sorted(render_message(p) for p in self.premises)),
            self.tag.value,
            render_message(self.conclusion),
        )


def fst_step(pair: Concat) -> TaggedReduction:
    return TaggedReduction(frozenset((pair,)), ReductionTag.FST, pair.left)


def snd_step(pair: Concat) -> TaggedReduction:
    return TaggedReduction(frozenset((pair,)), ReductionTag.SND, pair.right)


def enc_step(body: Message, key: Key) -> TaggedReduction:
    return TaggedReduction(frozenset((body, key)), ReductionTag.ENC, Encrypt(body, key))


def dec_step(cipher: Encrypt, inverse_key: Key) -> TaggedReduction:
    return TaggedReduction(
        frozenset((cipher, inverse_key)), ReductionTag.DEC, cipher.body
    )


def sub(m: Message, pool: AbstractSet[Message]) -> bool:
    """Does ``m`` occur structurally inside some element of ``pool``?

    Unlike the Dolev-Yao descent this ignores keys entirely: it walks into
    ciphertexts whether or not they can be opened.  It guards encryption
    steps so that only encryptions that actually occur somewhere are ever
    formed."""
    return any(m in submessages(x) for x in pool)


def one_step_reductions(
    pool: AbstractSet[Message], keys: KeySpace
) -> frozenset[TaggedReduction]:
    """Every reduction applicable to ``pool`` in a single step."""
    reds: set[TaggedReduction] = set()
    for m in pool:
        if isinstance(m, Concat):
            reds.add(fst_step(m))
            reds.add(snd_step(m))
    for m1 in pool:
        for m2 in pool:
            if isinstance(m2, Key) and sub(Encrypt(m1, m2), pool):
                reds.add(enc_step(m1, m2))
            if isinstance(m1, Encrypt) and isinstance(m2, Key) and keys.inverse(m1.key) == m2:
                reds.add(dec_step(m1, m2))
    return frozenset(reds)


def reduce_closure(pool: AbstractSet[Message], keys: KeySpace) -> frozenset[Message]:
    """Close ``pool`` under the conclusions of its one-step reductions."""
    current = set(pool)
    while True:
        additions = {
            r.conclusion
            for r in one_step_reductions(current, keys)
            if r.conclusion not in current
        }
        if not additions:
            return frozenset(current)
        current |= additions


Trace = Sequence[TaggedReduction]


def apply_trace(
    pool: AbstractSet[Message], trace: Trace
) -> Optional[frozenset[Message]]:
    """Run a trace from ``pool``; None when some step's premises are absent
    (the trace is ill-formed from this start set)."""
    current = frozenset(pool)
    for step in trace:
        if not step.premises <= current:
            return None
        current = current | {step.conclusion}
    return current


def undoes(r1: TaggedReduction, r2: TaggedReduction) -> bool:
    """Encryption and decryption over the same body and key undo each
    other.  With no pairing reduction in the system, projections have no
    inverse step, so enc/dec mirrors are the only undo pairs."""
    tags = {r1.tag, r2.tag}
    if tags != {ReductionTag.ENC, ReductionTag.DEC}:
        return False
    enc, dec = (r1, r2) if r1.tag is ReductionTag.ENC else (r2, r1)
    cipher = enc.conclusion
    return isinstance(cipher, Encrypt) and cipher in dec.premises and dec.conclusion == cipher.body


def is_monotone(trace: Trace) -> bool:
    """No step undoes an earlier one.  The undo relation is symmetric, so a
    mirrored pair poisons a trace in either order."""
    steps = list(trace)
    return not any(
        undoes(steps[j], steps[i])
        for i in range(len(steps))
        for j in range(i + 1, len(steps))
    )


def _conflict_pairs(
    universe: AbstractSet[TaggedReduction],
) -> list[tuple[TaggedReduction, TaggedReduction]]:
    encs = sorted(
        (r for r in universe if r.tag is ReductionTag.ENC), key=TaggedReduction.sort_key
    )
    pairs = []
    for e in encs:
        for d in universe:
            if d.tag is ReductionTag.DEC and undoes(e, d):
                pairs.append((e, d))
    return pairs


def _monotone_saturations(
    start: frozenset[Message],
    universe: frozenset[TaggedReduction],
    allowed_filter=None,
) -> Iterable[tuple[frozenset[TaggedReduction], frozenset[Message]]]:
    """All maximal monotone executions from ``start``.

    Any monotone trace is a conflict-free set of steps, executable in any
    premise-respecting order; conversely every conflict-free saturation is
    realizable as a monotone trace.  So quantifying over monotone traces
    reduces to branching over which side of each enc/dec mirror survives
    and then saturating.  Yields (performed steps, resulting set) pairs.
    """
    pairs = _conflict_pairs(universe)
    for choice in product((0, 1), repeat=len(pairs)):
        blocked = {pair[1 - side] for pair, side in zip(pairs, choice)}
        performed: set[TaggedReduction] = set()
        current = set(start)
        progressing = True
        while progressing:
            progressing = False
            for step in universe:
                if step in performed or step in blocked:
                    continue
                if allowed_filter is not None and not allowed_filter(step):
                    continue
                if step.premises <= current:
                    performed.add(step)
                    current.add(step.conclusion)
                    progressing = True
        yield frozenset(performed), frozenset(current)


def validates(pool: AbstractSet[Message], m: Message, keys: KeySpace) -> bool:
    """The declarative validation oracle.

    True when some monotone trace contains a step deriving a validator v
    whose premises are not derivable from ``pool`` alone (the derivation
    genuinely uses the guess), and either (a) another step of the trace
    also derives v, (b) v was already present, or (c) v is a key whose
    inverse the trace derives.

    Traces run from the reduction closure of ``pool`` plus the guess, the
    same seeding the operational loop uses.  Starting from the raw pool
    instead would let the undo restriction reach across work the adversary
    has already done offline, hiding real validations: with
    {pair(k', {a}_k), k_inv} and guess k, re-encrypting the extracted-and-
    decrypted body is a legitimate check, yet dec-then-enc of the same
    body inside one trace is non-monotone.
    """
    base = frozenset(pool)
    closed_base = reduce_closure(base, keys)
    start = closed_base | {m}
    universe = one_step_reductions(reduce_closure(start, keys), keys)

    for performed, result in _monotone_saturations(start, universe):
        for step in performed:
            if step.premises <= closed_base:
                continue  # derivable without the guess
            v = step.conclusion
            if v in start:
                return True
            if any(
                other is not step
                and other.conclusion == v
                and (other.premises, other.tag) != (step.premises, step.tag)
                for other in performed
            ):
                return True
            if isinstance(v, Key) and keys.inverse(v) in result:
                return True
    return False


def lowe_derives(pool: AbstractSet[Message], m: Message, keys: KeySpace) -> bool:
    """Derivable by extraction, or guessable and validated."""
    return dy_derives(pool, m, keys) or validates(pool, m, keys)


@dataclass(frozen=True, slots=True)
class ValidatorFound:
    """Debug record: the reduction that validated a guess and which of the
    three clauses fired."""

    guess: Message
    premises: frozenset[Message]
    tag: ReductionTag
    conclusion: Message
    clause: str  # "a", "b", or "c"

    def to_json_dict(self) -> dict:
        return {
            "guess": render_message(self.guess),
            "premises": sorted(render_message(p) for p in self.premises),
            "tag": self.tag.value,
            "conclusion": render_message(self.conclusion),
            "clause": self.clause,
        }


def guess(
    m: Message,
    history: History,
    keys: KeySpace,
    literal_clause_a: bool = False,
) -> tuple[KnowledgeAnswer, Optional[ValidatorFound]]:
    """The operational guess-checking loop.

    Start from the reduction closure of everything received plus the
    initial keys, add the guess, and repeatedly perform unexplored
    reductions in a canonical order.  A reduction whose premises all lie in
    the guess-free closure is old news and is performed silently; one that
    needed the guess is a validation candidate, checked against clause (a)
    (same conclusion reached another way), clause (b) (conclusion already
    present), and clause (c) (conclusion a key whose inverse is present).

    ``literal_clause_a`` switches clause (a) to the stricter published
    phrasing (premises AND tag both differ) instead of tuple inequality.

    The answer is order-independent: the loop explores every reduction,
    branching over enc/dec mirror choices, and re-checks the performed set
    once reductions are exhausted.
    """
    base = frozenset(history.received()) | history.initial
    closed_base = reduce_closure(base, keys)
    start = closed_base | {m}
    universe = one_step_reductions(reduce_closure(start, keys), keys)
    pairs = _conflict_pairs(universe)

    def differs(a: TaggedReduction, b: TaggedReduction) -> bool:
        if literal_clause_a:
            return a.premises != b.premises and a.tag != b.tag
        return (a.premises, a.tag) != (b.premises, b.tag)

    def check(
        step: TaggedReduction,
        accumulated: set[Message],
        performed: set[TaggedReduction],
        already_performed: bool,
    ) -> Optional[ValidatorFound]:
        if step.premises <= closed_base:
            return None
        v = step.conclusion
        others = performed - {step}
        if any(r.conclusion == v and differs(r, step) for r in others):
            return ValidatorFound(m, step.premises, step.tag, v, "a")
        # once the step has run, its own conclusion sits in the accumulated
        # set; clause (b) only makes sense before that
        if not already_performed and v in accumulated:
            return ValidatorFound(m, step.premises, step.tag, v, "b")
        if isinstance(v, Key) and keys.inverse(v) in accumulated:
            return ValidatorFound(m, step.premises, step.tag, v, "c")
        return None

    for choice in product((0, 1), repeat=len(pairs)):
        blocked = {pair[1 - side] for pair, side in zip(pairs, choice)}
        accumulated = set(start)
        performed: set[TaggedReduction] = set()
        while True:
            available = sorted(
                (
                    r
                    for r in universe
                    if r not in performed
                    and r not in blocked
                    and r.premises <= accumulated
                ),
                key=TaggedReduction.sort_key,
            )
            if not available:
                break
            step = available[0]
            hit = check(step, accumulated, performed, already_performed=False)
            if hit is not None:
                return KnowledgeAnswer.YES, hit
            performed.add(step)
            accumulated.add(step.conclusion)
        # exhausted: later arrivals may have satisfied clause (a) or (c)
        # for an already-performed reduction, so sweep once more
        for step in sorted(performed, key=TaggedReduction.sort_key):
            hit = check(step, accumulated, performed, already_performed=True)
            if hit is not None:
                return KnowledgeAnswer.YES, hit
    return KnowledgeAnswer.NO, None


def lowe_evaluate(
    formula,
    history: History,
    owner: str,
    keys: KeySpace,
    literal_clause_a: bool = False,
    debug_sink: Optional[list] = None,
) -> KnowledgeAnswer:
    """Dolev-Yao first; failing that, try to validate the message as a
    guess.  Everything besides the owner's has-queries is Unknown."""

    dy_decide = dy_has_answer(history, keys)

    def own_has(m: Message) -> KnowledgeAnswer:
        if dy_decide(m) is KnowledgeAnswer.YES:
            return KnowledgeAnswer.YES
        answer, found = guess(m, history, keys, literal_clause_a)
        if found is not None and debug_sink is not None:
            debug_sink.append(found)
        return answer_from_bool(answer is KnowledgeAnswer.YES)

    return evaluate_propositional(formula, owner, own_has)
