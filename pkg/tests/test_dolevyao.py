import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protoscope.answers import KnowledgeAnswer
from protoscope.dolevyao import (
    dy_closure,
    dy_derives,
    dy_evaluate,
    getkeys,
    initkeys,
    keysof,
    submsg,
)
from protoscope.formulas import And, CanCompute, Has, Know, Not, Prim, Received
from protoscope.histories import History, Recv, history_of
from protoscope.terms import Atom, KeySpace, conc, encr

from helpers import random_message, standard_keyspace

YES, NO, UNKNOWN = KnowledgeAnswer.YES, KnowledgeAnswer.NO, KnowledgeAnswer.UNKNOWN


@pytest.fixture
def ks():
    space, _ = standard_keyspace()
    return space


@pytest.fixture
def password_space():
    space = KeySpace()
    space.add_symmetric("pa")
    return space


def test_dy_derives_examples(ks):
    m1, m2 = Atom("m1"), Atom("m2")
    ka = ks.get("ka")
    assert dy_derives({conc(m1, m2)}, m1, ks)
    assert dy_derives({encr(m1, ka), ks.inverse(ka)}, m1, ks)


def test_dy_cannot_extract_the_encrypting_key(password_space):
    # the guessing attack exists precisely because extraction fails here
    ns, pa = Atom("ns"), password_space.get("pa")
    assert not dy_derives({ns, encr(ns, pa)}, pa, password_space)


def test_dy_membership_rule(ks):
    pool = {Atom("x"), conc(Atom("y"), Atom("z"))}
    for m in pool:
        assert dy_derives(pool, m, ks)


def test_submsg_examples(ks):
    n_a, a = Atom("nA"), Atom("A")
    kb = ks.get("kb")
    wrapped = encr(conc(n_a, a), kb)
    assert submsg(n_a, n_a, frozenset(), ks)
    assert submsg(n_a, wrapped, frozenset({ks.inverse(kb)}), ks)
    assert not submsg(n_a, wrapped, frozenset(), ks)


def test_getkeys_examples(ks):
    ka, kb = ks.get("ka"), ks.get("kb")
    assert getkeys(ka, frozenset(), ks) == frozenset({ka})
    layered = encr(ka, kb)
    assert getkeys(layered, frozenset({ks.inverse(kb)}), ks) == frozenset({ka})
    assert getkeys(layered, frozenset(), ks) == frozenset()


def test_initkeys_is_immutable_projection(ks):
    kb = ks.get("kb")
    fresh = History(frozenset({kb}), ())
    assert initkeys(fresh) == frozenset({kb})
    grown = fresh
    for i in range(5):
        grown = grown.append(Recv(Atom(f"x{i}")))
    assert initkeys(grown) == frozenset({kb})
    assert initkeys(History(frozenset(), ())) == frozenset()


def test_keysof_examples(ks):
    ka, kb = ks.get("ka"), ks.get("kb")
    kb_inv = ks.inverse(kb)
    assert keysof(History(frozenset({kb}), ()), ks) == frozenset({kb})
    # two-iteration fixpoint: the inverse key opens the box holding ka
    boxed = history_of([encr(ka, kb)], {kb_inv})
    assert keysof(boxed, ks) == frozenset({kb_inv, ka})
    assert keysof(history_of([encr(ka, kb)]), ks) == frozenset()


def test_dy_algorithm_guessing_blind_spot(password_space):
    ns, pa = Atom("ns"), password_space.get("pa")
    ell = history_of([ns, encr(ns, pa)])
    assert dy_evaluate(Prim(Has("a", pa)), ell, "a", password_space) is NO
    assert dy_evaluate(Prim(Has("a", ns)), ell, "a", password_space) is YES


def test_dy_algorithm_received_in_clear(ks):
    ns = Atom("ns")
    assert dy_evaluate(Prim(Has("a", ns)), history_of([ns]), "a", ks) is YES


def test_dy_algorithm_modal_and_foreign_queries_unknown(ks):
    ell = history_of([Atom("m")])
    f_inner = Prim(Has("b", Atom("m")))
    assert dy_evaluate(Know("b", f_inner), ell, "a", ks) is UNKNOWN
    assert dy_evaluate(CanCompute("b", f_inner), ell, "a", ks) is UNKNOWN
    assert dy_evaluate(f_inner, ell, "a", ks) is UNKNOWN
    assert dy_evaluate(Prim(Received("a", Atom("m"))), ell, "a", ks) is UNKNOWN


def test_dy_algorithm_boolean_combinations(ks):
    m = Atom("m")
    ell = history_of([m])
    yes = Prim(Has("a", m))
    no = Prim(Has("a", Atom("absent")))
    unknown = Prim(Has("b", m))
    assert dy_evaluate(Not(unknown), ell, "a", ks) is UNKNOWN
    assert dy_evaluate(And(no, unknown), ell, "a", ks) is NO
    assert dy_evaluate(And(yes, unknown), ell, "a", ks) is UNKNOWN
    assert dy_evaluate(And(yes, yes), ell, "a", ks) is YES
    assert dy_evaluate(Not(no), ell, "a", ks) is YES


def test_initkeys_answer_yes(ks):
    ka = ks.get("ka")
    ell = History(frozenset({ka}), ())
    assert dy_evaluate(Prim(Has("a", ka)), ell, "a", ks) is YES


def _random_history(rng, ks, keys, max_messages=6):
    received = [
        random_message(rng, rng.randint(1, 3), keys)
        for _ in range(rng.randint(0, max_messages))
    ]
    init = frozenset(k for k in keys if rng.random() < 0.3)
    return history_of(received, init)


def test_equivalence_with_closure_on_random_histories(ks):
    """The per-query algorithm and the global closure agree: the dual-route
    property at small scale (the acceptance suite scales it up)."""
    _, keys = standard_keyspace()
    rng = random.Random(20240817)
    for _ in range(60):
        ell = _random_history(rng, ks, keys)
        pool = set(ell.received()) | set(ell.initial)
        closure = dy_closure(pool, ks)
        candidates = list(closure) + [
            random_message(rng, rng.randint(1, 3), keys) for _ in range(20)
        ]
        for m in candidates:
            algorithmic = dy_evaluate(Prim(Has("a", m)), ell, "a", ks) is YES
            assert algorithmic == (m in closure)


def test_monotonicity(ks):
    _, keys = standard_keyspace()
    rng = random.Random(99)
    for _ in range(40):
        smaller = {random_message(rng, 3, keys) for _ in range(3)}
        larger = smaller | {random_message(rng, 3, keys)}
        m = random_message(rng, 3, keys)
        if dy_derives(smaller, m, ks):
            assert dy_derives(larger, m, ks)
