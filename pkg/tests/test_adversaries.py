import itertools

import pytest

from protoscope.adversaries import (
    AlgorithmConfig,
    DdgConfig,
    KnowledgeAlgorithm,
    UnknownAlgorithmError,
    combine,
    default_registry,
    make_ddg,
    make_dolev_yao,
)
from protoscope.answers import KnowledgeAnswer, answer_and, answer_not
from protoscope.formulas import And, Has, Know, Not, Prim
from protoscope.histories import History, Recv, history_of
from protoscope.terms import Atom, KeySpace, conc, encr

YES, NO, UNKNOWN = KnowledgeAnswer.YES, KnowledgeAnswer.NO, KnowledgeAnswer.UNKNOWN


@pytest.fixture
def ddg_setup():
    ks = KeySpace()
    key = ks.add_symmetric("kS")
    bits = tuple(Atom(f"b{i}") for i in range(8))
    return ks, key, DdgConfig(key, bits)


def test_three_valued_rules():
    # the three stated combination rules
    assert answer_not(UNKNOWN) is UNKNOWN
    assert answer_and(NO, UNKNOWN) is NO
    assert answer_and(YES, UNKNOWN) is UNKNOWN
    # and the rest of the table behaves classically
    assert answer_not(YES) is NO and answer_not(NO) is YES
    assert answer_and(YES, YES) is YES
    assert answer_and(NO, NO) is NO
    assert answer_and(UNKNOWN, UNKNOWN) is UNKNOWN


def test_ddg_yes_exactly_on_full_bit_set(ddg_setup):
    ks, key, cfg = ddg_setup
    alg = make_ddg("a", ks, cfg)
    target = Prim(Has("a", key))
    all_bits = history_of(list(cfg.bit_atoms))
    assert alg.evaluate(target, all_bits) is YES
    seven = history_of(list(cfg.bit_atoms[:7]))
    assert alg.evaluate(target, seven) is NO
    assert alg.evaluate(target, history_of([])) is NO


def test_ddg_bits_inside_larger_messages_count(ddg_setup):
    ks, key, cfg = ddg_setup
    alg = make_ddg("a", ks, cfg)
    bundled = history_of([conc(cfg.bit_atoms[0], cfg.bit_atoms[1])] + list(cfg.bit_atoms[2:]))
    assert alg.evaluate(Prim(Has("a", key)), bundled) is YES


def test_ddg_other_queries(ddg_setup):
    ks, key, cfg = ddg_setup
    alg = make_ddg("a", ks, cfg)
    assert alg.evaluate(Prim(Has("a", Atom("other"))), history_of([Atom("other")])) is NO
    assert alg.evaluate(Prim(Has("b", key)), history_of([])) is UNKNOWN
    assert alg.evaluate(Know("a", Prim(Has("a", key))), history_of([])) is UNKNOWN


def test_ddg_monotone_in_history(ddg_setup):
    ks, key, cfg = ddg_setup
    alg = make_ddg("a", ks, cfg)
    target = Prim(Has("a", key))
    history = history_of([])
    last = alg.evaluate(target, history)
    for bit in cfg.bit_atoms:
        history = history.append(Recv(bit))
        answer = alg.evaluate(target, history)
        assert not (last is YES and answer is NO)
        last = answer
    assert last is YES
    # appending junk never flips Yes back
    assert alg.evaluate(target, history.append(Recv(Atom("junk")))) is YES


def _const(owner, answer):
    return KnowledgeAlgorithm("const", owner, lambda f, h: answer)


def test_combine_truth_table():
    history = history_of([])
    formula = Prim(Has("a", Atom("x")))
    for first, second in itertools.product((YES, NO, UNKNOWN), repeat=2):
        combined = combine(_const("a", first), _const("a", second))
        result = combined.evaluate(formula, history)
        expected = YES if first is YES else second
        assert result is expected
        # the invariant as stated: Yes iff first Yes, or first non-Yes and second Yes
        assert (result is YES) == ((first is YES) or (first is not YES and second is YES))


def test_combine_rejects_mismatched_owners():
    with pytest.raises(ValueError):
        combine(_const("a", YES), _const("b", YES))


def test_combined_dy_ddg_branches(ddg_setup):
    ks, key, cfg = ddg_setup
    alg = combine(make_dolev_yao("a", ks), make_ddg("a", ks, cfg))
    target = Prim(Has("a", key))
    # key sent in clear: extraction answers first
    assert alg.evaluate(target, history_of([key])) is YES
    # key only as bits: the second algorithm overrides the extraction No
    assert alg.evaluate(target, history_of(list(cfg.bit_atoms))) is YES
    # neither
    assert alg.evaluate(target, history_of([cfg.bit_atoms[0]])) is NO


def test_registry_lookup(ddg_setup):
    ks, key, cfg = ddg_setup
    registry = default_registry()
    assert registry.names() == ["ddg", "dolev-yao", "dy+ddg", "lowe"]
    dy = registry.build("dolev-yao", "a", ks, AlgorithmConfig())
    assert dy.name == "dolev-yao" and dy.owner == "a"
    combined = registry.build("dy+ddg", "a", ks, AlgorithmConfig(ddg=cfg))
    assert combined.name == "dy+ddg"
    assert combined.evaluate(Prim(Has("a", key)), history_of(list(cfg.bit_atoms))) is YES


def test_registry_unknown_name_suggests(ddg_setup):
    ks, _, _ = ddg_setup
    registry = default_registry()
    with pytest.raises(UnknownAlgorithmError) as err:
        registry.lookup("dolevyao")
    message = err.value.args[0]
    assert "dolev-yao" in message and "available" in message


def test_registry_lookup_is_stable():
    registry = default_registry()
    assert registry.lookup("lowe") is registry.lookup("lowe")


def test_ddg_config_validation(ddg_setup):
    ks, key, _ = ddg_setup
    with pytest.raises(ValueError):
        DdgConfig(key, ())
    with pytest.raises(ValueError):
        DdgConfig(key, (Atom("b0"), Atom("b0")))
    assert DdgConfig(key, (Atom("b0"), Atom("b1"))).bit_count == 2


def test_dy_ddg_requires_config(ddg_setup):
    ks, _, _ = ddg_setup
    with pytest.raises(ValueError):
        default_registry().build("dy+ddg", "a", ks, AlgorithmConfig())
