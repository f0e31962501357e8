import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmnlnet.behavior import (Behavior, Bipartition, Scenario, canonical_bipartitions,
                              condition_on, decode_digits, deterministic_behavior,
                              encode_digits, group_parties, is_nonsignalling, local_behavior,
                              marginalize, marginalize_parties, mix, pr_box, tensor_product,
                              uniform_behavior)
from gmnlnet.errors import ConditioningError, MappingError, NormalizationError, ShapeError

from oracles import pr_2222


def _random_local(scenario, rng):
    tables = [rng.dirichlet(np.ones(a), size=x) for x, a in zip(scenario.inputs, scenario.outputs)]
    return local_behavior(scenario, tables)


def test_scenario_validation():
    with pytest.raises(ShapeError):
        Scenario((2, 2), (2,))
    with pytest.raises(ShapeError):
        Scenario((2,), (0,))
    with pytest.raises(ShapeError):
        Scenario((4,), (4,), (((2, 2), (2, 3)),))
    sc = Scenario((4, 2), (4, 2), (((2, 2), (2, 2)), ((2, 2),)))
    assert sc.shape == (4, 2, 4, 2) and sc.size == 64
    assert Scenario.from_json(sc.to_json()) == sc


def test_digit_encoding_is_most_significant_first():
    assert encode_digits((2, 3), (1, 2)) == 5
    assert decode_digits((2, 3), 5) == (1, 2)
    for i in range(12):
        assert encode_digits((3, 2, 2), decode_digits((3, 2, 2), i)) == i


def test_behavior_validation():
    sc = Scenario((2,), (2,))
    with pytest.raises(NormalizationError):
        Behavior(sc, np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(NormalizationError):
        Behavior(sc, np.array([[1.5, -0.5], [0.5, 0.5]]))
    with pytest.raises(ShapeError):
        Behavior(sc, np.ones(3) / 3)
    b = Behavior(sc, np.array([[0.25, 0.75], [1.0, 0.0]]))
    assert b.prob([1], [0]) == 0.75
    assert Behavior.from_json(b.to_json()).allclose(b, 0)


def test_bipartitions():
    cuts = canonical_bipartitions(3)
    assert [str(c) for c in cuts] == ["{0}|{1,2}", "{0,1}|{2}", "{0,2}|{1}"]
    assert len(canonical_bipartitions(4)) == 7
    c = Bipartition(frozenset({0, 2}), 3)
    assert c.side_m == (0, 2) and c.side_bar == (1,)
    assert c.separates(0, 1) and not c.separates(0, 2)


def test_nonsignalling_examples():
    rng = np.random.default_rng(0)
    sc = Scenario((2, 3), (3, 2))
    assert is_nonsignalling(_random_local(sc, rng))[0]
    assert is_nonsignalling(pr_box())[0]
    # Alice's output copies Bob's input.
    t = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        t[x, y, y, 0] = 1
    ok, viol = is_nonsignalling(Behavior(Scenario((2, 2), (2, 2)), t))
    assert not ok and viol == pytest.approx(1.0)


def test_pr_box_matches_oracle():
    boxes = {tuple(pr_box(r).table.ravel()) for r in itertools.product(range(2), repeat=3)}
    assert boxes == {tuple(t.ravel()) for t in pr_2222()}


def test_tensor_product_star_layout():
    pr = pr_box()
    prod = tensor_product([(pr, [(0, 0), (1, 0)]), (pr, [(0, 1), (2, 0)])])
    sc = prod.scenario
    assert sc.inputs == (4, 2, 2) and sc.outputs == (4, 2, 2)
    assert sc.digits == (((2, 2), (2, 2)), ((2, 2),), ((2, 2),))
    for x1, x2, y, z, a1, a2, b, c in itertools.product(range(2), repeat=8):
        expect = pr.table[x1, y, a1, b] * pr.table[x2, z, a2, c]
        assert prod.table[2 * x1 + x2, y, z, 2 * a1 + a2, b, c] == expect


def test_tensor_product_identity_and_uniform():
    rng = np.random.default_rng(2)
    b = _random_local(Scenario((2, 3), (2, 2)), rng)
    same = tensor_product([(b, [(0, 0), (1, 0)])])
    assert np.array_equal(same.table, b.table)
    u1, u2 = uniform_behavior(Scenario((2,), (3,))), uniform_behavior(Scenario((2, 2), (2, 2)))
    u = tensor_product([(u1, [(0, 0)]), (u2, [(0, 1), (1, 0)])])
    assert np.allclose(u.table, 1 / 12)


def test_tensor_product_bad_mappings():
    b = pr_box()
    with pytest.raises(MappingError):
        tensor_product([(b, [(0, 0)])])
    with pytest.raises(MappingError):
        tensor_product([(b, [(0, 0), (1, 0)]), (b, [(0, 0), (2, 0)])])
    with pytest.raises(MappingError):
        tensor_product([(b, [(0, 1), (1, 0)])])


def test_marginalize_examples():
    pr = pr_box()
    m = marginalize(pr, [(1, 0)], {(1, 0): 1})
    assert m.scenario.inputs == (2,) and np.allclose(m.table, 0.5)
    with pytest.raises(ShapeError):
        marginalize(pr, [(1, 0)])
    prod = tensor_product([(pr, [(0, 0), (1, 0)]), (pr, [(0, 1), (2, 0)])])
    m = marginalize(prod, [(0, 1), (2, 0)], {(0, 1): 0, (2, 0): 1})
    assert np.allclose(m.table, pr.table)
    mp = marginalize_parties(prod, [2])
    assert mp.scenario.inputs == (4, 2)


def test_condition_on_examples():
    pr = pr_box()
    c = condition_on(pr, {(0, 0): (1, 1)})
    # a = 1 at x = 1 forces b = 1 xor y.
    assert np.allclose(c.table, [[0, 1], [1, 0]])
    t = np.zeros((2, 2, 2, 2))
    t[:, :, 0, 0] = 1
    with pytest.raises(ConditioningError) as info:
        condition_on(Behavior(Scenario((2, 2), (2, 2)), t), {(0, 0): (0, 1)})
    assert info.value.joint_input == (0,)


def test_group_parties():
    rng = np.random.default_rng(5)
    b = _random_local(Scenario((2, 3, 2), (2, 2, 3)), rng)
    g = group_parties(b, [[0, 2], [1]])
    assert g.scenario.inputs == (4, 3) and g.scenario.outputs == (6, 2)
    for x, y, z, a, bb, c in itertools.product(range(2), range(3), range(2), range(2), range(2), range(3)):
        assert g.table[2 * x + z, y, 3 * a + c, bb] == b.table[x, y, z, a, bb, c]
    with pytest.raises(ShapeError):
        group_parties(b, [[0, 1]])


def test_deterministic_and_mix():
    sc = Scenario((2, 2), (2, 2))
    d = deterministic_behavior(sc, [[0, 1], [1, 1]])
    assert d.table[1, 0, 1, 1] == 1
    m = mix([0.5, 0.5], [d, uniform_behavior(sc)])
    assert m.table[1, 0, 1, 1] == pytest.approx(0.625)


@st.composite
def ns_pairs(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(2))
    sc = Scenario((2, 2), (2, 2))
    box = pr_box(tuple(rng.integers(0, 2, 3)))
    return mix(w, [box, _random_local(sc, rng)]), rng


@given(ns_pairs())
def test_tensor_product_preserves_nonsignalling(pair):
    b, rng = pair
    c = _random_local(Scenario((3,), (2,)), rng)
    prod = tensor_product([(b, [(0, 0), (1, 0)]), (c, [(0, 1)])])
    assert is_nonsignalling(prod, 1e-12)[0]
    assert prod.normalization_error() < 1e-12


@given(st.integers(0, 2 ** 32 - 1))
def test_group_parties_keeps_entries(seed):
    rng = np.random.default_rng(seed)
    b = _random_local(Scenario((2, 2, 3), (3, 2, 2)), rng)
    perm = list(rng.permutation(3))
    g = group_parties(b, [perm[:1], perm[1:]])
    assert np.array_equal(np.sort(g.flat()), np.sort(b.flat()))


@given(ns_pairs(), st.integers(0, 1), st.integers(0, 1))
def test_ns_marginal_independent_of_fixed_input(pair, x0, x1):
    b, _ = pair
    m0 = marginalize(b, [(1, 0)], {(1, 0): x0})
    m1 = marginalize(b, [(1, 0)], {(1, 0): x1})
    assert np.allclose(m0.table, m1.table, atol=1e-12)
