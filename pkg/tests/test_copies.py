import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmnlnet.copies import (assemble_copies_behavior, binary_projector_family, copies_pipeline,
                            copy_behavior, post_select, projecting_parties,
                            search_projecting_bases, svetlichny_measurements)
from gmnlnet.errors import NotGMEError, ShapeError
from gmnlnet.hardy import build_hardy_measurements
from gmnlnet.network import BOUNDED, CERTIFIED, chsh_measurements
from gmnlnet.quantum import (Entanglement, StateVector, basis_state, ghz_state,
                             haar_random_state, maximally_entangled, schmidt_decompose)

from oracles import born_table

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def _bell_times_zero():
    amp = np.kron(maximally_entangled(2).amplitudes, [1.0, 0.0])
    return StateVector((2, 2, 2), amp)


def test_projecting_parties():
    assert projecting_parties(3, 1) == [2]
    assert projecting_parties(4, 2) == [1, 3]


def test_binary_projector_family():
    fam = binary_projector_family(H)
    assert fam.effects.shape == (2, 2, 2, 2)
    plus = H[0]
    assert np.allclose(fam.effects[0, 0], np.outer(plus, plus))
    assert np.allclose(fam.effects.sum(axis=1), np.eye(2)[None])


def test_ghz_x_basis_goes_to_case2():
    rep = copies_pipeline(ghz_state(3), bases={1: {2: H}, 2: {1: H}})
    assert rep.case == 2 and rep.verdict == CERTIFIED
    assert rep.value == pytest.approx(4 * math.sqrt(2), abs=1e-9)
    for cert in rep.lp["single_copy_membership"].values():
        assert cert["feasible"] is False


def test_svetlichny_measurements_ghz():
    _, value = svetlichny_measurements(ghz_state(3))
    assert value == pytest.approx(4 * math.sqrt(2), abs=1e-9)
    with pytest.raises(ShapeError):
        svetlichny_measurements(ghz_state(4))


def test_haar_state_case1():
    rep = copies_pipeline(haar_random_state((2, 2, 2), seed=1))
    assert rep.case == 1 and rep.verdict == CERTIFIED
    assert rep.value > 1e-8
    assert abs(rep.checks["value_minus_expected"]) < 1e-10
    assert all(v <= 1e-10 for v in rep.checks["post_selection_consistency"].values())
    assert all(v <= 1e-12 for v in rep.checks["negative_terms"].values())


def test_product_state_is_rejected():
    with pytest.raises(NotGMEError) as info:
        copies_pipeline(basis_state((2, 2, 2), (0, 0, 0)))
    assert info.value.cut == ((0,), (1, 2))
    with pytest.raises(NotGMEError):
        copies_pipeline(_bell_times_zero())
    with pytest.raises(ShapeError):
        copies_pipeline(maximally_entangled(2))


def test_bell_times_zero_residuals():
    psi = _bell_times_zero()
    # Copy 2 projects party 1: the residual of parties 0 and 2 is a product.
    res = search_projecting_bases(psi, 2, budget=20, seed=0)
    assert res.entanglement.kind is Entanglement.SEPARABLE and res.score == 0.0
    res = search_projecting_bases(psi, 1, budget=20, seed=0)
    assert res.entanglement.kind is Entanglement.MAXIMALLY_ENTANGLED


def test_search_deterministic_and_ghz_score():
    a = search_projecting_bases(ghz_state(3), 1, budget=200, seed=5)
    b = search_projecting_bases(ghz_state(3), 1, budget=200, seed=5)
    assert a.score == b.score and a.trials == b.trials == 200
    assert all(np.array_equal(a.bases[p], b.bases[p]) for p in a.bases)
    assert a.score >= 0.49
    with pytest.raises(ValueError):
        search_projecting_bases(ghz_state(3), 1, budget=0)
    with pytest.raises(ShapeError):
        search_projecting_bases(ghz_state(3), 3)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 32 - 1))
def test_post_selection_matches_residual(seed):
    psi = haar_random_state((2, 2, 2), seed=seed)
    rng = np.random.default_rng(seed)
    for i in (1, 2):
        res = search_projecting_bases(psi, i, budget=4, seed=int(rng.integers(1000)))
        if res.entanglement is None or res.entanglement.kind is not Entanglement.PARTIALLY_ENTANGLED:
            continue
        alice, bob = build_hardy_measurements(schmidt_decompose(res.residual))
        b = copy_behavior(psi, i, res.bases, alice, bob)
        direct = born_table(res.residual.amplitudes, [alice.effects, bob.effects])
        assert np.max(np.abs(post_select(b, i).table - direct)) <= 1e-10
        # The kept outcome has the residual's probability.
        other = projecting_parties(3, i)[0]
        kept = np.take(b.table[0, 0, 0], 0, axis=other).sum()
        assert kept == pytest.approx(res.probability, abs=1e-12)


def test_assemble_copies_layout():
    psi = ghz_state(3)
    sf = schmidt_decompose(maximally_entangled(2))
    alice, bob = chsh_measurements(sf)
    parts = {i: copy_behavior(psi, i, {p: H for p in projecting_parties(3, i)}, alice, bob)
             for i in (1, 2)}
    b = assemble_copies_behavior(parts)
    assert b.scenario.inputs == (4, 4, 4) and b.scenario.outputs == (4, 4, 4)
    for p in range(3):
        assert b.scenario.party_digits(p) == ((2, 2), (2, 2))
    assert b.normalization_error() < 1e-12


def test_copies_four_party_ghz():
    rep = copies_pipeline(ghz_state(4), budget=30)
    assert rep.case == 2 and rep.verdict == BOUNDED
