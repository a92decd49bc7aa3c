from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmukit.errors import CocycleViolation, NotGroupoidPMU
from pmukit.pmu import direct_sum, opposite
from pmukit.reps import (GroupoidRep, bundle_direct_sum, bundle_morphisms, bundle_tensor, character_bundle,
                         character_morphism_dims, conjugated_bundle, corep_from_groupoid_rep, corep_isomorphism,
                         corep_morphism_space, corep_tensor, end_trivial, groupoid_rep_from_corep,
                         left_regular_bundle, random_unitary, regular_corep, regular_rep, round_trip_corep,
                         round_trip_rep, tampered_rep, trivial_bundle, trivial_corep, trivial_rep,
                         verify_corep, verify_pi_hat_rep, verify_rep, verify_rep_category, verify_rep_legs)

from zoo import SMALL, groupoid, pmu


def bundles(name, seed=0):
    G = groupoid(name)
    rng = np.random.default_rng(seed)
    L = left_regular_bundle(G)
    S = bundle_direct_sum(L, trivial_bundle(G))
    return {
        "trivial": trivial_bundle(G),
        "left regular": L,
        "conjugated sum": conjugated_bundle(S, [random_unitary(d, rng) for d in S.dims]),
    }


@pytest.mark.parametrize("name", SMALL)
def test_trivial_and_regular_reps(name):
    P = pmu(name, False)
    for X in (trivial_rep(P), regular_rep(P)):
        rep = verify_rep(X)
        assert rep.passed, rep.to_text()


@pytest.mark.parametrize("name", ["pair2", "z3"])
def test_rep_legs_and_pi_hat(name):
    P = pmu(name, False)
    assert verify_rep_legs(regular_rep(P)).passed
    assert verify_pi_hat_rep(regular_rep(P)).passed


@pytest.mark.parametrize("name", ["pair2", "z3"])
def test_rep_category(name):
    rep = verify_rep_category(regular_rep(pmu(name, False)))
    assert rep.passed, rep.to_text()


def test_tampered_rep_fails():
    P = pmu("pair2")
    assert not verify_rep(tampered_rep(regular_rep(P))).passed


def test_tampering_needs_groupoid():
    P = direct_sum([pmu("z2"), pmu("unit1")])
    with pytest.raises(NotGroupoidPMU):
        tampered_rep(regular_rep(P))
    with pytest.raises(NotGroupoidPMU):
        corep_from_groupoid_rep(P, trivial_bundle(groupoid("z2")))


@pytest.mark.parametrize("name", SMALL)
def test_coreps(name):
    P = pmu(name, False)
    for C in (trivial_corep(P), regular_corep(P)):
        assert verify_corep(C).passed


@pytest.mark.parametrize("name", ["pair2", "z3", "flip3"])
def test_round_trips(name):
    P = pmu(name, False)
    for tag, R in bundles(name).items():
        rr = round_trip_rep(P, R)
        assert rr.passed, (tag, rr.to_text())
        C = corep_from_groupoid_rep(P, R)
        assert verify_corep(C).passed, tag
        rc = round_trip_corep(P, C)
        assert rc.passed, (tag, rc.to_text())


@pytest.mark.parametrize("name", ["pair2", "z3"])
def test_round_trip_on_builtin_coreps(name):
    P = pmu(name, False)
    for C in (trivial_corep(P), regular_corep(P)):
        assert round_trip_corep(P, C).passed


@pytest.mark.parametrize("name", ["pair2", "z3"])
def test_left_regular_is_regular_corep(name):
    P = pmu(name, False)
    F = corep_from_groupoid_rep(P, left_regular_bundle(groupoid(name)))
    assert corep_isomorphism(F, regular_corep(P)) is not None


@pytest.mark.parametrize("name", ["pair2", "z3", "flip3"])
def test_functor_is_fully_faithful(name):
    P = pmu(name, False)
    bs = bundles(name)
    R1, R2 = bs["left regular"], bs["conjugated sum"]
    F1, F2 = corep_from_groupoid_rep(P, R1), corep_from_groupoid_rep(P, R2)
    assert corep_morphism_space(F1, F2).dim == len(bundle_morphisms(R1, R2))


@pytest.mark.parametrize("name", ["pair2", "z3"])
def test_tensor_compatibility(name):
    P = pmu(name, False)
    L = left_regular_bundle(groupoid(name))
    FL = corep_from_groupoid_rep(P, L)
    T = corep_tensor(FL, FL)
    assert verify_corep(T).passed
    assert corep_isomorphism(T, corep_from_groupoid_rep(P, bundle_tensor(L, L))) is not None
    # the trivial corepresentation is a tensor unit
    assert corep_isomorphism(corep_tensor(FL, trivial_corep(P)), FL) is not None


@pytest.mark.parametrize("n", [2, 3, 4])
def test_character_morphisms(n):
    assert np.array_equal(character_morphism_dims(pmu(f"z{n}")), np.eye(n, dtype=int))


@given(k=st.integers(0, 5))
@settings(max_examples=6)
def test_character_round_trip(k):
    P = pmu("z3")
    assert round_trip_rep(P, character_bundle(groupoid("z3"), k)).passed


@pytest.mark.parametrize("name,orbits,units", [("pair3", 1, 3), ("unit3", 3, 3), ("flip3", 2, 3),
                                               ("dsum", 2, 3)])
def test_end_of_unit(name, orbits, units):
    P = pmu(name)
    C = trivial_corep(P)
    assert corep_morphism_space(C, C).dim == orbits
    assert end_trivial(opposite(P)).dim == orbits
    assert end_trivial(P).dim == units


def test_groupoid_rep_from_corep_recovers_fibers():
    P = pmu("flip3")
    R = bundles("flip3")["conjugated sum"]
    D = groupoid_rep_from_corep(P, corep_from_groupoid_rep(P, R))
    assert D.rep.dims == R.dims


def test_cocycle_violation():
    G = groupoid("z2")
    bad = GroupoidRep(G, (1,), [np.eye(1, dtype=complex) for _ in range(2)])
    bad.U[G.unit_arrow[0]] = np.array([[1j]])  # unit arrows must act trivially
    with pytest.raises(CocycleViolation):
        bad.validate()
    with pytest.raises(CocycleViolation):
        GroupoidRep(G, (1,), [np.eye(1)]).validate()
    with pytest.raises(CocycleViolation):
        GroupoidRep(G, (1,), [np.eye(1), np.eye(2)]).validate()


def test_character_needs_cyclic_group():
    with pytest.raises(CocycleViolation):
        character_bundle(groupoid("pair2"), 0)
