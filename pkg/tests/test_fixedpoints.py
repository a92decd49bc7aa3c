from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmukit.errors import NotNormalizedCofixed, NotNormalizedFixed
from pmukit.fixedpoints import (HaarWeight, cofixed_space, counit, fixed_space,
                                groupoid_counit_formula, groupoid_haar_formula, groupoid_op_counit_formula,
                                haar_weight, is_compact, is_etale, is_proper, multiplier_set,
                                fiber_sum_haar_weight, verify_counit, verify_fixed, verify_left_haar)
from pmukit.legs import groupoid_left_conv, groupoid_mult
from pmukit.pmu import opposite

from zoo import SMALL, ZOO, groupoid, pmu

FAST = [n for n in ZOO if n != "pair4"]
small = st.sampled_from(SMALL)


def vec(data, n):
    return np.array(data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n)), dtype=complex)


@pytest.mark.parametrize("name", FAST)
def test_fixed_dims_and_flags(name):
    P = pmu(name, False)
    n = groupoid(name).n_units
    assert fixed_space(P).dim == n and cofixed_space(P).dim == n
    assert is_etale(P) and is_proper(P) and is_compact(P)


@pytest.mark.parametrize("name", SMALL)
def test_verify_fixed(name):
    rep = verify_fixed(pmu(name, False))
    assert rep.passed, rep.to_text()


def test_multiplier_set_contains_module():
    P = pmu("pair2")
    M = multiplier_set(P.betahat, P.alpha)
    assert M.dim >= 1
    eta = fixed_space(P).normalized
    assert M.has(eta)


@pytest.mark.parametrize("name", SMALL)
def test_counit(name):
    P = pmu(name, False)
    rep = verify_counit(P)
    assert rep.passed, rep.to_text()


@given(name=small, uni=st.booleans(), data=st.data())
@settings(max_examples=15)
def test_counit_restricts_to_units(name, uni, data):
    P = pmu(name, uni)
    f = vec(data, P.groupoid.n_arrows)
    assert np.allclose(counit(P)(groupoid_mult(P, f)), groupoid_counit_formula(P, f))


@given(name=small, uni=st.booleans(), data=st.data())
@settings(max_examples=15)
def test_opposite_counit_formula(name, uni, data):
    P = pmu(name, uni)
    f = vec(data, P.groupoid.n_arrows)
    assert np.allclose(counit(opposite(P))(groupoid_left_conv(P, f)), groupoid_op_counit_formula(P, f))


def test_counit_rejects_non_fixed():
    P = pmu("pair2")
    with pytest.raises(NotNormalizedFixed):
        counit(P, np.zeros((P.H.dim, P.K.dim)))
    with pytest.raises(NotNormalizedFixed):
        counit(P, np.eye(P.H.dim, P.K.dim))


@pytest.mark.parametrize("name", SMALL)
def test_haar_weight(name):
    P = pmu(name, False)
    rep = verify_left_haar(P)
    assert rep.passed, rep.to_text()


@given(name=small, uni=st.booleans(), data=st.data())
@settings(max_examples=15)
def test_haar_formula(name, uni, data):
    P = pmu(name, uni)
    f = vec(data, P.groupoid.n_arrows)
    assert np.allclose(haar_weight(P)(groupoid_mult(P, f)), groupoid_haar_formula(P, f))
    assert np.allclose(fiber_sum_haar_weight(P)(groupoid_mult(P, f)), groupoid_haar_formula(P, f, normalized=False))


@pytest.mark.parametrize("name", ["pair2", "z3", "flip3", "dsum"])
def test_unnormalized_weight_outcome(name):
    # the fiber-sum weight is invariant but not normalized when fibers have more than one arrow
    P = pmu(name)
    rep = verify_left_haar(P, fiber_sum_haar_weight(P))
    assert {c.name for c in rep.failures()} == {"phi(Id) = Id", "contraction"}
    mass = max(len(groupoid(name).range_fiber(u)) for u in range(groupoid(name).n_units))
    assert rep.data["norm phi(Id)"] == pytest.approx(mass)


def test_unnormalized_weight_fine_on_unit_groupoid():
    P = pmu("unit3")
    assert verify_left_haar(P, fiber_sum_haar_weight(P)).passed


def test_haar_weight_rejects_non_cofixed():
    P = pmu("pair2")
    with pytest.raises(NotNormalizedCofixed):
        HaarWeight(P, np.eye(P.H.dim, P.K.dim))
