from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmukit.legs import (Functional, convolve, delta, delta_hat, functional_difference, groupoid_conv_star,
                         groupoid_delta_formula, groupoid_delta_hat_formula, groupoid_j, groupoid_jhat,
                         groupoid_left_conv, groupoid_mult, hat_functional, is_regular, is_semiregular, leg,
                         leg_hat, pairing_matrix, pi, pi_hat, verify_hopf, verify_leg_relations)
from pmukit.opspace import OperatorSpace, equals, is_commutative

from zoo import SMALL, ZOO, groupoid, pmu

FAST = [n for n in ZOO if n != "pair4"]
small = st.sampled_from(SMALL)
uniform = st.booleans()


def vec(data, n):
    re = data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
    im = data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
    return np.array(re) + 1j * np.array(im)


@pytest.mark.parametrize("name", FAST)
def test_leg_dimensions(name):
    G = groupoid(name)
    P = pmu(name)
    assert leg_hat(P).dim == G.n_arrows
    assert leg(P).dim == G.n_arrows
    assert is_commutative(leg_hat(P))


def test_dims_by_family():
    assert leg(pmu("pair3")).dim == 9
    assert leg(pmu("z5")).dim == 5
    assert leg(pmu("unit4")).dim == 4
    assert leg(pmu("dsum")).dim == leg(pmu("pair2")).dim + leg(pmu("z2")).dim


@pytest.mark.parametrize("name", SMALL)
def test_legs_are_the_groupoid_algebras(name):
    P = pmu(name, False)
    G = P.groupoid
    n = G.n_arrows
    E = np.eye(n)
    mult = OperatorSpace.span([groupoid_mult(P, e) for e in E], P.H, P.H)
    conv = OperatorSpace.span([groupoid_left_conv(P, e) for e in E], P.H, P.H)
    assert equals(leg_hat(P), mult)
    assert equals(leg(P), conv)


@given(name=small, uni=uniform, data=st.data())
@settings(max_examples=15)
def test_delta_hat_formula(name, uni, data):
    P = pmu(name, uni)
    f = vec(data, P.groupoid.n_arrows)
    assert np.allclose(delta_hat(P, groupoid_mult(P, f)), groupoid_delta_hat_formula(P, f))


@given(name=small, uni=uniform, data=st.data())
@settings(max_examples=15)
def test_delta_formula(name, uni, data):
    P = pmu(name, uni)
    g = vec(data, P.groupoid.n_arrows)
    assert np.allclose(delta(P, groupoid_left_conv(P, g)), groupoid_delta_formula(P, g))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_group_delta_is_diagonal_tensor(n):
    # for a group the left translations are group-like
    P = pmu(f"z{n}")
    for g in range(n):
        U = groupoid_left_conv(P, np.eye(n)[g])
        assert np.allclose(delta(P, U), np.kron(U, U))


@pytest.mark.parametrize("name", FAST)
def test_regular(name):
    P = pmu(name, False)
    assert is_regular(P) and is_semiregular(P)


@pytest.mark.parametrize("name", SMALL)
def test_leg_relations(name):
    rep = verify_leg_relations(pmu(name, False))
    assert rep.passed, rep.to_text()


@pytest.mark.parametrize("side", ["hat", "plain"])
@pytest.mark.parametrize("name", ["pair2", "z3", "flip3"])
def test_hopf(name, side):
    rep = verify_hopf(pmu(name, False), side)
    assert rep.passed, rep.to_text()


def test_hopf_rejects_bad_side():
    with pytest.raises(ValueError):
        verify_hopf(pmu("z2"), "sideways")


@pytest.mark.parametrize("name", ["z2", "z3", "pair2", "flip3"])
def test_pairing_nondegenerate(name):
    out = pairing_matrix(pmu(name, False))
    assert out["consistency"] < 1e-9
    assert out["rank_hat"] == out["dim_hat"] and out["rank_plain"] == out["dim_plain"]


@given(name=small, uni=uniform, data=st.data())
@settings(max_examples=15)
def test_pi_hat_formula(name, uni, data):
    P = pmu(name, uni)
    n = P.groupoid.n_arrows
    xi, xi2 = vec(data, n), vec(data, n)
    w = Functional.from_tuples(P.beta.alpha, P.alpha.alpha, [groupoid_j(P, xi)], [groupoid_j(P, xi2)])
    assert np.allclose(pi_hat(P, w), np.diag(groupoid_conv_star(P, xi, xi2)))


@given(name=small, uni=uniform, data=st.data())
@settings(max_examples=15)
def test_pi_formula(name, uni, data):
    P = pmu(name, uni)
    n = P.groupoid.n_arrows
    xi, xi2 = vec(data, n), vec(data, n)
    u = Functional.from_tuples(P.alpha.alpha, P.betahat.alpha, [groupoid_j(P, xi)], [groupoid_jhat(P, xi2)])
    assert np.allclose(pi(P, u), groupoid_left_conv(P, np.conj(xi) * xi2))


@pytest.mark.parametrize("name", ["z3", "pair2"])
def test_convolution_associative_and_multiplicative(name):
    P = pmu(name, False)
    rng = np.random.default_rng(3)
    ws = [Functional.random(P.beta.alpha, P.alpha.alpha, rng) for _ in range(3)]
    a = convolve(P, convolve(P, ws[0], ws[1]), ws[2])
    b = convolve(P, ws[0], convolve(P, ws[1], ws[2]))
    assert functional_difference(P, a, b) < 1e-8
    lhs = pi_hat(P, convolve(P, ws[0], ws[1]))
    assert np.allclose(lhs, pi_hat(P, ws[0]) @ pi_hat(P, ws[1]))


def test_hat_functional_shape():
    P = pmu("z2")
    w = hat_functional(P, np.ones((P.beta.alpha.dim, P.alpha.alpha.dim)))
    assert w(np.eye(P.H.dim)).shape == (P.K.dim, P.K.dim)
