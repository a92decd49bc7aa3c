from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmukit.cstar import (CStarModule, compatibility_residual, diagonal_base, direct_sum_base,
                          direct_sum_module, direct_sum_rtp_map, flip, is_morphism, is_semi_morphism,
                          make_base, op_tensor, rtp)
from pmukit.errors import BaseAxiomFailed, ModuleAxiomFailed, NotInAlgebra
from pmukit.opspace import FHilbert, OperatorSpace, unitarity_residual

from zoo import SMALL, groupoid, pmu

small = st.sampled_from(SMALL)


def test_diagonal_base_axioms():
    K = FHilbert.numbered("k", 3)
    b = diagonal_base(K)
    assert max(b.residuals().values()) < 1e-12
    assert b.dagger().dagger() is b


def test_bad_base():
    K = FHilbert.numbered("k", 2)
    full = OperatorSpace.full(K, K)
    with pytest.raises(BaseAxiomFailed):
        make_base(K, full, full)  # M_2 does not commute with itself


def test_zero_module_rejected():
    K = FHilbert.numbered("k", 2)
    H = FHilbert.numbered("h", 2)
    with pytest.raises(ModuleAxiomFailed):
        CStarModule(H, OperatorSpace.zero(K, H), diagonal_base(K))


@pytest.mark.parametrize("name", SMALL)
def test_groupoid_modules_valid(name):
    P = pmu(name)
    for m in (P.alpha, P.beta, P.betahat):
        assert max(m.residuals().values()) < 1e-10
    assert compatibility_residual([P.alpha, P.betahat]) < 1e-10
    assert compatibility_residual([P.beta, P.betahat]) < 1e-10


@given(name=small, data=st.data())
def test_rho_is_composition_with_range_and_source(name, data):
    P = pmu(name)
    G = groupoid(name)
    f = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=G.n_units, max_size=G.n_units)))
    g = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=G.n_units, max_size=G.n_units)))
    assert np.allclose(P.alpha.rho(np.diag(f)), np.diag(f[G.tgt]))
    assert np.allclose(P.betahat.rho(np.diag(f)), np.diag(f[G.src]))
    # rho is a homomorphism
    lhs = P.alpha.rho(np.diag(f * g))
    assert np.allclose(lhs, P.alpha.rho(np.diag(f)) @ P.alpha.rho(np.diag(g)))


@pytest.mark.parametrize("name", SMALL)
def test_rho_unital(name):
    P = pmu(name)
    for m in (P.alpha, P.betahat):
        assert np.allclose(m.rho(np.eye(P.K.dim)), np.eye(P.H.dim))


def test_rho_rejects_non_members():
    P = pmu("pair2")
    with pytest.raises(NotInAlgebra):
        P.alpha.rho(np.ones((2, 2)))


def test_semi_morphisms():
    P = pmu("pair3")
    n = P.H.dim
    assert is_morphism(np.eye(n), P.alpha, P.alpha)
    D = np.diag(np.arange(1.0, n + 1))
    assert is_semi_morphism(D, P.alpha, P.alpha)
    U = np.linalg.qr(np.random.default_rng(1).standard_normal((n, n)))[0]
    assert not is_semi_morphism(U, P.alpha, P.alpha)


@pytest.mark.parametrize("name", SMALL)
def test_rtp_dimensions(name):
    # the groupoid products are l2 of composable pairs and of pairs with equal range
    P = pmu(name)
    G = groupoid(name)
    n_s = sum(1 for x in range(G.n_arrows) for y in range(G.n_arrows) if G.src[x] == G.tgt[y])
    n_r = sum(1 for x in range(G.n_arrows) for y in range(G.n_arrows) if G.tgt[x] == G.tgt[y])
    assert rtp(P.betahat, P.alpha).dim == n_s
    assert rtp(P.alpha, P.beta).dim == n_r


@pytest.mark.parametrize("name", SMALL)
def test_rtp_gram_and_flip(name):
    P = pmu(name)
    S = rtp(P.betahat, P.alpha)
    assert S.gram_residual() < 1e-9
    F = flip(S)
    assert unitarity_residual(F) < 1e-9
    back = flip(rtp(P.alpha, P.betahat))
    assert np.allclose(back @ F, np.eye(S.dim))


def test_rtp_with_unit_module():
    # K as a module over itself: H (x) K = H
    P = pmu("pair2")
    K = P.K
    unit = CStarModule(K, OperatorSpace.diagonal(K), P.base.dagger(), "unit", validate=False)
    Q = rtp(P.alpha, unit)
    assert Q.dim == P.H.dim


@given(data=st.data())
def test_op_tensor_identities(data):
    P = pmu("pair2")
    G = groupoid("pair2")
    R = rtp(P.alpha, P.beta)
    f = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=2, max_size=2)))
    g = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=2, max_size=2)))
    assert np.allclose(op_tensor(R, np.eye(4), np.eye(4)), np.eye(R.dim))
    # operators in the commutants of rho compose factorwise
    S1, T1 = np.diag(f[G.src]), np.diag(g[G.src])
    A = op_tensor(R, S1, T1)
    B = op_tensor(R, T1, S1)
    assert np.allclose(A @ B, op_tensor(R, S1 @ T1, T1 @ S1))


def test_direct_sum_rtp():
    P1, P2 = pmu("pair2"), pmu("z2")
    base = direct_sum_base([P1.base, P2.base])
    a = direct_sum_module([P1.alpha, P2.alpha], base)
    b = direct_sum_module([P1.beta, P2.beta], base.dagger())
    big = rtp(a, b)
    J = direct_sum_rtp_map([P1.alpha, P2.alpha], [P1.beta, P2.beta], big)
    assert big.dim == P1.R.dim + P2.R.dim
    assert unitarity_residual(J) < 1e-9
