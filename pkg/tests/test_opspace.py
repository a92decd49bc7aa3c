from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmukit.errors import ShapeMismatch
from pmukit.opspace import (FHilbert, OperatorSpace, commutant, contains, cstar_algebra_residual, equals,
                            intersection, is_commutative, is_cstar_algebra, product_space, span_closure,
                            sum_space)


def E(i, j, n=2):
    m = np.zeros((n, n))
    m[i, j] = 1
    return m


def test_span_examples():
    I = np.eye(2)
    assert span_closure([I, 2 * I]).dim == 1
    assert span_closure([E(0, 0), E(1, 1)]).dim == 2
    assert span_closure([np.zeros((2, 2))]).dim == 0


def test_product_example():
    X = span_closure([E(0, 1)])
    XX = product_space(X, X.adjoint())
    assert XX.dim == 1 and XX.has(E(0, 0)) and not XX.has(E(1, 1))
    assert product_space(X, X).dim == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutant_examples(n):
    H = FHilbert.numbered("h", n)
    assert commutant(OperatorSpace.full(H, H)).dim == 1
    assert commutant(OperatorSpace.diagonal(H)).dim == n
    assert commutant(OperatorSpace.scalars(H)).dim == n * n
    assert commutant(OperatorSpace.zero(H, H)).dim == n * n


def test_commutant_not_selfadjoint():
    # the commutant of span{E01} in M_2 is span{Id, E01}
    C = commutant(span_closure([E(0, 1)]))
    assert C.dim == 2 and C.has(np.eye(2)) and C.has(E(0, 1))


def test_cstar_examples():
    H = FHilbert.numbered("h", 3)
    assert is_cstar_algebra(OperatorSpace.diagonal(H))
    assert is_cstar_algebra(OperatorSpace.full(H, H))
    assert not is_cstar_algebra(span_closure([E(0, 1)]))
    upper = span_closure([E(0, 0), E(0, 1), E(1, 1)])
    assert not is_cstar_algebra(upper)
    assert cstar_algebra_residual(upper) > 0.1
    assert is_commutative(OperatorSpace.diagonal(H))
    assert not is_commutative(OperatorSpace.full(H, H))


def test_shape_mismatch():
    X = span_closure([np.eye(2)])
    Y = span_closure([np.eye(3)])
    with pytest.raises(ShapeMismatch):
        product_space(X, Y)
    with pytest.raises(ShapeMismatch):
        sum_space(X, Y)
    with pytest.raises(ShapeMismatch):
        X.coords(np.eye(3))
    with pytest.raises(ShapeMismatch):
        commutant(span_closure([np.ones((2, 3))]))


def test_intersection():
    X = span_closure([E(0, 0), E(0, 1)])
    Y = span_closure([E(0, 1), E(1, 1)])
    Z = intersection(X, Y)
    assert Z.dim == 1 and Z.has(E(0, 1))


# ----------------------------------------------------------------------------
# properties on random spans


def cplx(shape):
    return arrays(np.float64, shape, elements=st.floats(-2, 2, allow_nan=False, width=32))


@st.composite
def spaces(draw, n=3, max_gens=4):
    k = draw(st.integers(1, max_gens))
    re = draw(cplx((k, n, n)))
    im = draw(cplx((k, n, n)))
    return span_closure(re + 1j * im)


@given(X=spaces())
def test_span_idempotent(X):
    assert equals(OperatorSpace.span(X.basis, X.domain, X.codomain), X)


@given(X=spaces(), Y=spaces(), Z=spaces())
def test_product_associative(X, Y, Z):
    Y = Y.__class__(X.domain, X.domain, Y.basis)
    Z = Z.__class__(X.domain, X.domain, Z.basis)
    assert equals(product_space(product_space(X, Y), Z), product_space(X, product_space(Y, Z)), 1e-6)


@given(X=spaces())
def test_adjoint_involution(X):
    assert equals(X.adjoint().adjoint(), X)


@given(X=spaces(), Y=spaces())
def test_product_adjoint(X, Y):
    Y = Y.__class__(X.domain, X.domain, Y.basis)
    assert equals(product_space(X, Y).adjoint(), product_space(Y.adjoint(), X.adjoint()), 1e-6)


@given(X=spaces(), Y=spaces())
def test_sum_contains_both(X, Y):
    Y = Y.__class__(X.domain, X.domain, Y.basis)
    S = sum_space(X, Y)
    assert contains(S, X) and contains(S, Y) and S.dim <= X.dim + Y.dim


@given(X=spaces(max_gens=2))
def test_bicommutant_of_selfadjoint_set(X):
    # M'' is the generated unital *-algebra, which contains M and the identity
    A = sum_space(X, X.adjoint())
    C2 = commutant(commutant(A))
    assert contains(C2, A, 1e-6) and C2.has(np.eye(3), 1e-6)
    assert is_cstar_algebra(C2, 1e-6)
    assert equals(commutant(C2), commutant(A), 1e-6)
