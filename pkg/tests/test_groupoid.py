from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmukit.errors import InvalidGroupoid, NotQuasiInvariant, ParseError
from pmukit.groupoid import (HaarSystem, counting_haar, cyclic_groupoid, cyclic_table, disjoint_union,
                             format_groupoid_spec, group_groupoid, left_invariance_residual, make_groupoid,
                             pair_groupoid, parse_groupoid_spec, product, radon_nikodym, transformation_groupoid,
                             unit_groupoid, verify_left_invariance)

from zoo import ZOO, groupoid

zoo_names = st.sampled_from(ZOO)


def test_unit_groupoid_single_arrow():
    G = make_groupoid(["u"], ["id"], [0], [0], {(0, 0): 0}, [0])
    assert G.n_arrows == 1 and G.n_units == 1


def test_cardinalities():
    assert (pair_groupoid(2).n_arrows, pair_groupoid(3).n_arrows, pair_groupoid(3).n_units) == (4, 9, 3)
    z2 = group_groupoid(cyclic_table(2))
    assert (z2.n_arrows, z2.n_units) == (2, 1)
    d = disjoint_union(pair_groupoid(2), z2)
    assert (d.n_arrows, d.n_units) == (6, 3)
    p = product(cyclic_groupoid(3), pair_groupoid(2))
    assert (p.n_arrows, p.n_units) == (12, 2)


def test_bad_range_rejected():
    G = pair_groupoid(2)
    comp = {(x, y): int(G.comp[x, y]) for x, y in G.composable_pairs()}
    x, y = next((x, y) for x, y in G.composable_pairs() if G.tgt[x] != G.tgt[G.comp[x, y]] or True)
    wrong = next(z for z in range(4) if G.tgt[z] != G.tgt[x])
    comp[x, y] = wrong
    with pytest.raises(InvalidGroupoid):
        make_groupoid(G.units, G.arrows, G.src, G.tgt, comp, G.inv)


def test_bad_group_inputs():
    with pytest.raises(InvalidGroupoid):
        group_groupoid([[0, 0], [0, 0]])
    with pytest.raises(InvalidGroupoid):
        transformation_groupoid(cyclic_table(2), [[0, 1], [0, 0]])


@pytest.mark.parametrize("name", ZOO)
def test_axioms_exhaustive(name):
    G = groupoid(name)
    n = G.n_arrows
    assert np.array_equal(G.inv[G.inv], np.arange(n))
    for x, y in itertools.product(range(n), repeat=2):
        defined = G.comp[x, y] >= 0
        assert defined == (G.src[x] == G.tgt[y])
        if defined:
            xy = G.comp[x, y]
            assert G.tgt[xy] == G.tgt[x] and G.src[xy] == G.src[y]
    for x, y, z in itertools.product(range(n), repeat=3):
        if G.src[x] == G.tgt[y] and G.src[y] == G.tgt[z]:
            assert G.comp[G.comp[x, y], z] == G.comp[x, G.comp[y, z]]
    for x in range(n):
        assert G.comp[G.unit_arrow[G.tgt[x]], x] == x and G.comp[x, G.unit_arrow[G.src[x]]] == x
        assert G.comp[G.inv[x], x] == G.unit_arrow[G.src[x]]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_pair_transitive(n):
    G = pair_groupoid(n)
    assert {(G.tgt[x], G.src[x]) for x in range(G.n_arrows)} == set(itertools.product(range(n), repeat=2))


@pytest.mark.parametrize("name", ZOO)
def test_counting_haar_invariant(name):
    G = groupoid(name)
    lam = counting_haar(G)
    assert np.all(lam.weight == 1)
    assert verify_left_invariance(G, lam)


@given(name=zoo_names, data=st.data())
def test_source_weighted_haar_invariant(name, data):
    # lambda(x) = c(s(x)) is left invariant
    G = groupoid(name)
    c = np.array(data.draw(st.lists(st.floats(0.1, 10), min_size=G.n_units, max_size=G.n_units)))
    lam = HaarSystem(c[G.src])
    assert left_invariance_residual(G, lam) < 1e-12
    radon_nikodym(G, lam, np.ones(G.n_units))


def test_non_invariant_weights_detected():
    G = pair_groupoid(2)
    lam = HaarSystem(np.array([1.0, 2.0, 3.0, 4.0]))
    assert left_invariance_residual(G, lam) > 0.5


def test_radon_nikodym_example():
    G = pair_groupoid(2)
    q = radon_nikodym(G, counting_haar(G), [1.0, 2.0])
    assert q.D[G.arrow_index("0<-1")] == pytest.approx(0.5)
    assert q.D[G.arrow_index("1<-0")] == pytest.approx(2.0)
    assert np.all(q.D[G.unit_arrow] == 1)


@given(name=zoo_names, data=st.data())
def test_cocycle_properties(name, data):
    G = groupoid(name)
    mu = np.array(data.draw(st.lists(st.floats(0.05, 20), min_size=G.n_units, max_size=G.n_units)))
    q = radon_nikodym(G, counting_haar(G), mu)
    D = q.D
    assert np.allclose(D * D[G.inv], 1, atol=1e-12)
    assert np.allclose(D[G.unit_arrow], 1)
    for x, y in G.composable_pairs():
        assert abs(D[x] * D[y] - D[G.comp[x, y]]) <= 1e-12 * max(1, D[G.comp[x, y]])
    assert np.allclose(D, mu[G.tgt] / mu[G.src])


@pytest.mark.parametrize("name", ZOO)
def test_uniform_measure_trivial_D(name):
    G = groupoid(name)
    assert np.all(radon_nikodym(G, counting_haar(G), np.ones(G.n_units)).D == 1)


def test_zero_weight_rejected():
    G = pair_groupoid(2)
    with pytest.raises(NotQuasiInvariant):
        radon_nikodym(G, counting_haar(G), [1.0, 0.0])


# ----------------------------------------------------------------------------
# spec files


@pytest.mark.parametrize("name", ["pair2", "z3", "flip3", "dsum"])
def test_spec_round_trip(name):
    G = groupoid(name)
    mu = np.arange(1.0, G.n_units + 1)
    text = format_groupoid_spec(G, counting_haar(G), mu)
    spec = parse_groupoid_spec(text)
    H = spec.groupoid
    assert H.arrows == G.arrows and H.units == G.units
    assert np.array_equal(H.comp, G.comp) and np.array_equal(H.inv, G.inv)
    assert np.allclose(spec.mu, mu) and np.allclose(spec.haar.weight, 1)


SPEC = """# Z/2
unit *
arrow e : * -> *
arrow g : * -> *
compose e e = e
compose e g = g
compose g e = g
compose g g = e
inverse e = e
inverse g = g
measure * = 2.5
"""


def test_spec_parse_example():
    spec = parse_groupoid_spec(SPEC)
    assert spec.groupoid.n_arrows == 2 and spec.mu[0] == 2.5


@pytest.mark.parametrize("bad,line", [
    (SPEC.replace("compose g g = e", "compose g g e"), 8),
    (SPEC + "measure * = lots\n", 12),
    (SPEC.replace("arrow g : * -> *", "arrow g : * -> v"), 4),
    (SPEC.replace("inverse g = g", "inverse g = h"), 10),
    (SPEC + "haar q = 1\n", 12),
])
def test_spec_parse_errors(bad, line):
    with pytest.raises(ParseError) as exc:
        parse_groupoid_spec(bad)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_spec_missing_inverse():
    with pytest.raises(InvalidGroupoid):
        parse_groupoid_spec(SPEC.replace("inverse g = g\n", ""))


def test_spec_broken_axiom():
    with pytest.raises(InvalidGroupoid):
        parse_groupoid_spec(SPEC.replace("compose g g = e", "compose g g = g"))


def test_unit_and_cyclic_constructors():
    assert unit_groupoid(3).n_arrows == 3
    assert cyclic_groupoid(5).n_arrows == 5
