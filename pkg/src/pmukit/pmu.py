"""Pseudo-multiplicative unitaries: construction and axiom checks.

A PMU carries three module structures on H (``betahat`` over the dagger base,
``alpha`` over the base, ``beta`` over the dagger base) and a unitary
``V: S -> R`` with S = H betahat(x)alpha H and R = H alpha(x)beta H.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cstar import (RTP, CStarBase, CStarModule, assoc, build_rtp, diagonal_base,
                    direct_sum_base, direct_sum_module, direct_sum_rtp_map, flip,
                    left_apply, map_by_images, register_rtp, right_apply, rtp, sigma23)
from .errors import PmuError
from .groupoid import (FiniteGroupoid, HaarSystem, QuasiInvariantMeasure,
                       counting_haar, radon_nikodym)
from .opspace import (FHilbert, OperatorSpace, equality_residual, opnorm,
                      unitarity_residual)
from .report import Report


@dataclass(eq=False)
class PMU:
    base: CStarBase
    H: FHilbert
    betahat: CStarModule
    alpha: CStarModule
    beta: CStarModule
    V: np.ndarray
    name: str = "V"
    groupoid: FiniteGroupoid | None = None
    haar: HaarSystem | None = None
    measure: QuasiInvariantMeasure | None = None
    extras: dict = field(default_factory=dict)

    @property
    def K(self) -> FHilbert:
        return self.base.K

    @property
    def S(self) -> RTP:
        """Domain H betahat(x)alpha H."""
        return rtp(self.betahat, self.alpha)

    @property
    def R(self) -> RTP:
        """Codomain H alpha(x)beta H."""
        return rtp(self.alpha, self.beta)

    def __repr__(self) -> str:
        return f"PMU({self.name}, dim H={self.H.dim}, dim K={self.K.dim})"


# ----------------------------------------------------------------------------
# the groupoid example


def groupoid_spaces(G: FiniteGroupoid) -> tuple[FHilbert, FHilbert]:
    return FHilbert("H", G.arrows), FHilbert("K", G.units)


def _units_ops(G: FiniteGroupoid, which: np.ndarray) -> np.ndarray:
    """Matrix units E_{x, which(x)} as operators K -> H."""
    ops = np.zeros((G.n_arrows, G.n_arrows, G.n_units), dtype=complex)
    ops[np.arange(G.n_arrows), np.arange(G.n_arrows), which] = 1
    return ops


def groupoid_pmu(G: FiniteGroupoid, lam: HaarSystem | None = None, mu=None,
                 name: str | None = None) -> PMU:
    """The unitary (V w)(x, y) = w(x, x^-1 y) in orthonormal coordinates.

    With e_x = delta_x / sqrt(nu(x)) and e_u = delta_u / sqrt(mu(u)), the modules
    alpha = beta = j(l2(G, lambda)) and betahat = jhat(l2(G, lambda^-1)) are the
    spans of the matrix units E_{x,r(x)} and E_{x,s(x)}.  The D-weights are
    absorbed into the identifications of S and R, so V permutes basis vectors.
    """
    lam = lam or counting_haar(G)
    mu = np.ones(G.n_units) if mu is None else np.asarray(mu, dtype=float)
    qim = radon_nikodym(G, lam, mu)
    H, K = groupoid_spaces(G)
    b = diagonal_base(K, "b")
    bd = b.dagger()
    ar = OperatorSpace(K, H, _units_ops(G, G.tgt))
    asrc = OperatorSpace(K, H, _units_ops(G, G.src))
    alpha = CStarModule(H, ar, b, "alpha")
    beta = CStarModule(H, ar, bd, "beta", validate=False)
    betahat = CStarModule(H, asrc, bd, "betahat")
    S, R, V = _groupoid_products(G, H, betahat, alpha, beta)
    register_rtp(S)
    register_rtp(R)
    return PMU(b, H, betahat, alpha, beta, V, name or "V", G, lam, qim)


def composable_index(G: FiniteGroupoid) -> list[tuple[int, int]]:
    return G.composable_pairs()


def _groupoid_products(G: FiniteGroupoid, H: FHilbert, betahat: CStarModule,
                       alpha: CStarModule, beta: CStarModule) -> tuple[RTP, RTP, np.ndarray]:
    n = G.n_arrows
    sp = G.composable_pairs()  # s(x) = r(y)
    rp = G.range_pairs()  # r(x) = r(y)
    si = {p: i for i, p in enumerate(sp)}
    ri = {p: i for i, p in enumerate(rp)}
    Sk1 = np.zeros((n, len(sp), n), dtype=complex)  # |E_{x,s(x)}>_1 e_y = e_(x,y)
    Sk2 = np.zeros((n, len(sp), n), dtype=complex)  # |E_{y,r(y)}>_2 e_x = e_(x,y)
    for (x, y), i in si.items():
        Sk1[x, i, y] = 1
        Sk2[y, i, x] = 1
    Rk1 = np.zeros((n, len(rp), n), dtype=complex)
    Rk2 = np.zeros((n, len(rp), n), dtype=complex)
    for (x, y), i in ri.items():
        Rk1[x, i, y] = 1
        Rk2[y, i, x] = 1
    S = RTP(betahat, alpha, FHilbert("S", tuple(f"{G.arrows[x]}|{G.arrows[y]}" for x, y in sp)), Sk1, Sk2)
    R = RTP(alpha, beta, FHilbert("R", tuple(f"{G.arrows[x]}|{G.arrows[y]}" for x, y in rp)), Rk1, Rk2)
    V = np.zeros((len(rp), len(sp)), dtype=complex)
    for (a, b), i in si.items():
        V[ri[(a, G.comp[a, b])], i] = 1
    return S, R, V


def generic_groupoid_unitary(P: PMU) -> tuple[np.ndarray, RTP, RTP]:
    """V on the Gram-quotient products, built only from its action on legs.

    |E_{b,r(b)}>_2 e_a -> |E_{ab,r(ab)}>_2 e_a for composable (a, b).
    """
    G = P.groupoid
    Sg = build_rtp(P.betahat, P.alpha, label="S_gram")
    Rg = build_rtp(P.alpha, P.beta, label="R_gram")
    n = G.n_arrows
    src, dst = [], []
    for a, b in G.composable_pairs():
        ea = np.zeros(n)
        ea[a] = 1
        src.append((Sg.ket2(_unit_op(G, b, G.tgt)) @ ea)[:, None])
        dst.append((Rg.ket2(_unit_op(G, G.comp[a, b], G.tgt)) @ ea)[:, None])
    V = map_by_images(np.array(src), np.array(dst), "generic V")
    return V, Sg, Rg


def _unit_op(G: FiniteGroupoid, x: int, which: np.ndarray) -> np.ndarray:
    E = np.zeros((G.n_arrows, G.n_units), dtype=complex)
    E[x, which[x]] = 1
    return E


def identification(gen: RTP, fast: RTP) -> np.ndarray:
    """Unitary U with U |eta>_2 = |eta>_2 from a Gram-quotient product to a fast one."""
    return map_by_images(gen.ket2_basis, fast.ket2_basis, "identification")


def cross_validate(P: PMU) -> Report:
    """Compare the Gram-quotient products with the fast groupoid path."""
    rep = Report("cross-validation")
    G = P.groupoid
    Vg, Sg, Rg = generic_groupoid_unitary(P)
    US = identification(Sg, P.S)
    UR = identification(Rg, P.R)
    rep.data["dim S"] = int(Sg.dim)
    rep.data["dim R"] = int(Rg.dim)
    n_sr = len(G.composable_pairs())
    n_rr = len(G.range_pairs())
    rep.add("dim S = |G s*r G|", abs(Sg.dim - n_sr), 0.5)
    rep.add("dim R = |G r*r G|", abs(Rg.dim - n_rr), 0.5)
    rep.add("S identification unitary", unitarity_residual(US), 1e-9)
    rep.add("R identification unitary", unitarity_residual(UR), 1e-9)
    k1 = np.max(np.abs(np.einsum("ab,ibc->iac", US, Sg.ket1_basis) - P.S.ket1_basis), initial=0.0)
    k1r = np.max(np.abs(np.einsum("ab,ibc->iac", UR, Rg.ket1_basis) - P.R.ket1_basis), initial=0.0)
    rep.add("S identification matches first legs", k1, 1e-9)
    rep.add("R identification matches first legs", k1r, 1e-9)
    rep.add("identifications intertwine V", opnorm(UR @ Vg - P.V @ US), 1e-9)
    return rep


# ----------------------------------------------------------------------------
# axioms


def _image_residual(X: np.ndarray, src: CStarModule, dst: CStarModule) -> float:
    """Defect of [X src] = dst as operator spaces."""
    img = src.alpha.left_mul(X, dst.H)
    return equality_residual(dst.alpha, img)


def intertwining_residuals(P: PMU, Kg: CStarModule, Kd: CStarModule, X: np.ndarray) -> dict[str, float]:
    """The three relations for a unitary X: K deltahat(x)alpha H -> K gamma(x)beta H."""
    X0 = rtp(Kd, P.alpha)
    X1 = rtp(Kg, P.beta)
    return {
        "X(gamma<alpha) = gamma>alpha": _image_residual(X, X0.lift_left(Kg), X1.lift_right(P.alpha)),
        "X(deltahat>beta) = deltahat<beta": _image_residual(X, X0.lift_right(P.beta), X1.lift_left(Kd)),
        "X(deltahat>betahat) = gamma>betahat": _image_residual(X, X0.lift_right(P.betahat),
                                                                X1.lift_right(P.betahat)),
    }


def pmu_intertwining_residuals(P: PMU) -> dict[str, float]:
    S, R, V = P.S, P.R, P.V
    return {
        "V(alpha<alpha) = alpha>alpha": _image_residual(V, S.lift_left(P.alpha), R.lift_right(P.alpha)),
        "V(betahat>beta) = betahat<beta": _image_residual(V, S.lift_right(P.beta), R.lift_left(P.betahat)),
        "V(betahat>betahat) = alpha>betahat": _image_residual(V, S.lift_right(P.betahat),
                                                              R.lift_right(P.betahat)),
        "V(beta<alpha) = beta<beta": _image_residual(V, S.lift_left(P.beta), R.lift_left(P.beta)),
    }


def pentagon_composites(P: PMU, Kg: CStarModule, Kd: CStarModule, X: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the pentagon for X (X = V and K = H gives the PMU pentagon).

    Top: X12 then the associativity into K(x)S then V on the last two legs.
    Bottom: V23, flip, reassociate, X12, swap of outer legs, X12, reassociate.
    """
    al, be, bh = P.alpha, P.beta, P.betahat
    R = P.R
    X0 = rtp(Kd, al)
    X1 = rtp(Kg, be)
    T0L = rtp(X0.lift_right(bh), al)
    # top composite
    Tmid = rtp(X1.lift_right(bh), al)
    t1 = left_apply(T0L, Tmid, X)
    a1, lhs1, rhs1 = assoc(Kg, be, bh, al)
    assert lhs1 is Tmid
    T2R = rtp(Kg, R.lift_left(be))
    t3 = right_apply(rhs1, T2R, P.V)
    top = t3 @ a1 @ t1
    # bottom composite
    a0, lhs0, rhs0 = assoc(Kd, al, bh, al)
    assert lhs0 is T0L
    B2 = rtp(Kd, R.lift_right(al))
    b2 = right_apply(rhs0, B2, P.V)
    sig = flip(R)
    Rp = rtp(be, al)
    B3 = rtp(Kd, Rp.lift_left(al))
    b3 = right_apply(B2, B3, sig)
    a3, lhs3, rhs3 = assoc(Kd, al, be, al)
    assert rhs3 is B3
    B5 = rtp(X1.lift_left(Kd), al)
    b5 = left_apply(lhs3, B5, X)
    s23, src6, dst6 = sigma23(Kg, be, Kd, al)
    assert src6 is B5
    B7 = rtp(X1.lift_right(al), be)
    b7 = left_apply(dst6, B7, X)
    a8, lhs8, rhs8 = assoc(Kg, be, al, be)
    assert lhs8 is B7 and rhs8 is T2R
    bottom = a8 @ b7 @ s23 @ b5 @ a3.conj().T @ b3 @ b2 @ a0
    return top, bottom


def pentagon_residual(P: PMU, Kg: CStarModule | None = None, Kd: CStarModule | None = None,
                      X: np.ndarray | None = None) -> float:
    if X is None:
        Kg, Kd, X = P.alpha, P.betahat, P.V
    top, bottom = pentagon_composites(P, Kg, Kd, X)
    return opnorm(top - bottom)


def verify_pmu(P: PMU, tol: float = 1e-8) -> Report:
    rep = Report(f"pmu {P.name}")
    rep.data["dim H"] = int(P.H.dim)
    rep.data["dim K"] = int(P.K.dim)
    rep.data["dim S"] = int(P.S.dim)
    rep.data["dim R"] = int(P.R.dim)
    rep.add("V unitary", unitarity_residual(P.V), tol, "pmu definition")
    for name, r in pmu_intertwining_residuals(P).items():
        rep.add(name, r, tol, "pmu intertwining")
    try:
        rep.add("pentagon", pentagon_residual(P), tol, "pmu pentagon")
    except PmuError as exc:
        # the pentagon legs are undefined when V breaks the intertwining relations
        rep.add_bool("pentagon", False, float("inf"), f"pmu pentagon: {type(exc).__name__}")
    return rep


# ----------------------------------------------------------------------------
# constructions


def opposite(P: PMU) -> PMU:
    """(b, H, beta, alpha, betahat) with V^op = flip V* flip; cached on P."""
    if "opposite" in P.extras:
        return P.extras["opposite"]
    Rp = rtp(P.beta, P.alpha)  # domain of V^op
    sig_a = flip(Rp)  # onto R
    sig_b = flip(P.S)  # S onto H alpha(x)betahat H
    Vop = sig_b @ P.V.conj().T @ sig_a
    O = PMU(P.base, P.H, P.beta, P.alpha, P.betahat, Vop, P.name + "^op", P.groupoid, P.haar,
            P.measure, {"opposite_of": P})
    P.extras["opposite"] = O
    return O


def direct_sum(pmus: Sequence[PMU], name: str = "sum") -> PMU:
    if len(pmus) == 1:
        return pmus[0]
    base = direct_sum_base([p.base for p in pmus], "b")
    bd = base.dagger()
    H = FHilbert("H", tuple(f"{i}/{b}" for i, p in enumerate(pmus) for b in p.H.basis))
    alpha = direct_sum_module([p.alpha for p in pmus], base, H, "alpha")
    beta = direct_sum_module([p.beta for p in pmus], bd, H, "beta")
    betahat = direct_sum_module([p.betahat for p in pmus], bd, H, "betahat")
    JS = direct_sum_rtp_map([p.betahat for p in pmus], [p.alpha for p in pmus], rtp(betahat, alpha))
    JR = direct_sum_rtp_map([p.alpha for p in pmus], [p.beta for p in pmus], rtp(alpha, beta))
    Vs = _block_diag([p.V for p in pmus])
    V = JR @ Vs @ JS.conj().T
    return PMU(base, H, betahat, alpha, beta, V, name)


def _block_diag(mats: Sequence[np.ndarray]) -> np.ndarray:
    m = sum(a.shape[0] for a in mats)
    k = sum(a.shape[1] for a in mats)
    out = np.zeros((m, k), dtype=complex)
    r = c = 0
    for a in mats:
        out[r:r + a.shape[0], c:c + a.shape[1]] = a
        r += a.shape[0]
        c += a.shape[1]
    return out


def _kron_space(X: OperatorSpace, Y: OperatorSpace, dom: FHilbert, cod: FHilbert) -> OperatorSpace:
    ops = np.einsum("iab,jcd->ijacbd", X.basis, Y.basis).reshape(
        X.dim * Y.dim, X.codomain.dim * Y.codomain.dim, X.domain.dim * Y.domain.dim)
    return OperatorSpace(dom, cod, ops)


def tensor_hilbert(A: FHilbert, B: FHilbert, label: str) -> FHilbert:
    return FHilbert(label, tuple(f"({a},{b})" for a in A.basis for b in B.basis))


def _tensor_rtp_map(P1: RTP, P2: RTP, big: RTP) -> np.ndarray:
    """Canonical map from P1 (x) P2 onto the product of the tensored modules."""
    src, dst = [], []
    for j, eta in enumerate(P1.right.alpha.basis):
        for l, eta2 in enumerate(P2.right.alpha.basis):
            src.append(np.kron(P1.ket2_basis[j], P2.ket2_basis[l]))
            dst.append(big.ket2(np.kron(eta, eta2)))
    return map_by_images(np.array(src), np.array(dst), "tensor rtp")


def tensor(P: PMU, Q: PMU, name: str | None = None) -> PMU:
    K = tensor_hilbert(P.K, Q.K, "K")
    H = tensor_hilbert(P.H, Q.H, "H")
    base = CStarBase(K, _kron_space(P.base.B, Q.base.B, K, K),
                     _kron_space(P.base.Bdag, Q.base.Bdag, K, K), "b")
    bd = base.dagger()
    alpha = CStarModule(H, _kron_space(P.alpha.alpha, Q.alpha.alpha, K, H), base, "alpha", validate=False)
    beta = CStarModule(H, _kron_space(P.beta.alpha, Q.beta.alpha, K, H), bd, "beta", validate=False)
    betahat = CStarModule(H, _kron_space(P.betahat.alpha, Q.betahat.alpha, K, H), bd, "betahat",
                          validate=False)
    JS = _tensor_rtp_map(P.S, Q.S, rtp(betahat, alpha))
    JR = _tensor_rtp_map(P.R, Q.R, rtp(alpha, beta))
    V = JR @ np.kron(P.V, Q.V) @ JS.conj().T
    return PMU(base, H, betahat, alpha, beta, V, name or f"{P.name}x{Q.name}")


def transport_residual(P: PMU, Q: PMU, WH: np.ndarray | None = None, WK: np.ndarray | None = None) -> Report:
    """Check that unitaries WH: H_P -> H_Q and WK: K_P -> K_Q carry P onto Q."""
    rep = Report("unitary equivalence")
    WH = np.eye(P.H.dim) if WH is None else WH
    WK = np.eye(P.K.dim) if WK is None else WK
    if WH.shape != (Q.H.dim, P.H.dim) or WK.shape != (Q.K.dim, P.K.dim):
        rep.add_bool("dimensions agree", False, 1.0)
        return rep
    rep.add("H map unitary", unitarity_residual(WH))
    rep.add("K map unitary", unitarity_residual(WK))
    for tag, X, Y in (("B", P.base.B, Q.base.B), ("Bdag", P.base.Bdag, Q.base.Bdag)):
        img = OperatorSpace.span(np.einsum("ab,nbc,dc->nad", WK, X.basis, WK.conj()), Q.K, Q.K)
        rep.add(f"base {tag} carried", equality_residual(Y, img))
    for tag in ("betahat", "alpha", "beta"):
        X, Y = getattr(P, tag).alpha, getattr(Q, tag).alpha
        img = OperatorSpace.span(np.einsum("ab,nbc,dc->nad", WH, X.basis, WK.conj()), Q.K, Q.H)
        rep.add(f"module {tag} carried", equality_residual(Y, img))
    if rep.passed:
        JS = _carry(P.S, Q.S, WH, WK)
        JR = _carry(P.R, Q.R, WH, WK)
        rep.add("S map unitary", unitarity_residual(JS))
        rep.add("R map unitary", unitarity_residual(JR))
        rep.add("V intertwined", opnorm(JR @ P.V - Q.V @ JS))
    return rep


def _carry(A: RTP, B: RTP, WH: np.ndarray, WK: np.ndarray) -> np.ndarray:
    src, dst = [], []
    for j, eta in enumerate(A.right.alpha.basis):
        src.append(A.ket2_basis[j])
        dst.append(B.ket2(WH @ eta @ WK.conj().T) @ WH)
    return map_by_images(np.array(src), np.array(dst), "carry")


def with_unitary(P: PMU, V: np.ndarray, name: str) -> PMU:
    """Same modules, different operator (for counterexamples and mutation tests)."""
    return PMU(P.base, P.H, P.betahat, P.alpha, P.beta, V, name, P.groupoid, P.haar, P.measure)


def flip_counterexample(P: PMU) -> PMU:
    """Replace V by the flip |eta>_2 xi -> |xi>_2 eta (base of dimension one only)."""
    if P.K.dim != 1:
        raise ValueError("the flip counterexample needs a one-dimensional base")
    S, R = P.S, P.R
    n = P.H.dim
    src, dst = [], []
    for j in range(n):
        for a in range(n):
            eta = np.zeros((n, 1))
            eta[j] = 1
            xi = np.zeros((n, 1))
            xi[a] = 1
            src.append(S.ket2(eta) @ xi)
            dst.append(R.ket2(xi) @ eta)
    V = map_by_images(np.array(src), np.array(dst), "flip")
    return with_unitary(P, V, "flip")


def tampered(P: PMU, seed: int = 0, strength: float = 0.3) -> PMU:
    """Multiply V by a random unitary on R that is not a symmetry."""
    rng = np.random.default_rng(seed)
    n = P.R.dim
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Hm = (A + A.conj().T) / 2
    w, U = np.linalg.eigh(Hm)
    W = U @ np.diag(np.exp(1j * strength * w)) @ U.conj().T
    return with_unitary(P, W @ P.V, "tampered")
