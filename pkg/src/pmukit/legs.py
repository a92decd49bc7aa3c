"""Legs of a PMU, comultiplications, fiber products, functionals and pairing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cstar import RTP, assoc, flip, left_apply, right_apply, rtp, sigma23
from .errors import PmuError, ShapeMismatch
from .opspace import (DEFAULT_TOL, OperatorSpace, commutant,
                      containment_residual, cstar_algebra_residual, equality_residual,
                      opnorm, pair_products, product_space, rank, spans_space)
from .pmu import PMU, opposite
from .report import Report

# ----------------------------------------------------------------------------
# legs


def _cache(P: PMU, key: str, fn):
    if key not in P.extras:
        P.extras[key] = fn()
    return P.extras[key]


def hat_generators(P: PMU) -> np.ndarray:
    """<beta_i|_2 V |alpha_j>_2 for basis elements, shape (dim beta, dim alpha, H, H)."""
    def build():
        left = np.conj(np.swapaxes(P.R.ket2_basis, 1, 2)) @ P.V  # (nb, H, S)
        return pair_products(left, P.S.ket2_basis)
    return _cache(P, "hat_gen", build)


def plain_generators(P: PMU) -> np.ndarray:
    """<alpha_i|_1 V |betahat_j>_1, shape (dim alpha, dim betahat, H, H)."""
    def build():
        left = np.conj(np.swapaxes(P.R.ket1_basis, 1, 2)) @ P.V
        return pair_products(left, P.S.ket1_basis)
    return _cache(P, "plain_gen", build)


def c_generators(P: PMU) -> np.ndarray:
    """<alpha_i|_1 V |alpha_j>_2, shape (dim alpha, dim alpha, H, H)."""
    def build():
        left = np.conj(np.swapaxes(P.R.ket1_basis, 1, 2)) @ P.V
        return pair_products(left, P.S.ket2_basis)
    return _cache(P, "c_gen", build)


def _span_H(P: PMU, gens: np.ndarray) -> OperatorSpace:
    return OperatorSpace.span(gens.reshape(-1, P.H.dim, P.H.dim), P.H, P.H)


def leg_hat(P: PMU) -> OperatorSpace:
    return _cache(P, "leg_hat", lambda: _span_H(P, hat_generators(P)))


def leg(P: PMU) -> OperatorSpace:
    return _cache(P, "leg", lambda: _span_H(P, plain_generators(P)))


def c_space(P: PMU) -> OperatorSpace:
    return _cache(P, "c_space", lambda: _span_H(P, c_generators(P)))


def alpha_alpha_star(P: PMU) -> OperatorSpace:
    a = P.alpha.alpha
    return product_space(a, a.adjoint())


def regularity_residual(P: PMU) -> float:
    return equality_residual(c_space(P), alpha_alpha_star(P))


def is_regular(P: PMU, tol: float = DEFAULT_TOL) -> bool:
    return regularity_residual(P) <= tol


def is_semiregular(P: PMU, tol: float = DEFAULT_TOL) -> bool:
    return containment_residual(c_space(P), alpha_alpha_star(P)) <= tol


def _mul_res(X: OperatorSpace, Y: OperatorSpace, Z: OperatorSpace) -> float:
    return equality_residual(Z, product_space(X, Y))


def _stable(rep: Report, tag: str, A: OperatorSpace, R: OperatorSpace, rname: str, ref: str, tol: float):
    rep.add(f"[{tag} {rname}] = {tag}", _mul_res(A, R, A), tol, ref)
    rep.add(f"[{rname} {tag}] = {tag}", _mul_res(R, A, A), tol, ref)


def verify_leg_relations(P: PMU, tol: float = DEFAULT_TOL, with_opposite: bool = True) -> Report:
    rep = Report(f"leg relations {P.name}")
    Ah, A, C = leg_hat(P), leg(P), c_space(P)
    rep.data["dim Ahat"] = int(Ah.dim)
    rep.data["dim A"] = int(A.dim)
    rep.data["dim C"] = int(C.dim)
    ref = "leg relations"
    rb = P.beta.rho_space()  # rho_beta(B)
    rbh = P.betahat.rho_space()  # rho_betahat(B)
    ra = P.alpha.rho_space()  # rho_alpha(Bdag)
    for tag, X, mod in (("Ahat", Ah, P.beta), ("A", A, P.betahat)):
        rep.add(f"{tag} is a C*-algebra", cstar_algebra_residual(X), tol, ref)
        rep.add(f"[{tag}{tag}] = {tag}", _mul_res(X, X, X), tol, ref)
        rep.add(f"[{tag} H] = H", spans_space(X), tol, ref)
        rep.add(f"[{tag}* H] = H", spans_space(X.adjoint()), tol, ref)
        m = mod.alpha
        rep.add(f"[{tag} {mod.name}] = {mod.name}", _mul_res(X, m, m), tol, ref)
        rep.add(f"[{tag}* {mod.name}] = {mod.name}", _mul_res(X.adjoint(), m, m), tol, ref)
    _stable(rep, "Ahat", Ah, rbh, "rho_betahat(B)", ref, tol)
    _stable(rep, "Ahat", Ah, ra, "rho_alpha(Bdag)", ref, tol)
    _stable(rep, "A", A, rb, "rho_beta(B)", ref, tol)
    _stable(rep, "A", A, ra, "rho_alpha(Bdag)", ref, tol)
    cref = "C relations"
    rep.add("[CC] = C", _mul_res(C, C, C), tol, cref)
    rep.add("[C alpha] = alpha", _mul_res(C, P.alpha.alpha, P.alpha.alpha), tol, cref)
    _stable(rep, "C", C, rb, "rho_beta(B)", cref, tol)
    _stable(rep, "C", C, rbh, "rho_betahat(B)", cref, tol)
    if with_opposite:
        O = opposite(P)
        rep.add("Ahat(V^op) = A*", equality_residual(leg_hat(O), A.adjoint()), tol, ref)
        rep.add("A(V^op) = Ahat*", equality_residual(leg(O), Ah.adjoint()), tol, ref)
        rep.add("C(V^op) = C*", equality_residual(c_space(O), C.adjoint()), tol, cref)
    reg = regularity_residual(P)
    rep.data["regular"] = bool(reg <= tol)
    if reg <= tol:
        a, b = P.alpha.alpha, P.beta.alpha
        A1 = product_space(b.adjoint(), a)  # Ahat of the trivial representation
        rep.add("[beta Ahat_1] = [alpha Ahat_1]",
                equality_residual(product_space(b, A1), product_space(a, A1)), tol, "regular consequences")
        if with_opposite:
            # the same relation for V^op, whose trivial representation has Ahat = [betahat* alpha]
            bh = P.betahat.alpha
            A1op = product_space(bh.adjoint(), a)
            rep.add("[betahat Ahat_1op] = [alpha Ahat_1op]",
                    equality_residual(product_space(bh, A1op), product_space(a, A1op)), tol,
                    "regular consequences")
    return rep


# ----------------------------------------------------------------------------
# comultiplications


def delta_hat(P: PMU, y: np.ndarray) -> np.ndarray:
    """V* (Id (x) y) V on S, for y commuting with rho_beta(B)."""
    R = P.R
    return P.V.conj().T @ right_apply(R, R, y) @ P.V


def delta(P: PMU, z: np.ndarray) -> np.ndarray:
    """V (z (x) Id) V* on R, for z commuting with rho_betahat(B)."""
    S = P.S
    return P.V @ left_apply(S, S, z) @ P.V.conj().T


def _contained(ops: np.ndarray, X: OperatorSpace) -> float:
    if ops.shape[0] == 0:
        return 0.0
    v = ops.reshape(ops.shape[0], -1)
    R = v - (v @ X.vecs.conj().T) @ X.vecs if X.dim else v
    scale = max(1.0, float(np.max(np.linalg.norm(v, axis=1))))
    return float(np.max(np.linalg.norm(R, axis=1))) / scale


def _fiber_targets(A: OperatorSpace, B: OperatorSpace, P: RTP) -> tuple[OperatorSpace, OperatorSpace]:
    """[|b>_1 B] and [|c>_2 A], cached on P."""
    key = ("fiber", id(A), id(B))
    hit = P._lifts.get(key)
    if hit is not None and hit[0] is A and hit[1] is B:
        return hit[2], hit[3]
    k1, k2 = P.ket1_basis, P.ket2_basis
    T1 = OperatorSpace.span(pair_products(k1, B.basis).reshape(-1, P.dim, B.domain.dim), B.domain, P.space)
    T2 = OperatorSpace.span(pair_products(k2, A.basis).reshape(-1, P.dim, A.domain.dim), A.domain, P.space)
    P._lifts[key] = (A, B, T1, T2)
    return T1, T2


def fiber_product_residual(x: np.ndarray, A: OperatorSpace, B: OperatorSpace, P: RTP) -> float:
    """Largest defect of x|b>_1, x*|b>_1 in [|b>_1 B] and x|c>_2, x*|c>_2 in [|c>_2 A].

    P = H b(x)c K, A acts on H and B acts on K.
    """
    if x.shape != (P.dim, P.dim):
        raise ShapeMismatch("operator does not act on the product")
    if A.domain.dim != P.left.H.dim or B.domain.dim != P.right.H.dim:
        raise ShapeMismatch("algebras do not act on the factors")
    k1 = P.ket1_basis
    k2 = P.ket2_basis
    T1, T2 = _fiber_targets(A, B, P)
    xs = x.conj().T
    return max(_contained(np.matmul(x, k1), T1), _contained(np.matmul(xs, k1), T1),
               _contained(np.matmul(x, k2), T2), _contained(np.matmul(xs, k2), T2))


def in_fiber_product(x: np.ndarray, A: OperatorSpace, B: OperatorSpace, P: RTP,
                     tol: float = DEFAULT_TOL) -> bool:
    return fiber_product_residual(x, A, B, P) <= tol


def _hat_coassoc_pair(P: PMU, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both iterated hat comultiplications of y in L(S), on H betahat(x)(alpha<alpha) S."""
    al, be, bh = P.alpha, P.beta, P.betahat
    S, R = P.S, P.R
    # (Delta_hat * Id)(y) = (V (x) Id)* (Id (x) y) (V (x) Id), moved onto the right bracketing
    T0L = rtp(S.lift_right(bh), al)
    T1L = rtp(R.lift_right(bh), al)
    v12 = left_apply(T0L, T1L, P.V)
    a1, lhs1, T1R = assoc(al, be, bh, al)
    y_on = right_apply(T1R, T1R, y)
    first = v12.conj().T @ a1.conj().T @ y_on @ a1 @ v12
    a0, _, T0R = assoc(bh, al, bh, al)
    first = a0 @ first @ a0.conj().T
    # (Id * Delta_hat)(y) = (Id (x) V)* y13 (Id (x) V)
    B2 = rtp(bh, R.lift_right(al))
    v23 = right_apply(T0R, B2, P.V)
    Rp = rtp(be, al)
    B3 = rtp(bh, Rp.lift_left(al))
    sig = right_apply(B2, B3, flip(R))
    a3, F, _ = assoc(bh, al, be, al)  # F = (H betahat(x)alpha H)(betahat>beta)(x)alpha H
    y13 = sig.conj().T @ a3 @ left_apply(F, F, y) @ a3.conj().T @ sig
    second = v23.conj().T @ y13 @ v23
    return first, second


def _plain_coassoc_pair(P: PMU, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both iterated comultiplications of y in L(R), on H alpha(x)(beta<beta) R."""
    al, be, bh = P.alpha, P.beta, P.betahat
    S, R = P.S, P.R
    # (Delta * Id)(y) = V12 Sigma23* (y (x) Id) Sigma23 V12*
    T2L = rtp(R.lift_right(al), be)
    Sa = rtp(S.lift_left(al), be)
    v12 = left_apply(Sa, T2L, P.V)
    s23, src, F = sigma23(bh, al, al, be)
    first = v12 @ s23.conj().T @ left_apply(F, F, y) @ s23 @ v12.conj().T
    a2, _, T2R = assoc(al, be, al, be)
    first = a2 @ first @ a2.conj().T
    # (Id * Delta)(y) = (Id (x) V) a1 (y (x) Id) a1* (Id (x) V)*
    a1, T1L, T1R = assoc(al, be, bh, al)
    v23 = right_apply(T1R, T2R, P.V)
    second = v23 @ a1 @ left_apply(T1L, T1L, y) @ a1.conj().T @ v23.conj().T
    return first, second


def coassociativity_residual(P: PMU, side: str = "hat", elements: np.ndarray | None = None) -> float:
    if side == "hat":
        X = leg_hat(P) if elements is None else None
        els = X.basis if elements is None else elements
        worst = 0.0
        for a in els:
            f, s = _hat_coassoc_pair(P, delta_hat(P, a))
            worst = max(worst, opnorm(f - s) / max(1.0, opnorm(a)))
        return worst
    X = leg(P) if elements is None else None
    els = X.basis if elements is None else elements
    worst = 0.0
    for a in els:
        f, s = _plain_coassoc_pair(P, delta(P, a))
        worst = max(worst, opnorm(f - s) / max(1.0, opnorm(a)))
    return worst


def verify_hopf(P: PMU, side: str = "hat", tol: float = DEFAULT_TOL) -> Report:
    """Algebra, rho-stability, fiber-product membership and coassociativity for one leg."""
    rep = Report(f"hopf {side} {P.name}")
    ref = "Hopf bimodule"
    if side == "hat":
        X, prod, dfun = leg_hat(P), P.S, lambda a: delta_hat(P, a)
        stab = (P.betahat.rho_space(), P.alpha.rho_space())
        names = ("rho_betahat(B)", "rho_alpha(Bdag)")
    elif side == "plain":
        X, prod, dfun = leg(P), P.R, lambda a: delta(P, a)
        stab = (P.beta.rho_space(), P.alpha.rho_space())
        names = ("rho_beta(B)", "rho_alpha(Bdag)")
    else:
        raise ValueError("side must be 'hat' or 'plain'")
    rep.data["dim"] = int(X.dim)
    rep.add("leg is a C*-algebra", cstar_algebra_residual(X), tol, ref)
    for nm, Rs in zip(names, stab):
        rep.add(f"[leg {nm}] = leg", _mul_res(X, Rs, X), tol, ref)
    try:
        deltas = [dfun(a) for a in X.basis]
        fp = max((fiber_product_residual(d, X, X, prod) for d in deltas), default=0.0)
        rep.add("comultiplication lands in the fiber product", fp, tol, ref)
        hom = 0.0
        for i, a in enumerate(X.basis):
            for j, b in enumerate(X.basis):
                hom = max(hom, opnorm(dfun(a @ b) - deltas[i] @ deltas[j]))
            hom = max(hom, opnorm(dfun(a.conj().T) - deltas[i].conj().T))
        rep.add("comultiplication is a *-homomorphism", hom, tol, ref)
        rep.add("coassociativity", coassociativity_residual(P, side), tol, ref)
    except PmuError as exc:
        for nm in ("comultiplication lands in the fiber product", "comultiplication is a *-homomorphism",
                   "coassociativity"):
            if nm not in rep:
                rep.add_bool(nm, False, float("inf"), f"{ref}: {type(exc).__name__}")
    return rep


# ----------------------------------------------------------------------------
# functionals


@dataclass(eq=False)
class Functional:
    """a -> sum_ij C[i, j] left_i* a right_j, an L(K)-valued map on L(H).

    A tuple functional sum_n xi_n* a eta_n has C = P^H Q where P, Q hold the
    coordinates of the tuples in the two bases.
    """

    left: OperatorSpace
    right: OperatorSpace
    C: np.ndarray

    @classmethod
    def from_tuples(cls, left: OperatorSpace, right: OperatorSpace,
                    xis: Sequence[np.ndarray], etas: Sequence[np.ndarray]) -> "Functional":
        if len(xis) != len(etas):
            raise ShapeMismatch("tuples must have equal length")
        Pm = np.array([left.coords(x)[0] for x in xis]).reshape(len(xis), left.dim)
        Qm = np.array([right.coords(e)[0] for e in etas]).reshape(len(etas), right.dim)
        return cls(left, right, Pm.conj().T @ Qm)

    @classmethod
    def random(cls, left: OperatorSpace, right: OperatorSpace, rng: np.random.Generator) -> "Functional":
        C = rng.standard_normal((left.dim, right.dim)) + 1j * rng.standard_normal((left.dim, right.dim))
        return cls(left, right, C)

    def __call__(self, a: np.ndarray) -> np.ndarray:
        if a.shape != (self.left.codomain.dim, self.right.codomain.dim):
            raise ShapeMismatch("functional applied to an operator of the wrong shape")
        M = np.conj(np.swapaxes(self.left.basis, 1, 2)) @ a  # (nl, K, H)
        T = np.einsum("ij,iab,jbc->ac", self.C, M, self.right.basis, optimize=True)
        return T

    def adjoint(self) -> "Functional":
        """omega*(a) = omega(a*)*."""
        return Functional(self.right, self.left, self.C.conj().T)

    def __add__(self, other: "Functional") -> "Functional":
        return Functional(self.left, self.right, self.C + other.C)

    def scale(self, c: complex) -> "Functional":
        return Functional(self.left, self.right, c * self.C)


def pi_hat(P: PMU, w: Functional) -> np.ndarray:
    """sum C_ij <beta_i|_2 V |alpha_j>_2 for w over (beta, alpha)."""
    return np.tensordot(w.C, hat_generators(P), axes=([0, 1], [0, 1]))


def pi(P: PMU, u: Functional) -> np.ndarray:
    """sum C_ij <alpha_i|_1 V |betahat_j>_1 for u over (alpha, betahat)."""
    return np.tensordot(u.C, plain_generators(P), axes=([0, 1], [0, 1]))


def hat_functional(P: PMU, C: np.ndarray) -> Functional:
    return Functional(P.beta.alpha, P.alpha.alpha, C)


def plain_functional(P: PMU, C: np.ndarray) -> Functional:
    return Functional(P.alpha.alpha, P.betahat.alpha, C)


def boxtimes(P: PMU, w: Functional, w2: Functional, x: np.ndarray) -> np.ndarray:
    """(w [x] w2)(x) for x on R and w, w2 over (beta, alpha).

    With w = sum C_ij beta_i* . alpha_j and w2 = sum C2_kl beta_k* . alpha_l, the
    stacked kets are |beta_k>_2 beta_i on the left and |alpha_j>_1 alpha_l on the
    right, and the value is sum C_ij C2_kl beta_i* <beta_k|_2 x |alpha_j>_1 alpha_l.
    """
    R = P.R
    b, a = P.beta.alpha.basis, P.alpha.alpha.basis
    left = np.matmul(R.ket2_basis[:, None], b[None])  # (k, i, R, K)
    right = np.matmul(R.ket1_basis[:, None], a[None])  # (j, l, R, K)
    xl = np.conj(np.swapaxes(left, 2, 3)) @ x  # (k, i, K, R)
    return np.einsum("ij,kl,kiab,jlbc->ac", w.C, w2.C, xl, right, optimize=True)


def convolution_space(P: PMU) -> np.ndarray:
    """Spanning set of rho_betahat(B)', where the convolution is evaluated."""
    return _cache(P, "conv_span", lambda: commutant(P.betahat.rho_space()).basis)


def convolve(P: PMU, w: Functional, w2: Functional) -> Functional:
    """w * w2 = (w [x] w2) o Delta, re-expressed as a functional over (beta, alpha).

    The coefficient matrix is found by least squares on a spanning set of the
    commutant where Delta is defined; consistency is asserted.
    """
    Z = convolution_space(P)
    targets = np.array([boxtimes(P, w, w2, delta(P, z)) for z in Z])  # (nz, K, K)
    b, a = P.beta.alpha.basis, P.alpha.alpha.basis
    # coefficient map: C -> [b_i* z a_j]_z
    M = np.einsum("iba,zbc,jcd->zadij", b.conj(), Z, a, optimize=True)
    nz, k = Z.shape[0], P.K.dim
    A = M.reshape(nz * k * k, -1)
    c, *_ = np.linalg.lstsq(A, targets.reshape(-1), rcond=None)
    res = np.linalg.norm(A @ c - targets.reshape(-1)) / max(1.0, np.linalg.norm(targets))
    if res > 1e-8:
        raise PmuError(f"convolution is not representable: residual {res:.2e}")
    return hat_functional(P, c.reshape(b.shape[0], a.shape[0]))


def functional_difference(P: PMU, w: Functional, w2: Functional) -> float:
    """Largest difference of two functionals on the spanning set of the commutant."""
    return max((opnorm(w(z) - w2(z)) for z in convolution_space(P)), default=0.0)


def pairing(P: PMU, w: Functional, u: Functional) -> tuple[np.ndarray, np.ndarray]:
    """(pi_hat(w) | pi(u)) computed both as w(pi(u)) and as u(pi_hat(w))."""
    return w(pi(P, u)), u(pi_hat(P, w))


def _independent(gens: np.ndarray) -> list[int]:
    """Indices of a maximal independent subfamily (greedy, in order)."""
    chosen: list[int] = []
    basis = np.zeros((0, gens[0].size), dtype=complex)
    for i, g in enumerate(gens):
        v = g.reshape(-1)
        r = v - (basis.conj() @ v) @ basis if basis.shape[0] else v
        nr = np.linalg.norm(r)
        if nr > 1e-8 * max(1.0, np.linalg.norm(v)):
            basis = np.vstack([basis, r / nr])
            chosen.append(i)
    return chosen


def pairing_matrix(P: PMU) -> dict:
    """Pairing values between independent Fourier elements on both sides.

    Returns the two flattenings and their ranks; nondegeneracy means the ranks
    equal dim Ahat and dim A.
    """
    nb, na = P.beta.alpha.dim, P.alpha.alpha.dim
    na2, nbh = P.alpha.alpha.dim, P.betahat.alpha.dim
    hg = hat_generators(P).reshape(nb * na, P.H.dim, P.H.dim)
    pg = plain_generators(P).reshape(na2 * nbh, P.H.dim, P.H.dim)
    hi = _independent(hg)
    pj = _independent(pg)
    k = P.K.dim
    vals = np.zeros((len(hi), len(pj), k, k), dtype=complex)
    check = 0.0
    for p, i in enumerate(hi):
        C = np.zeros(nb * na, dtype=complex)
        C[i] = 1
        w = hat_functional(P, C.reshape(nb, na))
        for q, j in enumerate(pj):
            D = np.zeros(na2 * nbh, dtype=complex)
            D[j] = 1
            u = plain_functional(P, D.reshape(na2, nbh))
            v1, v2 = pairing(P, w, u)
            vals[p, q] = v1
            check = max(check, opnorm(v1 - v2))
    rows = vals.reshape(len(hi), -1)
    cols = np.transpose(vals, (1, 0, 2, 3)).reshape(len(pj), -1)
    return {
        "values": vals,
        "consistency": check,
        "rank_hat": rank(rows) if rows.size else 0,
        "rank_plain": rank(cols) if cols.size else 0,
        "dim_hat": leg_hat(P).dim,
        "dim_plain": leg(P).dim,
    }


# ----------------------------------------------------------------------------
# groupoid formulas (used as independent oracles)


def groupoid_mult(P: PMU, f: np.ndarray) -> np.ndarray:
    """m(f): multiplication by f on H."""
    return np.diag(np.asarray(f, dtype=complex))


def groupoid_left_conv(P: PMU, f: np.ndarray) -> np.ndarray:
    """L(f) in orthonormal coordinates: (L(f)xi)(y) = sum_x f(x) D^-1/2(x) xi(x^-1 y) lambda(x)."""
    G, lam, q = P.groupoid, P.haar.weight, P.measure
    n = G.n_arrows
    T = np.zeros((n, n), dtype=complex)
    for y in range(n):
        for x in G.range_fiber(G.r(y)):
            z = G.comp[G.inv[x], y]
            T[y, z] += f[x] * q.D[x] ** -0.5 * lam[x]
    w = np.sqrt(q.nu)
    return (w[:, None] * T) / w[None, :]


def groupoid_j(P: PMU, xi: np.ndarray) -> np.ndarray:
    """j(xi) as an operator K -> H in orthonormal coordinates."""
    G, lam = P.groupoid, P.haar.weight
    T = np.zeros((G.n_arrows, G.n_units), dtype=complex)
    T[np.arange(G.n_arrows), G.tgt] = np.asarray(xi) * np.sqrt(lam)
    return T


def groupoid_jhat(P: PMU, xi: np.ndarray) -> np.ndarray:
    """jhat(xi) as an operator K -> H in orthonormal coordinates."""
    G, lam, q = P.groupoid, P.haar.weight, P.measure
    T = np.zeros((G.n_arrows, G.n_units), dtype=complex)
    mu = q.mu
    T[np.arange(G.n_arrows), G.src] = (np.asarray(xi) * q.D ** -0.5
                                       * np.sqrt(mu[G.tgt] * lam / mu[G.src]))
    return T


def groupoid_conv_star(P: PMU, xi: np.ndarray, xi2: np.ndarray) -> np.ndarray:
    """(conj(xi) * xi2^*)(x) = sum_{y in G^{r(x)}} conj(xi(y)) xi2(x^-1 y) lambda(y)."""
    G, lam = P.groupoid, P.haar.weight
    out = np.zeros(G.n_arrows, dtype=complex)
    for x in range(G.n_arrows):
        for y in G.range_fiber(G.r(x)):
            out[x] += np.conj(xi[y]) * xi2[G.comp[G.inv[x], y]] * lam[y]
    return out


def groupoid_delta_hat_formula(P: PMU, f: np.ndarray) -> np.ndarray:
    """Multiplication by f(xy) on S, in the fast-path basis."""
    G = P.groupoid
    return np.diag([f[G.comp[x, y]] for x, y in G.composable_pairs()]).astype(complex)


def groupoid_delta_formula(P: PMU, g: np.ndarray) -> np.ndarray:
    """(Delta(L(g)) w)(x, y) = sum_z g(z) D^-1/2(z) w(z^-1 x, z^-1 y) lambda(z), on R."""
    G, lam, q = P.groupoid, P.haar.weight, P.measure
    pairs = G.range_pairs()
    idx = {p: i for i, p in enumerate(pairs)}
    T = np.zeros((len(pairs), len(pairs)), dtype=complex)
    for (x, y), i in idx.items():
        for z in G.range_fiber(G.r(x)):
            zi = G.inv[z]
            T[i, idx[(G.comp[zi, x], G.comp[zi, y])]] += g[z] * q.D[z] ** -0.5 * lam[z]
    w = np.sqrt(np.array([q.mu[G.tgt[x]] * lam[x] * lam[y] for x, y in pairs]))
    return (w[:, None] * T) / w[None, :]
