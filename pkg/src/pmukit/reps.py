"""Representations and corepresentations of a PMU, and groupoid representations.

A representation on a module (K, gamma, deltahat) is a unitary
X: K deltahat(x)alpha H -> K gamma(x)beta H.  A corepresentation on (K, gamma, delta)
is a unitary H betahat(x)gamma K -> H alpha(x)delta K; it is checked through the
representation flip X* flip of the opposite unitary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cstar import (RTP, CStarModule, assoc, compatibility_residual, flip, left_apply,
                    map_by_images, right_apply, rtp, sigma23)
from .errors import CocycleViolation, NotGroupoidPMU, PmuError
from .groupoid import FiniteGroupoid
from .legs import Functional, convolve, delta, leg
from .opspace import (DEFAULT_TOL, FHilbert, OperatorSpace, adjoint_space, containment_residual,
                      cstar_algebra_residual, equality_residual, intersection, nullspace, opnorm,
                      pair_products, product_space, row_basis, spans_space, unitarity_residual)
from .pmu import PMU, intertwining_residuals, opposite, pentagon_residual
from .report import Report

# ----------------------------------------------------------------------------
# representations


@dataclass(eq=False)
class Representation:
    P: PMU
    gamma: CStarModule  # over the base b
    deltahat: CStarModule  # over b^dagger, same Hilbert space
    X: np.ndarray
    name: str = "X"

    @property
    def K(self) -> FHilbert:
        return self.gamma.H

    @property
    def src(self) -> RTP:
        return rtp(self.deltahat, self.P.alpha)

    @property
    def dst(self) -> RTP:
        return rtp(self.gamma, self.P.beta)

    def __repr__(self) -> str:
        return f"Representation({self.name}, dim K={self.K.dim})"


def trivial_modules(P: PMU) -> tuple[CStarModule, CStarModule]:
    key = "trivial_modules"
    if key not in P.extras:
        K = P.K
        g = CStarModule(K, P.base.B, P.base, "B", validate=False)
        d = CStarModule(K, P.base.Bdag, P.base.dagger(), "Bdag", validate=False)
        P.extras[key] = (g, d)
    return P.extras[key]


def trivial_rep(P: PMU) -> Representation:
    """Psi* Phi with Phi(|b'>_1 w) = rho_alpha(b') w and Psi(|b>_1 w) = rho_beta(b) w."""
    g, d = trivial_modules(P)
    src, dst = rtp(d, P.alpha), rtp(g, P.beta)
    one = dst.ket1(np.eye(P.K.dim))  # Psi* = |1>_1 for a unital base
    imgs = np.matmul(one, P.alpha.rho_basis)
    srcs = src.ket1_basis
    # coordinates of the Bdag basis used by ket1 are those of d.alpha = Bdag
    X = map_by_images(srcs, np.tensordot(_coords_matrix(d.alpha, P.base.Bdag), imgs, axes=(1, 0)),
                      "trivial representation")
    return Representation(P, g, d, X, "1")


def _coords_matrix(target: OperatorSpace, source: OperatorSpace) -> np.ndarray:
    """Row n holds the coordinates of target.basis[n] in source.basis."""
    return np.array([source.coords(t)[0] for t in target.basis]).reshape(target.dim, source.dim)


def regular_rep(P: PMU) -> Representation:
    return Representation(P, P.alpha, P.betahat, P.V, "V")


def verify_rep(X: Representation, tol: float = DEFAULT_TOL) -> Report:
    P = X.P
    rep = Report(f"representation {X.name}")
    rep.data["dim K"] = int(X.K.dim)
    ref = "representation definition"
    rep.add("gamma module axioms", max(X.gamma.residuals().values()), tol, ref)
    rep.add("deltahat module axioms", max(X.deltahat.residuals().values()), tol, ref)
    rep.add("rho_gamma and rho_deltahat commute", compatibility_residual([X.gamma, X.deltahat]), tol, ref)
    rep.add("X unitary", unitarity_residual(X.X), tol, ref)
    for name, r in intertwining_residuals(P, X.gamma, X.deltahat, X.X).items():
        rep.add(name, r, tol, "representation intertwining")
    rep.add("pentagon", pentagon_residual(P, X.gamma, X.deltahat, X.X), tol, "representation pentagon")
    return rep


def tampered_rep(X: Representation, seed: int = 0, strength: float = 1.0) -> Representation:
    """X (Id (x) W) for a random diagonal unitary W on H that preserves alpha, beta, betahat.

    Only available when those modules are spanned by matrix units (groupoid unitaries).
    """
    P = X.P
    if P.groupoid is None:
        raise NotGroupoidPMU("tampering uses the groupoid coordinates")
    rng = np.random.default_rng(seed)
    W = np.diag(np.exp(1j * strength * rng.uniform(0, 2 * np.pi, P.H.dim)))
    T = right_apply(X.src, X.src, W, check=False)
    return Representation(P, X.gamma, X.deltahat, X.X @ T, X.name + "~")


# ----------------------------------------------------------------------------
# tensor products


def tensor_modules(X: Representation, Y: Representation) -> tuple[RTP, CStarModule, CStarModule]:
    M = rtp(X.deltahat, Y.gamma)
    return M, M.lift_left(X.gamma), M.lift_right(Y.deltahat)


def rep_tensor(X: Representation, Y: Representation) -> Representation:
    """X13 Y23 on (K deltahat(x)epsilon L) phihat(x)alpha H.

    Y23 acts after reassociating to K (x) (L (x) H); X13 is the flip of the last
    two factors, X on the first and last, and the swap of the outer factors.
    """
    P = X.P
    al, be = P.alpha, P.beta
    M, Mg, Mf = tensor_modules(X, Y)
    a, lhs, rhs = assoc(X.deltahat, Y.gamma, Y.deltahat, al)
    assert lhs is rtp(Mf, al)
    R2 = rtp(X.deltahat, rtp(Y.gamma, be).lift_right(al))
    y23 = right_apply(rhs, R2, Y.X)
    R3 = rtp(X.deltahat, rtp(be, Y.gamma).lift_left(al))
    fl = right_apply(R2, R3, flip(rtp(Y.gamma, be)))
    a3, lhs3, rhs3 = assoc(X.deltahat, al, be, Y.gamma)
    assert rhs3 is R3
    B5 = rtp(rtp(X.gamma, be).lift_left(X.deltahat), Y.gamma)
    x12 = left_apply(lhs3, B5, X.X)
    s23, src6, dst6 = sigma23(X.gamma, be, X.deltahat, Y.gamma)
    assert src6 is B5 and dst6 is rtp(Mg, be)
    Z = s23 @ x12 @ a3.conj().T @ fl @ y23 @ a
    return Representation(P, Mg, Mf, Z, f"({X.name}[x]{Y.name})")


def amplified_regular(X: Representation) -> Representation:
    """Id (x) V on (K gamma(x)beta H) with the modules gamma>alpha and gamma>betahat."""
    P = X.P
    al, be, bh = P.alpha, P.beta, P.betahat
    Kb = rtp(X.gamma, be)
    a, lhs, rhs = assoc(X.gamma, be, bh, al)
    mid = rtp(X.gamma, P.R.lift_left(be))
    v = right_apply(rhs, mid, P.V)
    a2, lhs2, rhs2 = assoc(X.gamma, be, al, be)
    assert rhs2 is mid
    return Representation(P, Kb.lift_right(al), Kb.lift_right(bh), a2.conj().T @ v @ a, "Id(x)V")


def right_unit_map(X: Representation) -> np.ndarray:
    """r: K deltahat(x) B K_frak -> K, |b>_2 w -> rho_deltahat(b) w."""
    P = X.P
    g, _ = trivial_modules(P)
    M = rtp(X.deltahat, g)
    imgs = np.tensordot(_coords_matrix(g.alpha, P.base.B), X.deltahat.rho_basis, axes=(1, 0))
    return map_by_images(M.ket2_basis, imgs, "right unit")


# ----------------------------------------------------------------------------
# morphisms


def _complement(X: OperatorSpace) -> np.ndarray:
    n = X.shape[0] * X.shape[1]
    return np.eye(n) - X.vecs.T @ X.vecs.conj()


def module_map_space(pairs: Sequence[tuple[CStarModule, CStarModule]]) -> OperatorSpace:
    """All T: K -> L with T m in n and T* n in m for every pair (m, n)."""
    m0, n0 = pairs[0]
    k, l = m0.H.dim, n0.H.dim
    rows = []
    for m, n in pairs:
        Qn = _complement(n.alpha)
        Qm_adj = _complement(adjoint_space(m.alpha))
        rows += [Qn @ np.kron(np.eye(l), xi.T) for xi in m.alpha.basis]
        rows += [Qm_adj @ np.kron(eta.conj().T, np.eye(k)) for eta in n.alpha.basis]
    N = nullspace(np.concatenate(rows))
    return OperatorSpace.span(N.T.reshape(-1, l, k), m0.H, n0.H)


def morphism_residual(T: np.ndarray, X: Representation, Y: Representation) -> float:
    """|| Y (T (x) Id) - (T (x) Id) X ||."""
    lhs = Y.X @ left_apply(X.src, Y.src, T, check=False)
    rhs = left_apply(X.dst, Y.dst, T, check=False) @ X.X
    return opnorm(lhs - rhs)


def morphism_space(X: Representation, Y: Representation) -> OperatorSpace:
    cand = module_map_space([(X.gamma, Y.gamma), (X.deltahat, Y.deltahat)])
    if cand.dim == 0:
        return cand
    cols = []
    for T in cand.basis:
        d = Y.X @ left_apply(X.src, Y.src, T, check=False) - left_apply(X.dst, Y.dst, T, check=False) @ X.X
        cols.append(d.reshape(-1))
    N = nullspace(np.array(cols).T)
    ops = (N.T @ cand.vecs).reshape(-1, *cand.shape)
    return OperatorSpace.span(ops, cand.domain, cand.codomain)


def find_isomorphism(X: Representation, Y: Representation, seed: int = 0,
                     tol: float = 1e-9) -> np.ndarray | None:
    """A unitary morphism X -> Y, or None.

    A generic element T of the morphism space is invertible when one exists, and
    the unitary part T (T* T)^(-1/2) of its polar decomposition is again a morphism.
    """
    if X.K.dim != Y.K.dim:
        return None
    Hm = morphism_space(X, Y)
    if Hm.dim == 0:
        return None
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(Hm.dim) + 1j * rng.standard_normal(Hm.dim)
    T = Hm.element(c)
    U, s, Wh = np.linalg.svd(T)
    if s[-1] <= 1e-8 * s[0]:
        return None
    W = U @ Wh
    if morphism_residual(W, X, Y) > tol * max(1.0, X.X.shape[0]) or unitarity_residual(W) > tol:
        return None
    return W


def end_trivial(P: PMU) -> OperatorSpace:
    """{b in B ∩ Bdag : rho_alpha(b) = rho_beta(b)} as a null space."""
    BB = intersection(P.base.B, P.base.Bdag)
    if BB.dim == 0:
        return BB
    cols = [(P.alpha.rho(b) - P.beta.rho(b)).reshape(-1) for b in BB.basis]
    N = nullspace(np.array(cols).T)
    return OperatorSpace.span((N.T @ BB.vecs).reshape(-1, *BB.shape), P.K, P.K)


# ----------------------------------------------------------------------------
# legs of representations


def rep_leg_hat(X: Representation) -> OperatorSpace:
    """[<beta|_2 X |alpha>_2] in L(K)."""
    left = np.conj(np.swapaxes(X.dst.ket2_basis, 1, 2)) @ X.X
    gens = pair_products(left, X.src.ket2_basis)
    return OperatorSpace.span(gens.reshape(-1, X.K.dim, X.K.dim), X.K, X.K)


def rep_leg(X: Representation) -> OperatorSpace:
    """[<gamma|_1 X |deltahat>_1] in L(H)."""
    P = X.P
    left = np.conj(np.swapaxes(X.dst.ket1_basis, 1, 2)) @ X.X
    gens = pair_products(left, X.src.ket1_basis)
    return OperatorSpace.span(gens.reshape(-1, P.H.dim, P.H.dim), P.H, P.H)


def rep_legs(X: Representation) -> tuple[OperatorSpace, OperatorSpace]:
    return rep_leg_hat(X), rep_leg(X)


def trivial_leg_hat(P: PMU) -> OperatorSpace:
    """[beta* alpha] in L(K_frak)."""
    return product_space(P.beta.alpha.adjoint(), P.alpha.alpha)


def pi_hat_rep(X: Representation, w: Functional) -> np.ndarray:
    """sum C_ij <xi_i|_2 X |xi'_j>_2 for a functional w over (beta, alpha)."""
    left = np.conj(np.swapaxes(X.dst.ket2_basis, 1, 2)) @ X.X
    cb = _coords_matrix(w.left, X.P.beta.alpha)
    ca = _coords_matrix(w.right, X.P.alpha.alpha)
    M = cb.conj().T @ w.C @ ca
    return np.einsum("kl,kab,lbc->ac", M, left, X.src.ket2_basis, optimize=True)


def _mul_res(X: OperatorSpace, Y: OperatorSpace, Z: OperatorSpace) -> float:
    return equality_residual(product_space(X, Y), Z)


def _stable(rep: Report, tag: str, A: OperatorSpace, R: OperatorSpace, rname: str, tol: float, ref: str):
    rep.add(f"[{tag} {rname}] = {tag}", _mul_res(A, R, A), tol, ref)
    rep.add(f"[{rname} {tag}] = {tag}", _mul_res(R, A, A), tol, ref)


def _ket_space(kets: np.ndarray, ops: OperatorSpace, dom: FHilbert, cod: FHilbert) -> OperatorSpace:
    prods = pair_products(kets, ops.basis)
    return OperatorSpace.span(prods.reshape(-1, cod.dim, dom.dim), dom, cod)


def verify_rep_legs(X: Representation, tol: float = DEFAULT_TOL) -> Report:
    P = X.P
    rep = Report(f"representation legs {X.name}")
    Ah, A = rep_legs(X)
    rep.data["dim Ahat_X"] = int(Ah.dim)
    rep.data["dim A_X"] = int(A.dim)
    ref = "representation legs"
    A1 = trivial_leg_hat(P)
    g, d = X.gamma.alpha, X.deltahat.alpha
    rep.add("[Ahat_X Ahat_X] = Ahat_X", _mul_res(Ah, Ah, Ah), tol, ref)
    rep.add("[Ahat_X K] = K", spans_space(Ah), tol, ref)
    rep.add("[Ahat_X gamma] = [gamma Ahat_1]", equality_residual(product_space(Ah, g), product_space(g, A1)),
            tol, ref)
    rep.add("[Ahat_X* deltahat] = [deltahat Ahat_1*]",
            equality_residual(product_space(Ah.adjoint(), d), product_space(d, A1.adjoint())), tol, ref)
    _stable(rep, "Ahat_X", Ah, X.deltahat.rho_space(), "rho_deltahat(B)", tol, ref)
    _stable(rep, "Ahat_X", Ah, X.gamma.rho_space(), "rho_gamma(Bdag)", tol, ref)
    selfadj = equality_residual(Ah, Ah.adjoint())
    rep.add("Ahat_X = Ahat_X*", selfadj, tol, "semi-regular consequences")
    if selfadj <= tol:
        rep.add("Ahat_X is a C*-algebra", cstar_algebra_residual(Ah), tol, ref)
    bh, be, al = P.betahat.alpha, P.beta.alpha, P.alpha.alpha
    rep.add("[A_X betahat] = betahat", _mul_res(A, bh, bh), tol, ref)
    rep.add("[A_X beta] = [beta gamma* deltahat]",
            equality_residual(product_space(A, be), product_space(be, product_space(g.adjoint(), d))), tol, ref)
    rep.add("[A_X* alpha] = [alpha deltahat* gamma]",
            equality_residual(product_space(A.adjoint(), al), product_space(al, product_space(d.adjoint(), g))),
            tol, ref)
    AV = leg(P)
    rep.add("[A_X A_V] = A_V", _mul_res(A, AV, AV), tol, ref)
    _stable(rep, "A_X", A, P.beta.rho_space(), "rho_beta(B)", tol, ref)
    _stable(rep, "A_X", A, P.alpha.rho_space(), "rho_alpha(Bdag)", tol, ref)
    R = P.R
    kb = _ket_space(R.ket2_basis, A, P.H, R.space)  # [|beta>_2 A_X]
    ka = _ket_space(R.ket1_basis, A.adjoint(), P.H, R.space)  # [|alpha>_1 A_X*]
    img_b = np.array([delta(P, x) @ k for x in A.basis for k in R.ket2_basis])
    img_a = np.array([delta(P, x.conj().T) @ k for x in A.basis for k in R.ket1_basis])
    rep.add("[Delta(A_X)|beta>_2] in [|beta>_2 A_X]",
            containment_residual(kb, OperatorSpace.span(img_b, P.H, R.space)), tol, ref)
    rep.add("[Delta(A_X*)|alpha>_1] in [|alpha>_1 A_X*]",
            containment_residual(ka, OperatorSpace.span(img_a, P.H, R.space)), tol, ref)
    return rep


def verify_pi_hat_rep(X: Representation, tol: float = DEFAULT_TOL, seed: int = 0, samples: int = 2) -> Report:
    """pi_hat_X is multiplicative on convolutions and lands in Ahat_X."""
    P = X.P
    rep = Report(f"pi_hat {X.name}")
    rng = np.random.default_rng(seed)
    Ah = rep_leg_hat(X)
    mult = member = 0.0
    for _ in range(samples):
        w = Functional.random(P.beta.alpha, P.alpha.alpha, rng)
        w2 = Functional.random(P.beta.alpha, P.alpha.alpha, rng)
        ww = convolve(P, w, w2)
        a, b, ab = pi_hat_rep(X, w), pi_hat_rep(X, w2), pi_hat_rep(X, ww)
        mult = max(mult, opnorm(ab - a @ b) / max(1.0, opnorm(a) * opnorm(b)))
        member = max(member, Ah.member_residual(a) / max(1.0, opnorm(a)))
    rep.add("pi_hat_X(w * w2) = pi_hat_X(w) pi_hat_X(w2)", mult, tol, "convolution representation")
    rep.add("pi_hat_X(w) in Ahat_X", member, tol, "convolution representation")
    return rep


def verify_rep_category(X: Representation, Y: Representation | None = None, tol: float = DEFAULT_TOL,
                        seed: int = 0) -> Report:
    """Tensor product, unit, absorption and End(1) checks around a representation X."""
    P = X.P
    rep = Report(f"representation category {X.name}")
    one = trivial_rep(P)
    Vr = regular_rep(P)
    Y = Y or Vr
    XY = rep_tensor(X, Y)
    rep.extend(verify_rep(XY, tol), prefix="X[x]Y: ")
    rep.add("A_(X[x]Y) = [A_X A_Y]",
            equality_residual(rep_leg(XY), product_space(rep_leg(X), rep_leg(Y))), tol, "tensor legs")
    # right unit: X [x] 1 is isomorphic to X through r
    X1 = rep_tensor(X, one)
    r = right_unit_map(X)
    Xr = Representation(P, X.gamma, X.deltahat, X.X, X.name)
    rep.add("r unitary", unitarity_residual(r), tol, "tensor unit")
    rep.add("r: X[x]1 -> X is a morphism", morphism_residual(r, X1, Xr), tol, "tensor unit")
    # absorption: X itself is an isomorphism X [x] V -> Id (x) V
    XV = rep_tensor(X, Vr)
    amp = amplified_regular(X)
    rep.extend(verify_rep(amp, tol), prefix="Id(x)V: ")
    rep.add("X: X[x]V -> Id(x)V is a morphism", morphism_residual(X.X, XV, amp), tol, "absorption")
    # End(1)
    E = end_trivial(P)
    M = morphism_space(one, one)
    rep.data["dim End(1)"] = int(E.dim)
    rep.add("End(1) = morphisms 1 -> 1", equality_residual(E, M), tol, "endomorphisms of the unit")
    return rep


# ----------------------------------------------------------------------------
# corepresentations


@dataclass(eq=False)
class Corepresentation:
    P: PMU
    gamma: CStarModule  # over b
    delta: CStarModule  # over b^dagger
    X: np.ndarray  # H betahat(x)gamma K -> H alpha(x)delta K
    name: str = "C"

    @property
    def K(self) -> FHilbert:
        return self.gamma.H

    @property
    def src(self) -> RTP:
        return rtp(self.P.betahat, self.gamma)

    @property
    def dst(self) -> RTP:
        return rtp(self.P.alpha, self.delta)

    def as_rep_op(self) -> Representation:
        """(K, gamma, delta) with flip X* flip, a representation of V^op."""
        O = opposite(self.P)
        f1 = flip(rtp(self.delta, self.P.alpha))
        f2 = flip(self.src)
        return Representation(O, self.gamma, self.delta, f2 @ self.X.conj().T @ f1, self.name + "'")


def corep_from_rep_op(P: PMU, Y: Representation) -> Corepresentation:
    """Inverse of Corepresentation.as_rep_op; Y is a representation of opposite(P)."""
    f1 = flip(rtp(Y.deltahat, P.alpha))
    f2 = flip(rtp(P.betahat, Y.gamma))
    return Corepresentation(P, Y.gamma, Y.deltahat, f1 @ Y.X.conj().T @ f2, Y.name)


def verify_corep(C: Corepresentation, tol: float = DEFAULT_TOL) -> Report:
    rep = verify_rep(C.as_rep_op(), tol)
    rep.title = f"corepresentation {C.name}"
    return rep


def trivial_corep(P: PMU) -> Corepresentation:
    return corep_from_rep_op(P, trivial_rep(opposite(P)))


def regular_corep(P: PMU) -> Corepresentation:
    return Corepresentation(P, P.alpha, P.beta, P.V, "V")


def corep_tensor(C: Corepresentation, D: Corepresentation) -> Corepresentation:
    return corep_from_rep_op(C.P, rep_tensor(C.as_rep_op(), D.as_rep_op()))


def corep_morphism_space(C: Corepresentation, D: Corepresentation) -> OperatorSpace:
    return morphism_space(C.as_rep_op(), D.as_rep_op())


def corep_isomorphism(C: Corepresentation, D: Corepresentation, seed: int = 0) -> np.ndarray | None:
    return find_isomorphism(C.as_rep_op(), D.as_rep_op(), seed)


# ----------------------------------------------------------------------------
# representations of a finite groupoid


@dataclass
class GroupoidRep:
    """Fibers C^{dims[u]} and unitaries U[x]: E_{s(x)} -> E_{r(x)}."""

    G: FiniteGroupoid
    dims: tuple[int, ...]
    U: list[np.ndarray] = field(default_factory=list)

    def residuals(self) -> dict[str, float]:
        G = self.G
        units = max((opnorm(self.U[G.unit_arrow[u]] - np.eye(self.dims[u])) for u in range(G.n_units)),
                    default=0.0)
        unit = max((unitarity_residual(u) for u in self.U), default=0.0)
        mult = max((opnorm(self.U[x] @ self.U[y] - self.U[G.comp[x, y]]) for x, y in G.composable_pairs()),
                   default=0.0)
        return {"units": units, "unitary": unit, "multiplicative": mult}

    def validate(self, tol: float = 1e-9) -> "GroupoidRep":
        if len(self.U) != self.G.n_arrows or len(self.dims) != self.G.n_units:
            raise CocycleViolation("one unitary per arrow and one dimension per unit are needed")
        for u, x in enumerate(self.U):
            if x.shape != (self.dims[self.G.tgt[u]], self.dims[self.G.src[u]]):
                raise CocycleViolation(f"U[{self.G.arrows[u]}] has shape {x.shape}")
        for k, v in self.residuals().items():
            if v > tol:
                raise CocycleViolation(f"{k}: residual {v:.2e}")
        return self


def trivial_bundle(G: FiniteGroupoid) -> GroupoidRep:
    return GroupoidRep(G, (1,) * G.n_units, [np.eye(1, dtype=complex) for _ in range(G.n_arrows)])


def left_regular_bundle(G: FiniteGroupoid) -> GroupoidRep:
    """E_u = l2(G^u) with U_x delta_y = delta_{xy}."""
    fib = [G.range_fiber(u) for u in range(G.n_units)]
    pos = [{y: i for i, y in enumerate(f)} for f in fib]
    U = []
    for x in range(G.n_arrows):
        s, r = G.src[x], G.tgt[x]
        M = np.zeros((len(fib[r]), len(fib[s])), dtype=complex)
        for i, y in enumerate(fib[s]):
            M[pos[r][G.comp[x, y]], i] = 1
        U.append(M)
    return GroupoidRep(G, tuple(len(f) for f in fib), U)


def character_bundle(G: FiniteGroupoid, k: int) -> GroupoidRep:
    """The character g -> exp(2 pi i k g / n) of a cyclic group Z/n (arrows in table order)."""
    if G.n_units != 1:
        raise CocycleViolation("characters are defined here for cyclic groups only")
    n = G.n_arrows
    e = G.unit_arrow[0]
    # generator: an arrow of order n
    order = []
    for x in range(n):
        y, m = x, 1
        while y != e:
            y, m = G.comp[y, x], m + 1
        order.append(m if x != e else 1)
    gen = int(np.argmax(order))
    if order[gen] != n:
        raise CocycleViolation("the group is not cyclic")
    U = [None] * n
    y = e
    for m in range(n):
        U[y] = np.array([[np.exp(2j * np.pi * k * m / n)]])
        y = G.comp[gen, y]
    return GroupoidRep(G, (1,), U)


def conjugated_bundle(R: GroupoidRep, W: Sequence[np.ndarray]) -> GroupoidRep:
    """The isomorphic representation W_{r(x)} U_x W_{s(x)}*."""
    G = R.G
    return GroupoidRep(G, R.dims, [W[G.tgt[x]] @ u @ W[G.src[x]].conj().T for x, u in enumerate(R.U)])


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, Rm = np.linalg.qr(A)
    return Q * (np.diag(Rm) / np.abs(np.diag(Rm)))


def bundle_tensor(R1: GroupoidRep, R2: GroupoidRep) -> GroupoidRep:
    return GroupoidRep(R1.G, tuple(a * b for a, b in zip(R1.dims, R2.dims)),
                       [np.kron(a, b) for a, b in zip(R1.U, R2.U)])


def bundle_direct_sum(R1: GroupoidRep, R2: GroupoidRep) -> GroupoidRep:
    U = []
    for a, b in zip(R1.U, R2.U):
        M = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
        M[:a.shape[0], :a.shape[1]] = a
        M[a.shape[0]:, a.shape[1]:] = b
        U.append(M)
    return GroupoidRep(R1.G, tuple(a + b for a, b in zip(R1.dims, R2.dims)), U)


def bundle_morphisms(R1: GroupoidRep, R2: GroupoidRep) -> list[list[np.ndarray]]:
    """Basis of {(T_u) : U2_x T_{s(x)} = T_{r(x)} U1_x} as lists of per-unit blocks."""
    G = R1.G
    shapes = [(R2.dims[u], R1.dims[u]) for u in range(G.n_units)]
    offs = np.cumsum([0] + [a * b for a, b in shapes])
    n = int(offs[-1])
    rows = []
    for x in range(G.n_arrows):
        s, r = G.src[x], G.tgt[x]
        A = np.zeros((shapes[r][0] * shapes[s][1], n), dtype=complex)
        # vec(U2 T_s) = kron(U2, I) vec T_s ; vec(T_r U1) = kron(I, U1^T) vec T_r
        A[:, offs[s]:offs[s + 1]] += np.kron(R2.U[x], np.eye(shapes[s][1]))
        A[:, offs[r]:offs[r + 1]] -= np.kron(np.eye(shapes[r][0]), R1.U[x].T)
        rows.append(A)
    N = nullspace(np.concatenate(rows)) if rows else np.eye(n)
    out = []
    for v in row_basis(N.T):
        out.append([v[offs[u]:offs[u + 1]].reshape(shapes[u]) for u in range(G.n_units)])
    return out


# ----------------------------------------------------------------------------
# the functors between groupoid representations and corepresentations


def _require_groupoid(P: PMU) -> FiniteGroupoid:
    if P.groupoid is None:
        raise NotGroupoidPMU("this construction needs the unitary of a groupoid")
    return P.groupoid


def _fiber_index(dims: Sequence[int]) -> list[int]:
    return list(np.cumsum([0] + list(dims)))


def corep_from_groupoid_rep(P: PMU, R: GroupoidRep, validate: bool = True) -> Corepresentation:
    """K = sum of the fibers; gamma = delta = the sections; X = (e_x (x) v -> e_x (x) U_x v)."""
    G = _require_groupoid(P)
    if validate:
        R.validate()
    off = _fiber_index(R.dims)
    n = off[-1]
    K = FHilbert("K", tuple(f"{G.units[u]}:{i}" for u in range(G.n_units) for i in range(R.dims[u])))
    ops = np.zeros((n, n, G.n_units), dtype=complex)
    for u in range(G.n_units):
        for i in range(R.dims[u]):
            ops[off[u] + i, off[u] + i, u] = 1
    sp = OperatorSpace(P.K, K, ops)
    gamma = CStarModule(K, sp, P.base, "gamma")
    delta = CStarModule(K, sp, P.base.dagger(), "delta")
    src, dst = rtp(P.betahat, gamma), rtp(P.alpha, delta)
    srcs, dsts = [], []
    for x in range(G.n_arrows):
        s, r = G.src[x], G.tgt[x]
        Eh = np.zeros((G.n_arrows, G.n_units))
        Eh[x, s] = 1
        Ea = np.zeros((G.n_arrows, G.n_units))
        Ea[x, r] = 1
        ks, kd = src.ket1(Eh), dst.ket1(Ea)
        for i in range(R.dims[s]):
            srcs.append(ks[:, off[s] + i])
            dsts.append(kd[:, off[r]:off[r + 1]] @ R.U[x][:, i])
    X = map_by_images(np.array(srcs)[:, :, None], np.array(dsts)[:, :, None], "corepresentation")
    return Corepresentation(P, gamma, delta, X, "F(R)")


@dataclass
class GroupoidRepData:
    rep: GroupoidRep
    fibers: list[np.ndarray]  # orthonormal bases of the fibers [gamma e_u] inside K


def groupoid_rep_from_corep(P: PMU, C: Corepresentation, tol: float = 1e-8) -> GroupoidRepData:
    """U_x[f, v] = < |f><e_r|  >_2 e_x , X |v><e_s| >_2 e_x >, fibers E_u = [gamma e_u]."""
    G = _require_groupoid(P)
    if equality_residual(C.gamma.alpha, C.delta.alpha) > tol:
        raise PmuError("gamma and delta differ; not a corepresentation of a groupoid unitary")
    fibers = []
    for u in range(G.n_units):
        vecs = C.gamma.alpha.basis[:, :, u]
        fibers.append(row_basis(vecs).T)  # (k, d_u)
    src, dst = C.src, C.dst
    U = []
    for x in range(G.n_arrows):
        s, r = G.src[x], G.tgt[x]
        ex = np.zeros(G.n_arrows)
        ex[x] = 1
        es = np.zeros(G.n_units)
        es[s] = 1
        er = np.zeros(G.n_units)
        er[r] = 1
        ins = np.array([src.ket2(np.outer(v, es)) @ ex for v in fibers[s].T]).reshape(-1, src.dim)
        outs = np.array([dst.ket2(np.outer(f, er)) @ ex for f in fibers[r].T]).reshape(-1, dst.dim)
        U.append(outs.conj() @ C.X @ ins.T)
    return GroupoidRepData(GroupoidRep(G, tuple(f.shape[1] for f in fibers), U), fibers)


def F_morphism(R1: GroupoidRep, R2: GroupoidRep, T: Sequence[np.ndarray]) -> np.ndarray:
    """Id (x) T: block diagonal over the units."""
    o1, o2 = _fiber_index(R1.dims), _fiber_index(R2.dims)
    M = np.zeros((o2[-1], o1[-1]), dtype=complex)
    for u, t in enumerate(T):
        M[o2[u]:o2[u + 1], o1[u]:o1[u + 1]] = t
    return M


def G_morphism(D1: GroupoidRepData, D2: GroupoidRepData, T: np.ndarray) -> list[np.ndarray]:
    """Restriction of T to the fibers."""
    return [f2.conj().T @ T @ f1 for f1, f2 in zip(D1.fibers, D2.fibers)]


def bundle_morphism_residual(R1: GroupoidRep, R2: GroupoidRep, T: Sequence[np.ndarray]) -> float:
    G = R1.G
    return max((opnorm(R2.U[x] @ T[G.src[x]] - T[G.tgt[x]] @ R1.U[x]) for x in range(G.n_arrows)),
               default=0.0)


def round_trip_rep(P: PMU, R: GroupoidRep) -> Report:
    """G(F(R)) is isomorphic to R through the explicit fiber identification."""
    rep = Report("G(F(R)) ~ R")
    C = corep_from_groupoid_rep(P, R)
    D = groupoid_rep_from_corep(P, C)
    off = _fiber_index(R.dims)
    T = [D.fibers[u].conj().T[:, off[u]:off[u + 1]] for u in range(R.G.n_units)]  # E_u -> fiber of G(F(R))
    rep.add("G(F(R)) is a representation", max(D.rep.residuals().values()), 1e-9, "functor G")
    rep.add("identification unitary", max((unitarity_residual(t) for t in T), default=0.0), 1e-9, "equivalence")
    rep.add("identification intertwines", bundle_morphism_residual(R, D.rep, T), 1e-9, "equivalence")
    return rep


def round_trip_corep(P: PMU, C: Corepresentation) -> Report:
    """F(G(C)) is isomorphic to C through W: e_(u,i) -> i-th basis vector of [gamma e_u]."""
    rep = Report("F(G(C)) ~ C")
    D = groupoid_rep_from_corep(P, C)
    C2 = corep_from_groupoid_rep(P, D.rep)
    W = np.concatenate(D.fibers, axis=1)
    rep.add("W unitary", unitarity_residual(W), 1e-9, "equivalence")
    rep.add("W gamma' = gamma", equality_residual(C.gamma.alpha, C2.gamma.alpha.left_mul(W, C.K)), 1e-9,
            "equivalence")
    rep.add("W intertwines", morphism_residual(W, C2.as_rep_op(), C.as_rep_op()), 1e-9, "equivalence")
    return rep


def character_morphism_dims(P: PMU) -> np.ndarray:
    """dim Hom(F(chi_j), F(chi_k)) for the characters of a cyclic group."""
    G = _require_groupoid(P)
    n = G.n_arrows
    C = [corep_from_groupoid_rep(P, character_bundle(G, k)) for k in range(n)]
    out = np.zeros((n, n), dtype=int)
    for j in range(n):
        for k in range(n):
            out[j, k] = corep_morphism_space(C[j], C[k]).dim
    return out
