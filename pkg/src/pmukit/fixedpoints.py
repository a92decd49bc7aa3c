"""Fixed and cofixed elements, counits and bounded Haar weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cstar import RTP, CStarModule
from .errors import NotInAlgebra, NotNormalizedCofixed, NotNormalizedFixed
from .legs import delta_hat, hat_generators, leg, leg_hat
from .opspace import (DEFAULT_TOL, OperatorSpace, containment_residual, cstar_algebra_residual,
                      equality_residual, is_commutative, nullspace, opnorm, product_space)
from .pmu import PMU, opposite
from .report import Report


# ----------------------------------------------------------------------------
# multiplier sets


def _complement_projector(X: OperatorSpace) -> np.ndarray:
    n = X.shape[0] * X.shape[1]
    return np.eye(n) - X.vecs.T @ X.vecs.conj()


def _multiplier_constraints(mod: CStarModule) -> np.ndarray:
    """Linear conditions on vec(T) for T B in mod and mod* T in B (row-major vec)."""
    h, k = mod.H.dim, mod.base.K.dim
    B = mod.base.B
    Qa = _complement_projector(mod.alpha)
    Qb = _complement_projector(B)
    eye_h, eye_k = np.eye(h), np.eye(k)
    rows = [Qa @ np.kron(eye_h, b.T) for b in B.basis]
    rows += [Qb @ np.kron(xi.conj().T, eye_k) for xi in mod.alpha.basis]
    return np.concatenate(rows) if rows else np.zeros((0, h * k))


def multiplier_set(*mods: CStarModule) -> OperatorSpace:
    """M(m1) ∩ M(m2) ∩ ... with M(m) = {T : T B ⊆ m, T* m ⊆ B}, B the algebra m is a module over."""
    h, k = mods[0].H.dim, mods[0].base.K.dim
    N = nullspace(np.concatenate([_multiplier_constraints(m) for m in mods]))
    return OperatorSpace.span(N.T.reshape(-1, h, k), mods[0].base.K, mods[0].H)


# ----------------------------------------------------------------------------
# fixed and cofixed spaces


@dataclass
class FixedData:
    """A fixed or cofixed space together with a normalized element when one exists."""

    side: str  # "fix" or "cofix"
    space: OperatorSpace  # K -> H
    multipliers: OperatorSpace
    normalized: np.ndarray | None

    @property
    def basis(self) -> np.ndarray:
        return self.space.basis

    @property
    def dim(self) -> int:
        return self.space.dim


def _legs(P: PMU, side: str) -> tuple[RTP, RTP, str]:
    return (P.S, P.R, "ket1") if side == "fix" else (P.S, P.R, "ket2")


def defining_residual(P: PMU, side: str, x: np.ndarray) -> float:
    """|| V|x>_i - |x>_i || with i = 1 for fixed and i = 2 for cofixed elements."""
    S, R, which = _legs(P, side)
    return opnorm(P.V @ getattr(S, which)(x) - getattr(R, which)(x))


def _solve_fixed(P: PMU, side: str) -> tuple[OperatorSpace, OperatorSpace]:
    mods = (P.betahat, P.alpha) if side == "fix" else (P.alpha, P.beta)
    M = multiplier_set(*mods)
    if M.dim == 0:
        return M, M
    S, R, which = _legs(P, side)
    cols = [(P.V @ getattr(S, which)(m) - getattr(R, which)(m)).reshape(-1) for m in M.basis]
    N = nullspace(np.array(cols).T)
    ops = (N.T @ M.vecs).reshape(-1, *M.shape)
    return OperatorSpace.span(ops, M.domain, M.codomain), M


def normalized_element(space: OperatorSpace, seed: int = 0, tol: float = 1e-9) -> np.ndarray | None:
    """Some x in the span with x* x = Id, or None.

    [X* X] is a commutative C*-algebra and X is a right module over it.  The
    spectral projections p_i of a generic self-adjoint element are its minimal
    projections; x_k p_i / sqrt(c) with x_k* x_k p_i = c p_i are partial
    isometries with orthogonal supports, and their sum is normalized exactly
    when the p_i add up to the identity.
    """
    k = space.domain.dim
    if space.dim == 0:
        return None if k else np.zeros(space.shape, dtype=complex)
    X = space.basis
    G = np.conj(np.swapaxes(X, 1, 2))[:, None] @ X[None]  # (n, n, K, K)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    C = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    C = C + C.conj().T
    h = np.tensordot(C, G, axes=([0, 1], [0, 1]))
    h = (h + h.conj().T) / 2
    w, U = np.linalg.eigh(h)
    scale = max(float(np.max(np.abs(w))), 1.0)
    gap = 1e-7 * scale
    groups: list[list[int]] = []
    for i in range(k):
        if groups and abs(w[i] - w[groups[-1][-1]]) <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    norms = np.einsum("nab->n", np.abs(X) ** 2) ** 0.5
    out = np.zeros(space.shape, dtype=complex)
    for g in groups:
        if all(abs(w[i]) <= gap for i in g):
            return None  # a support projection is missing
        Ug = U[:, g]
        p = Ug @ Ug.conj().T
        # eigenvalue of each x_k* x_k on p
        vals = np.real(np.einsum("ai,nab,bi->n", Ug.conj(), np.conj(np.swapaxes(X, 1, 2)) @ X, Ug)) / len(g)
        best = int(np.argmax(vals / np.maximum(norms, 1e-300) ** 2))
        if vals[best] <= tol:
            return None
        out += X[best] @ p / np.sqrt(vals[best])
    if opnorm(out.conj().T @ out - np.eye(k)) > 1e-7:
        return None
    return out


def fixed_space(P: PMU, seed: int = 0) -> FixedData:
    def build():
        sp, M = _solve_fixed(P, "fix")
        return FixedData("fix", sp, M, normalized_element(sp, seed))
    return _cached(P, f"fixed:{seed}", build)


def cofixed_space(P: PMU, seed: int = 0) -> FixedData:
    def build():
        sp, M = _solve_fixed(P, "cofix")
        return FixedData("cofix", sp, M, normalized_element(sp, seed))
    return _cached(P, f"cofixed:{seed}", build)


def _cached(P: PMU, key: str, fn):
    if key not in P.extras:
        P.extras[key] = fn()
    return P.extras[key]


def is_etale(P: PMU) -> bool:
    return fixed_space(P).normalized is not None


def is_proper(P: PMU) -> bool:
    return cofixed_space(P).normalized is not None


def base_is_unital(P: PMU, tol: float = DEFAULT_TOL) -> bool:
    eye = np.eye(P.K.dim)
    return P.base.B.member_residual(eye) <= tol and P.base.Bdag.member_residual(eye) <= tol


def is_compact(P: PMU) -> bool:
    # finite-dimensional bases are always unital; kept for the definition's sake
    return is_proper(P) and base_is_unital(P)


# ----------------------------------------------------------------------------
# counit


class Counit:
    """a -> eta0* a eta0 on the hat leg, for a normalized fixed element eta0."""

    def __init__(self, P: PMU, eta0: np.ndarray, tol: float = 1e-8):
        eta0 = np.asarray(eta0, dtype=complex)
        if eta0.shape != (P.H.dim, P.K.dim):
            raise NotNormalizedFixed("eta0 must be an operator K -> H")
        if opnorm(eta0.conj().T @ eta0 - np.eye(P.K.dim)) > tol:
            raise NotNormalizedFixed("eta0* eta0 is not the identity")
        try:
            res = defining_residual(P, "fix", eta0)
        except NotInAlgebra as e:
            raise NotNormalizedFixed(str(e)) from e
        if res > tol:
            raise NotNormalizedFixed(f"eta0 is not fixed: residual {res:.2e}")
        self.P = P
        self.eta0 = eta0

    def __call__(self, a: np.ndarray) -> np.ndarray:
        return self.eta0.conj().T @ a @ self.eta0


def counit(P: PMU, eta0: np.ndarray | None = None) -> Counit:
    if eta0 is None:
        eta0 = fixed_space(P).normalized
        if eta0 is None:
            raise NotNormalizedFixed("the unitary is not etale")
    return Counit(P, eta0)


def _random_elements(X: OperatorSpace, rng: np.random.Generator, n: int) -> np.ndarray:
    C = rng.standard_normal((n, X.dim)) + 1j * rng.standard_normal((n, X.dim))
    return np.tensordot(C, X.basis, axes=(1, 0))


def verify_counit(P: PMU, eps: Counit | None = None, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    eps = eps or counit(P)
    rep = Report(f"counit {P.name}")
    ref = "counit from a fixed element"
    Ah = leg_hat(P)
    gens = Ah.basis
    vals = np.array([eps(a) for a in gens])
    prod = np.matmul(gens[:, None], gens[None])
    vprod = np.array([[eps(x) for x in row] for row in prod])
    rep.add("multiplicative", float(np.max(np.abs(vprod - np.matmul(vals[:, None], vals[None])), initial=0)),
            tol, ref)
    rep.add("*-preserving", max((opnorm(eps(a.conj().T) - eps(a).conj().T) for a in gens), default=0.0),
            tol, ref)
    S = P.S
    k1, k2 = S.ket1(eps.eta0), S.ket2(eps.eta0)
    left = right = 0.0
    for a in gens:
        d = delta_hat(P, a)
        left = max(left, opnorm(k1.conj().T @ d @ k1 - a))
        right = max(right, opnorm(k2.conj().T @ d @ k2 - a))
    rep.add("<eta0|_1 Delta_hat(a) |eta0>_1 = a", left, tol, "counit diagram")
    rep.add("<eta0|_2 Delta_hat(a) |eta0>_2 = a", right, tol, "counit diagram")
    rng = np.random.default_rng(seed)
    # pi_hat of the trivial representation is C -> sum C_ij beta_i* alpha_j
    b, a = P.beta.alpha.basis, P.alpha.alpha.basis
    HG = hat_generators(P)
    worst = 0.0
    for _ in range(3):
        C = rng.standard_normal((b.shape[0], a.shape[0])) + 1j * rng.standard_normal((b.shape[0], a.shape[0]))
        triv = np.einsum("ij,iba,jbc->ac", C, b.conj(), a)
        worst = max(worst, opnorm(eps(np.tensordot(C, HG, axes=([0, 1], [0, 1]))) - triv))
    rep.add("counit o pi_hat_V = pi_hat_1", worst, tol, ref)
    xs = _random_elements(Ah, rng, 4)
    rep.add("contractive", max(max(opnorm(eps(x)) - opnorm(x), 0.0) for x in xs), tol, ref)
    eye = np.eye(P.H.dim)
    if Ah.member_residual(eye) <= tol:
        rep.add("counit(Id) = Id", opnorm(eps(eye) - np.eye(P.K.dim)), tol, ref)
    return rep


# ----------------------------------------------------------------------------
# Haar weight


class HaarWeight:
    """a -> xi0* a xi0 on the hat leg, for a cofixed element xi0."""

    def __init__(self, P: PMU, xi0: np.ndarray, tol: float = 1e-8, require_normalized: bool = True):
        xi0 = np.asarray(xi0, dtype=complex)
        if xi0.shape != (P.H.dim, P.K.dim):
            raise NotNormalizedCofixed("xi0 must be an operator K -> H")
        if require_normalized and opnorm(xi0.conj().T @ xi0 - np.eye(P.K.dim)) > tol:
            raise NotNormalizedCofixed("xi0* xi0 is not the identity")
        try:
            res = defining_residual(P, "cofix", xi0)
        except NotInAlgebra as e:
            raise NotNormalizedCofixed(str(e)) from e
        if res > tol:
            raise NotNormalizedCofixed(f"xi0 is not cofixed: residual {res:.2e}")
        self.P = P
        self.xi0 = xi0

    def __call__(self, a: np.ndarray) -> np.ndarray:
        return self.xi0.conj().T @ a @ self.xi0


def groupoid_cofixed_normalized(P: PMU) -> np.ndarray:
    """j(c) with c(x) = (lambda-mass of the fiber over s(x))^(-1/2); constant on orbits."""
    G, lam = P.groupoid, P.haar.weight
    mass = np.array([sum(lam[x] for x in G.range_fiber(u)) for u in range(G.n_units)])
    T = np.zeros((G.n_arrows, G.n_units), dtype=complex)
    T[np.arange(G.n_arrows), G.tgt] = np.sqrt(lam) / np.sqrt(mass[G.src])
    return T


def haar_weight(P: PMU, xi0: np.ndarray | None = None) -> HaarWeight:
    if xi0 is None:
        if P.groupoid is not None and P.haar is not None:
            xi0 = groupoid_cofixed_normalized(P)
        else:
            xi0 = cofixed_space(P).normalized
            if xi0 is None:
                raise NotNormalizedCofixed("the unitary is not proper")
    return HaarWeight(P, xi0)


def fiber_sum_haar_weight(P: PMU) -> HaarWeight:
    """The un-normalized groupoid weight f -> (u -> sum over G^u of f dlambda), from xi1 = j(1)."""
    G = P.groupoid
    T = np.zeros((G.n_arrows, G.n_units), dtype=complex)
    T[np.arange(G.n_arrows), G.tgt] = np.sqrt(P.haar.weight)
    return HaarWeight(P, T, require_normalized=False)


def verify_left_haar(P: PMU, phi: HaarWeight | None = None, tol: float = DEFAULT_TOL, seed: int = 0,
                     contraction: bool = True) -> Report:
    phi = phi or haar_weight(P)
    rep = Report(f"left Haar weight {P.name}")
    ref = "Haar weight from a cofixed element"
    Ah = leg_hat(P)
    gens = Ah.basis
    vals = np.array([phi(a) for a in gens])
    Bd = P.base.Bdag
    rep.add("values in Bdag", max((Bd.member_residual(v) for v in vals), default=0.0), tol, ref)
    # module property on both sides, for rho_beta(B) and rho_alpha(Bdag)
    for mod in (P.beta, P.alpha):
        rb = mod.rho_basis
        coeff = mod.base.Bdag.basis
        r1 = r2 = 0.0
        for a, va in zip(gens, vals):
            for b, rhob in zip(coeff, rb):
                r1 = max(r1, opnorm(phi(a @ rhob) - va @ b))
                r2 = max(r2, opnorm(phi(rhob @ a) - b @ va))
        rep.add(f"phi(a rho_{mod.name}(b)) = phi(a) b", r1, tol, ref)
        rep.add(f"phi(rho_{mod.name}(b) a) = b phi(a)", r2, tol, ref)
    S = P.S
    k2 = S.ket2(phi.xi0)
    inv2 = 0.0
    inv1 = 0.0
    bh = P.betahat.alpha.basis
    k1s = [S.ket1(x) for x in bh]
    for a, va in zip(gens, vals):
        d = delta_hat(P, a)
        rva = P.alpha.rho(va)
        inv2 = max(inv2, opnorm(k2.conj().T @ d @ k2 - rva))
        for x, kx in zip(bh, k1s):
            for y, ky in zip(bh, k1s):
                inv1 = max(inv1, opnorm(phi(kx.conj().T @ d @ ky) - x.conj().T @ rva @ y))
    rep.add("(Id * phi)(Delta_hat(a)) = rho_alpha(phi(a))", inv2, tol, "left invariance")
    rep.add("phi(<x|_1 Delta_hat(a) |y>_1) = x* rho_alpha(phi(a)) y", inv1, tol, "left invariance")
    # complete positivity: the block matrix [phi(a_i* a_j)] is positive
    n, k = len(gens), P.K.dim
    block = np.zeros((n * k, n * k), dtype=complex)
    for i in range(n):
        for j in range(n):
            block[i * k:(i + 1) * k, j * k:(j + 1) * k] = phi(gens[i].conj().T @ gens[j])
    mineig = float(np.min(np.linalg.eigvalsh((block + block.conj().T) / 2), initial=0.0))
    rep.add("completely positive", max(-mineig, 0.0), tol, ref)
    eye = np.eye(P.H.dim)
    if Ah.member_residual(eye) <= tol:
        one = phi(eye)
        rep.data["norm phi(Id)"] = round(opnorm(one), 12)
        rep.add("phi(Id) = Id", opnorm(one - np.eye(k)), tol, ref)
        if contraction:
            # a completely positive map has norm ||phi(Id)||
            rep.add("contraction", max(opnorm(one) - 1.0, 0.0), tol, ref)
    return rep


# ----------------------------------------------------------------------------
# structural checks


def _pair_rho_residual(P: PMU, kets: RTP, which: str, X: np.ndarray, mods) -> float:
    worst = 0.0
    for x in X:
        kx = getattr(kets, which)(x)
        for y in X:
            lhs = kx.conj().T @ P.V @ getattr(P.S, which)(y)
            for m in mods:
                try:
                    r = m.rho(x.conj().T @ y)
                except NotInAlgebra:
                    return float("inf")
                worst = max(worst, opnorm(lhs - r))
    return worst


def verify_fixed(P: PMU, tol: float = DEFAULT_TOL, seed: int = 0, with_opposite: bool = True) -> Report:
    rep = Report(f"fixed points {P.name}")
    F, C = fixed_space(P, seed), cofixed_space(P, seed)
    rep.data["dim Fix"] = F.dim
    rep.data["dim Cofix"] = C.dim
    rep.data["etale"] = F.normalized is not None
    rep.data["proper"] = C.normalized is not None
    rep.data["compact"] = is_compact(P)
    ref = "fixed elements"
    for D in (F, C):
        res = max((defining_residual(P, D.side, x) for x in D.basis), default=0.0)
        rep.add(f"{D.side} basis satisfies its equation", res, tol, ref)
        rep.add(f"{D.side} inside multiplier set", containment_residual(D.multipliers, D.space), tol, ref)
        XX = product_space(D.space.adjoint(), D.space)
        rep.add(f"[{D.side}* {D.side}] is a C*-algebra", cstar_algebra_residual(XX), tol, ref)
        rep.add_bool(f"[{D.side}* {D.side}] is commutative", is_commutative(XX, tol), 0.0, ref)
        rep.add(f"[{D.side} {D.side}* {D.side}] = {D.side}",
                equality_residual(product_space(D.space, XX), D.space), tol, ref)
    # matrix elements of V between (co)fixed elements
    rep.add("<x|_2 V |y>_2 = rho(x* y) on Cofix",
            _pair_rho_residual(P, P.R, "ket2", C.basis, (P.alpha, P.betahat)), tol, ref)
    rep.add("<x|_1 V |y>_1 = rho(x* y) on Fix",
            _pair_rho_residual(P, P.R, "ket1", F.basis, (P.beta, P.alpha)), tol, ref)
    rep.add("rho_betahat(B) Cofix in Cofix",
            containment_residual(C.space, product_space(P.betahat.rho_space(), C.space)), tol, ref)
    rep.add("rho_beta(B) Fix in Fix",
            containment_residual(F.space, product_space(P.beta.rho_space(), F.space)), tol, ref)
    if with_opposite:
        O = opposite(P)
        rep.add("Fix(V) = Cofix(V^op)", equality_residual(F.space, cofixed_space(O, seed).space), tol, ref)
        rep.add("Cofix(V) = Fix(V^op)", equality_residual(C.space, fixed_space(O, seed).space), tol, ref)
    eye = np.eye(P.H.dim)
    if F.normalized is not None:
        rep.add("etale => Id in A", leg(P).member_residual(eye), tol, ref)
    if C.normalized is not None:
        rep.add("proper => Id in Ahat", leg_hat(P).member_residual(eye), tol, ref)
    return rep


# ----------------------------------------------------------------------------
# groupoid oracles


def groupoid_counit_formula(P: PMU, f: np.ndarray) -> np.ndarray:
    """Restriction of f to the unit arrows, as a diagonal operator on K."""
    return np.diag(np.asarray(f, dtype=complex)[P.groupoid.unit_arrow])


def groupoid_op_counit_formula(P: PMU, f: np.ndarray) -> np.ndarray:
    """(eps(L(f)) zeta)(u) = sum_{x in G^u} f(x) D^-1/2(x) zeta(s(x)) lambda(x), orthonormal coordinates."""
    G, lam, q = P.groupoid, P.haar.weight, P.measure
    T = np.zeros((G.n_units, G.n_units), dtype=complex)
    for x in range(G.n_arrows):
        T[G.tgt[x], G.src[x]] += f[x] * q.D[x] ** -0.5 * lam[x]
    w = np.sqrt(q.mu)
    return (w[:, None] * T) / w[None, :]


def groupoid_haar_formula(P: PMU, f: np.ndarray, normalized: bool = True) -> np.ndarray:
    """phi(m(f))(u) = sum_{x in G^u} f(x) c(s(x))^2 lambda(x), with c from the normalized cofixed element."""
    G, lam = P.groupoid, P.haar.weight
    mass = np.array([sum(lam[x] for x in G.range_fiber(u)) for u in range(G.n_units)])
    out = np.zeros(G.n_units, dtype=complex)
    for x in range(G.n_arrows):
        out[G.tgt[x]] += f[x] * lam[x] / (mass[G.src[x]] if normalized else 1.0)
    return np.diag(out)
