"""C*-bases, C*-modules, and relative tensor products.

Relative tensor products are realized by a Gram-matrix quotient.  Every RTP
stores two families of leg operators, ``ket1[i] = |beta_i>_1`` and
``ket2[j] = |gamma_j>_2``, in orthonormal coordinates of the quotient space.
Operators between products are obtained by solving linear systems on the
images of these legs, with a residual check for well-definedness.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (BaseAxiomFailed, InconsistentSystem, ModuleAxiomFailed,
                     NotInAlgebra, NotInCommutant, ShapeMismatch)
from .opspace import (DEFAULT_TOL, RANK_RTOL, FHilbert, OperatorSpace,
                      cstar_algebra_residual, equality_residual,
                      pair_products, product_space, right_pinv,
                      spans_space, stack_columns)

SOLVE_TOL = 1e-8


class CStarBase:
    """A triple (K, B, Bdag) of a Hilbert space and two commuting C*-algebras."""

    def __init__(self, K: FHilbert, B: OperatorSpace, Bdag: OperatorSpace, name: str = "b"):
        for X in (B, Bdag):
            if X.domain.dim != K.dim or X.codomain.dim != K.dim:
                raise ShapeMismatch("base algebras must act on K")
        self.K = K
        self.B = B
        self.Bdag = Bdag
        self.name = name
        self._dagger: CStarBase | None = None

    def dagger(self) -> "CStarBase":
        if self._dagger is None:
            d = CStarBase(self.K, self.Bdag, self.B, name=self.name + "^")
            d._dagger = self
            self._dagger = d
        return self._dagger

    def residuals(self) -> dict[str, float]:
        out = {}
        for tag, X in (("B", self.B), ("Bdag", self.Bdag)):
            out[f"{tag} is a C*-algebra"] = cstar_algebra_residual(X)
            out[f"[{tag} K] = K"] = spans_space(X)
        c = pair_products(self.B.basis, self.Bdag.basis)
        c = c - np.swapaxes(pair_products(self.Bdag.basis, self.B.basis), 0, 1)
        out["B commutes with Bdag"] = float(np.max(np.abs(c), initial=0.0))
        return out

    def validate(self, tol: float = DEFAULT_TOL) -> "CStarBase":
        for which, r in self.residuals().items():
            if r > tol:
                raise BaseAxiomFailed(which)
        return self

    def __repr__(self) -> str:
        return f"CStarBase({self.name}, dim K={self.K.dim}, dim B={self.B.dim}, dim Bdag={self.Bdag.dim})"


def make_base(K: FHilbert, B: OperatorSpace, Bdag: OperatorSpace, name: str = "b") -> CStarBase:
    return CStarBase(K, B, Bdag, name).validate()


def diagonal_base(K: FHilbert, name: str = "b") -> CStarBase:
    D = OperatorSpace.diagonal(K)
    return CStarBase(K, D, D, name)


class CStarModule:
    """A pair (H, alpha) over a base; alpha is a space of operators K -> H."""

    def __init__(self, H: FHilbert, alpha: OperatorSpace, base: CStarBase, name: str = "alpha",
                 validate: bool = True):
        if alpha.domain.dim != base.K.dim or alpha.codomain.dim != H.dim:
            raise ShapeMismatch("module space must map the base space into H")
        self.H = H
        self.alpha = alpha
        self.base = base
        self.name = name
        self._rho_basis: np.ndarray | None = None
        self._rtp_cache: dict = {}  # products, associators and swaps keyed by partner ids
        if validate:
            self.validate()

    # axioms -------------------------------------------------------------------
    def residuals(self) -> dict[str, float]:
        a = self.alpha
        return {
            "[alpha K] = H": spans_space(a),
            "[alpha B] = alpha": equality_residual(a, product_space(a, self.base.B)),
            "[alpha* alpha] = B": equality_residual(self.base.B, product_space(a.adjoint(), a)),
        }

    def validate(self, tol: float = DEFAULT_TOL) -> "CStarModule":
        for which, r in self.residuals().items():
            if r > tol:
                raise ModuleAxiomFailed(which)
        return self

    # representation of Bdag -----------------------------------------------------
    @property
    def rho_basis(self) -> np.ndarray:
        if self._rho_basis is None:
            A = stack_columns(self.alpha.basis)
            pinvA = right_pinv(A)
            out = []
            for b in self.base.Bdag.basis:
                Bm = stack_columns(np.matmul(self.alpha.basis, b))
                X = Bm @ pinvA
                res = np.linalg.norm(X @ A - Bm) / max(1.0, np.linalg.norm(Bm))
                if res > SOLVE_TOL:
                    raise InconsistentSystem(f"rho on {self.name}: residual {res:.2e}")
                out.append(X)
            self._rho_basis = np.array(out).reshape(-1, self.H.dim, self.H.dim)
        return self._rho_basis

    def rho(self, bdag: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        c, res = self.base.Bdag.coords(bdag)
        if res > tol * max(1.0, float(np.linalg.norm(bdag))):
            raise NotInAlgebra(f"operator is not in the algebra acting on {self.name}")
        return np.tensordot(c, self.rho_basis, axes=(0, 0))

    def rho_coords(self, coords: np.ndarray) -> np.ndarray:
        """rho applied to elements given by coordinates in Bdag; coords has shape (..., dim Bdag)."""
        return np.tensordot(coords, self.rho_basis, axes=(-1, 0))

    def rho_space(self) -> OperatorSpace:
        return OperatorSpace.span(self.rho_basis, self.H, self.H)

    def commutes_with_rho(self, T: np.ndarray) -> float:
        if self.rho_basis.shape[0] == 0:
            return 0.0
        c = np.matmul(T, self.rho_basis) - np.matmul(self.rho_basis, T)
        return float(np.max(np.linalg.norm(c, axis=(1, 2)))) / max(1.0, float(np.linalg.norm(T)))

    def with_space(self, alpha: OperatorSpace, name: str | None = None) -> "CStarModule":
        return CStarModule(self.H, alpha, self.base, name or self.name, validate=False)

    def __repr__(self) -> str:
        return f"CStarModule({self.name} on {self.H.label}, dim={self.alpha.dim})"


def make_module(H: FHilbert, alpha: OperatorSpace, base: CStarBase, name: str = "alpha") -> CStarModule:
    return CStarModule(H, alpha, base, name)


def rho(module: CStarModule, bdag: np.ndarray) -> np.ndarray:
    return module.rho(bdag)


def semi_morphism_residual(T: np.ndarray, src: CStarModule, dst: CStarModule) -> float:
    """Distance of [T alpha] from beta; zero iff T is a semi-morphism."""
    if T.shape != (dst.H.dim, src.H.dim):
        raise ShapeMismatch("operator shape does not match the modules")
    imgs = np.matmul(T, src.alpha.basis)
    if imgs.shape[0] == 0:
        return 0.0
    v = imgs.reshape(imgs.shape[0], -1)
    R = v - (v @ dst.alpha.vecs.conj().T) @ dst.alpha.vecs if dst.alpha.dim else v
    return float(np.max(np.linalg.norm(R, axis=1))) / max(1.0, float(np.linalg.norm(T, 2)))


def is_semi_morphism(T: np.ndarray, src: CStarModule, dst: CStarModule, tol: float = DEFAULT_TOL) -> bool:
    return semi_morphism_residual(T, src, dst) <= tol


def is_morphism(T: np.ndarray, src: CStarModule, dst: CStarModule, tol: float = DEFAULT_TOL) -> bool:
    return (semi_morphism_residual(T, src, dst) <= tol
            and semi_morphism_residual(T.conj().T, dst, src) <= tol)


def compatibility_residual(modules: Sequence[CStarModule]) -> float:
    """max over i != j of the defect of [rho_i(Bdag_i) alpha_j] = alpha_j."""
    worst = 0.0
    for i, mi in enumerate(modules):
        for j, mj in enumerate(modules):
            if i == j:
                continue
            imgs = pair_products(mi.rho_basis, mj.alpha.basis).reshape(-1, *mj.alpha.shape)
            if imgs.shape[0]:
                v = imgs.reshape(imgs.shape[0], -1)
                R = v - (v @ mj.alpha.vecs.conj().T) @ mj.alpha.vecs
                worst = max(worst, float(np.max(np.linalg.norm(R, axis=1))))
    return worst


# ----------------------------------------------------------------------------
# relative tensor products


def _psd_factor(G: np.ndarray) -> np.ndarray:
    """W with W^H W = G, of full row rank (eigenvalues below 1e-9 relative dropped).

    The Gram matrices met here are usually block diagonal up to a permutation,
    so each connected component of the sparsity pattern is factored separately.
    """
    G = (G + G.conj().T) / 2
    n = G.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    scale = float(np.max(np.abs(G)))
    if scale == 0.0:
        return np.zeros((0, n), dtype=complex)
    ncomp, labels = connected_components(csr_matrix(np.abs(G) > 1e-14 * scale), directed=False)
    parts = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        w, U = np.linalg.eigh(G[np.ix_(idx, idx)])
        parts.append((w, U, idx))
    top = max(float(p[0][-1]) for p in parts)
    rows = []
    for w, U, idx in parts:
        keep = w > RANK_RTOL * top
        if not np.any(keep):
            continue
        block = np.zeros((int(keep.sum()), n), dtype=complex)
        block[:, idx] = np.sqrt(w[keep])[:, None] * U[:, keep].conj().T
        rows.append(block[::-1])
    if not rows:
        return np.zeros((0, n), dtype=complex)
    return np.vstack(rows)


class RTP:
    """Relative tensor product H beta(x)gamma K of a left and a right module."""

    def __init__(self, left: CStarModule, right: CStarModule, space: FHilbert,
                 ket1: np.ndarray, ket2: np.ndarray):
        self.left = left
        self.right = right
        self.space = space
        self.ket1_basis = ket1  # (dim beta, dim, dim K)
        self.ket2_basis = ket2  # (dim gamma, dim, dim H)
        self._pinv: dict[str, np.ndarray] = {}
        self._lifts: dict = {}  # lifted modules and fiber-product targets

    @property
    def dim(self) -> int:
        return self.space.dim

    def __repr__(self) -> str:
        return f"RTP({self.left.name}|{self.right.name}, dim={self.dim})"

    # legs -----------------------------------------------------------------------
    def ket1(self, xi: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        c, res = self.left.alpha.coords(xi)
        if res > tol * max(1.0, float(np.linalg.norm(xi))):
            raise NotInAlgebra("vector is not in the left module")
        return np.tensordot(c, self.ket1_basis, axes=(0, 0))

    def ket2(self, eta: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        c, res = self.right.alpha.coords(eta)
        if res > tol * max(1.0, float(np.linalg.norm(eta))):
            raise NotInAlgebra("vector is not in the right module")
        return np.tensordot(c, self.ket2_basis, axes=(0, 0))

    def bra1(self, xi: np.ndarray) -> np.ndarray:
        return self.ket1(xi).conj().T

    def bra2(self, eta: np.ndarray) -> np.ndarray:
        return self.ket2(eta).conj().T

    def stacked(self, which: int) -> np.ndarray:
        return stack_columns(self.ket1_basis if which == 1 else self.ket2_basis)

    def pinv_stacked(self, which: int) -> np.ndarray:
        key = f"p{which}"
        if key not in self._pinv:
            self._pinv[key] = right_pinv(self.stacked(which))
        return self._pinv[key]

    # derived modules ------------------------------------------------------------
    def lift_left(self, mod: CStarModule) -> CStarModule:
        """The module [|gamma>_2 mod] on this space (mod is a structure on H)."""
        if mod.H.dim != self.left.H.dim:
            raise ShapeMismatch("lifted module must live on the left factor")
        key = ("L", id(mod))
        if key not in self._lifts:
            ops = pair_products(self.ket2_basis, mod.alpha.basis).reshape(
                -1, self.dim, mod.base.K.dim)
            sp = OperatorSpace.span(ops, mod.base.K, self.space)
            self._lifts[key] = (mod, CStarModule(self.space, sp, mod.base,
                                                 f"{mod.name}<{self.right.name}", validate=False))
        return self._lifts[key][1]

    def lift_right(self, mod: CStarModule) -> CStarModule:
        """The module [|beta>_1 mod] on this space (mod is a structure on K)."""
        if mod.H.dim != self.right.H.dim:
            raise ShapeMismatch("lifted module must live on the right factor")
        key = ("R", id(mod))
        if key not in self._lifts:
            ops = pair_products(self.ket1_basis, mod.alpha.basis).reshape(
                -1, self.dim, mod.base.K.dim)
            sp = OperatorSpace.span(ops, mod.base.K, self.space)
            self._lifts[key] = (mod, CStarModule(self.space, sp, mod.base,
                                                 f"{self.left.name}>{mod.name}", validate=False))
        return self._lifts[key][1]

    def gram_residual(self, rng: np.random.Generator | None = None, samples: int = 3) -> float:
        """Check <xi z eta | xi' z' eta'> = <z | xi* xi' eta* eta' z'> on random elements."""
        rng = rng or np.random.default_rng(0)
        worst = 0.0
        beta, gamma = self.left.alpha, self.right.alpha
        k = self.left.base.K.dim
        for _ in range(samples):
            cs = [rng.standard_normal(X.dim) + 1j * rng.standard_normal(X.dim)
                  for X in (beta, beta, gamma, gamma)]
            xi, xi2 = beta.element(cs[0]), beta.element(cs[1])
            et, et2 = gamma.element(cs[2]), gamma.element(cs[3])
            z, z2 = (rng.standard_normal(k) + 1j * rng.standard_normal(k) for _ in range(2))
            lhs = np.vdot(self.ket1(xi) @ (et @ z), self.ket1(xi2) @ (et2 @ z2))
            rhs = np.vdot(z, xi.conj().T @ xi2 @ et.conj().T @ et2 @ z2)
            lhs2 = np.vdot(self.ket2(et) @ (xi @ z), self.ket2(et2) @ (xi2 @ z2))
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)), abs(lhs2 - rhs) / max(1.0, abs(rhs)))
        return worst


def _check_pair(left: CStarModule, right: CStarModule) -> None:
    if left.base.K.dim != right.base.K.dim:
        raise ShapeMismatch("modules live over different base spaces")


def build_rtp(left: CStarModule, right: CStarModule, label: str | None = None) -> RTP:
    """Gram-quotient construction, using the smaller of the two realizations."""
    _check_pair(left, right)
    beta, gamma = left.alpha, right.alpha
    nb, ng = beta.dim, gamma.dim
    H, K = left.H.dim, right.H.dim
    kd = left.base.K.dim
    label = label or f"{left.H.label}({left.name}x{right.name}){right.H.label}"
    if ng * H <= nb * K:
        # elements |gamma_j>_2 w for w in H
        prods = pair_products(np.conj(np.swapaxes(gamma.basis, 1, 2)), gamma.basis)
        coords = np.tensordot(prods.reshape(ng, ng, -1), left.base.Bdag.basis.conj().reshape(
            left.base.Bdag.dim, -1), axes=(2, 1))
        blocks = left.rho_coords(coords)  # (ng, ng, H, H)
        G = np.transpose(blocks, (0, 2, 1, 3)).reshape(ng * H, ng * H)
        W = _psd_factor(G)
        r = W.shape[0]
        ket2 = np.transpose(W.reshape(r, ng, H), (1, 0, 2))
        M = stack_columns(gamma.basis)
        T = np.matmul(ket2[None], beta.basis[:, None])  # ket2_j xi_n e_k: (nb, ng, r, kd)
        T = np.transpose(T, (0, 2, 1, 3)).reshape(nb, r, ng * kd)
        ket1 = T @ right_pinv(M)
    else:
        prods = pair_products(np.conj(np.swapaxes(beta.basis, 1, 2)), beta.basis)
        coords = np.tensordot(prods.reshape(nb, nb, -1), right.base.Bdag.basis.conj().reshape(
            right.base.Bdag.dim, -1), axes=(2, 1))
        blocks = right.rho_coords(coords)  # (nb, nb, K, K)
        G = np.transpose(blocks, (0, 2, 1, 3)).reshape(nb * K, nb * K)
        W = _psd_factor(G)
        r = W.shape[0]
        ket1 = np.transpose(W.reshape(r, nb, K), (1, 0, 2))
        M = stack_columns(beta.basis)
        T = np.matmul(ket1[None], gamma.basis[:, None])  # (ng, nb, r, kd)
        T = np.transpose(T, (0, 2, 1, 3)).reshape(ng, r, nb * kd)
        ket2 = T @ right_pinv(M)
    space = FHilbert.numbered(label, ket1.shape[1] if ket1.ndim == 3 else 0)
    return RTP(left, right, space, ket1.reshape(nb, -1, K), ket2.reshape(ng, -1, H))


def rtp(left: CStarModule, right: CStarModule) -> RTP:
    """Cached relative tensor product."""
    hit = left._rtp_cache.get(id(right))
    if hit is not None and hit[0] is right:
        return hit[1]
    P = build_rtp(left, right)
    left._rtp_cache[id(right)] = (right, P)
    return P


def register_rtp(P: RTP) -> None:
    """Make P the cached product for its pair of modules."""
    P.left._rtp_cache[id(P.right)] = (P.right, P)


# ----------------------------------------------------------------------------
# operators between relative tensor products


def _solve(A: np.ndarray, pinvA: np.ndarray, B: np.ndarray, what: str) -> np.ndarray:
    X = B @ pinvA
    res = float(np.linalg.norm(X @ A - B)) / max(1.0, float(np.linalg.norm(B)))
    if res > SOLVE_TOL:
        raise InconsistentSystem(f"{what}: residual {res:.2e}")
    return X


def left_apply(src: RTP, dst: RTP, S: np.ndarray, check: bool = True) -> np.ndarray:
    """S (x) Id: |eta>_2 w -> |eta>_2 S w, for products sharing the right module."""
    if src.right is not dst.right:
        raise ShapeMismatch("left_apply needs a common right module")
    if S.shape != (dst.left.H.dim, src.left.H.dim):
        raise ShapeMismatch("operator shape does not match the left factors")
    if check:
        ok = src.left is dst.left and src.left.commutes_with_rho(S) <= DEFAULT_TOL
        if not ok and semi_morphism_residual(S, src.left, dst.left) > DEFAULT_TOL:
            raise NotInCommutant("left operator neither commutes with rho nor is a semi-morphism")
    B = stack_columns(np.matmul(dst.ket2_basis, S))
    return _solve(src.stacked(2), src.pinv_stacked(2), B, "left_apply")


def right_apply(src: RTP, dst: RTP, T: np.ndarray, check: bool = True) -> np.ndarray:
    """Id (x) T: |xi>_1 w -> |xi>_1 T w, for products sharing the left module."""
    if src.left is not dst.left:
        raise ShapeMismatch("right_apply needs a common left module")
    if T.shape != (dst.right.H.dim, src.right.H.dim):
        raise ShapeMismatch("operator shape does not match the right factors")
    if check:
        ok = src.right is dst.right and src.right.commutes_with_rho(T) <= DEFAULT_TOL
        if not ok and semi_morphism_residual(T, src.right, dst.right) > DEFAULT_TOL:
            raise NotInCommutant("right operator neither commutes with rho nor is a semi-morphism")
    B = stack_columns(np.matmul(dst.ket1_basis, T))
    return _solve(src.stacked(1), src.pinv_stacked(1), B, "right_apply")


def op_tensor(P: RTP, S: np.ndarray, T: np.ndarray) -> np.ndarray:
    """S (x) T on a single product (S in rho_beta', T in rho_gamma')."""
    return left_apply(P, P, S) @ right_apply(P, P, T)


def flip(P: RTP) -> np.ndarray:
    """The flip from H beta(x)gamma K onto K gamma(x)beta H."""
    Q = rtp(P.right, P.left)
    return _solve(P.stacked(2), P.pinv_stacked(2), Q.stacked(1), "flip")


def map_by_images(src_ops: np.ndarray, dst_ops: np.ndarray, what: str = "map") -> np.ndarray:
    """The operator X with X src_ops[n] = dst_ops[n] for all n (consistency asserted)."""
    A = stack_columns(src_ops)
    B = stack_columns(dst_ops)
    return _solve(A, right_pinv(A), B, what)


def assoc(Hb: CStarModule, Kg: CStarModule, Ke: CStarModule, Lf: CStarModule
          ) -> tuple[np.ndarray, RTP, RTP]:
    """The associativity unitary (H(x)K)(x)L -> H(x)(K(x)L).

    Hb over c, Kg over c^dagger; Ke over d (same K), Lf over d^dagger.
    Returns (a, lhs, rhs); cached on Hb.
    """
    key = ("assoc", id(Kg), id(Ke), id(Lf))
    hit = Hb._rtp_cache.get(key)
    if hit is not None and all(a is b for a, b in zip(hit[0], (Kg, Ke, Lf))):
        return hit[1]
    inner = rtp(Hb, Kg)
    lhs = rtp(inner.lift_right(Ke), Lf)
    inner2 = rtp(Ke, Lf)
    rhs = rtp(Hb, inner2.lift_left(Kg))
    # lhs.ket2[l] inner.ket1[i]  ->  rhs.ket1[i] inner2.ket2[l]
    src = np.swapaxes(pair_products(lhs.ket2_basis, inner.ket1_basis), 0, 1)
    dst = pair_products(rhs.ket1_basis, inner2.ket2_basis)
    k = Kg.H.dim
    a = map_by_images(src.reshape(-1, lhs.dim, k), dst.reshape(-1, rhs.dim, k), "assoc")
    Hb._rtp_cache[key] = ((Kg, Ke, Lf), (a, lhs, rhs))
    return a, lhs, rhs


def sigma23(M1: CStarModule, N1: CStarModule, M2: CStarModule, N2: CStarModule
            ) -> tuple[np.ndarray, RTP, RTP]:
    """Swap of the outer factors: (M m1(x)mu1 N1) m2<mu1 (x)mu2 N2 -> (M m2(x)mu2 N2) m1<mu2 (x)mu1 N1."""
    key = ("sigma23", id(N1), id(M2), id(N2))
    hit = M1._rtp_cache.get(key)
    if hit is not None and all(a is b for a, b in zip(hit[0], (N1, M2, N2))):
        return hit[1]
    src_in = rtp(M1, N1)
    src = rtp(src_in.lift_left(M2), N2)
    dst_in = rtp(M2, N2)
    dst = rtp(dst_in.lift_left(M1), N1)
    # src.ket2[e] src_in.ket2[x] z -> dst.ket2[x] dst_in.ket2[e] z
    a = pair_products(src.ket2_basis, src_in.ket2_basis)
    b = np.swapaxes(pair_products(dst.ket2_basis, dst_in.ket2_basis), 0, 1)
    m = M1.H.dim
    S = map_by_images(a.reshape(-1, src.dim, m), b.reshape(-1, dst.dim, m), "sigma23")
    M1._rtp_cache[key] = ((N1, M2, N2), (S, src, dst))
    return S, src, dst


# ----------------------------------------------------------------------------
# direct sums


def block_diag_ops(parts: Sequence[np.ndarray], shapes: Sequence[tuple[int, int]], index: int) -> np.ndarray:
    """Embed a stack of operators of summand ``index`` into block position (index, index)."""
    m = sum(s[0] for s in shapes)
    k = sum(s[1] for s in shapes)
    r0 = sum(s[0] for s in shapes[:index])
    c0 = sum(s[1] for s in shapes[:index])
    ops = np.asarray(parts)
    out = np.zeros((ops.shape[0], m, k), dtype=complex)
    out[:, r0:r0 + ops.shape[1], c0:c0 + ops.shape[2]] = ops
    return out


def direct_sum_space(label: str, spaces: Sequence[FHilbert]) -> FHilbert:
    return FHilbert(label, tuple(f"{i}/{b}" for i, h in enumerate(spaces) for b in h.basis))


def direct_sum_opspace(spaces: Sequence[OperatorSpace], dom: FHilbert, cod: FHilbert) -> OperatorSpace:
    shapes = [X.shape for X in spaces]
    ops = [block_diag_ops(X.basis, shapes, i) for i, X in enumerate(spaces)]
    return OperatorSpace(dom, cod, np.concatenate(ops) if ops else np.zeros((0, cod.dim, dom.dim)))


def direct_sum_base(bases: Sequence[CStarBase], name: str = "b") -> CStarBase:
    K = direct_sum_space("K", [b.K for b in bases])
    B = direct_sum_opspace([b.B for b in bases], K, K)
    Bd = direct_sum_opspace([b.Bdag for b in bases], K, K)
    return CStarBase(K, B, Bd, name)


def direct_sum_module(mods: Sequence[CStarModule], base: CStarBase, H: FHilbert | None = None,
                      name: str = "alpha") -> CStarModule:
    H = H or direct_sum_space("H", [m.H for m in mods])
    sp = direct_sum_opspace([m.alpha for m in mods], base.K, H)
    return CStarModule(H, sp, base, name, validate=False)


def injection(spaces: Sequence[FHilbert], index: int) -> np.ndarray:
    """Isometry of summand ``index`` into the direct sum."""
    n = sum(h.dim for h in spaces)
    o = sum(h.dim for h in spaces[:index])
    J = np.zeros((n, spaces[index].dim), dtype=complex)
    J[o:o + spaces[index].dim] = np.eye(spaces[index].dim)
    return J


def direct_sum_rtp_map(lefts: Sequence[CStarModule], rights: Sequence[CStarModule],
                       big: RTP) -> np.ndarray:
    """Canonical map from the sum of the summand products onto the product of the sums."""
    parts = [rtp(l, r) for l, r in zip(lefts, rights)]
    Hs = [l.H for l in lefts]
    Ks = [l.base.K for l in lefts]
    src, dst = [], []
    total = sum(p.dim for p in parts)
    off = 0
    for i, (p, l, r) in enumerate(zip(parts, lefts, rights)):
        Jh = injection(Hs, i)
        Jk_r = injection([rr.H for rr in rights], i)
        Jb = injection(Ks, i)
        emb = np.zeros((total, p.dim), dtype=complex)
        emb[off:off + p.dim] = np.eye(p.dim)
        off += p.dim
        for j, eta in enumerate(r.alpha.basis):
            big_eta = Jk_r @ eta @ Jb.conj().T
            src.append(emb @ p.ket2_basis[j] @ Jh.conj().T)
            dst.append(big.ket2(big_eta) @ Jh @ Jh.conj().T)
    return map_by_images(np.array(src), np.array(dst), "direct sum rtp")
