"""Finite-dimensional Hilbert spaces and closed linear spans of operators.

An OperatorSpace stores an orthonormal basis (Hilbert-Schmidt inner product) of
a subspace of L(domain, codomain) as an array of shape (n, m, k).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import ShapeMismatch

RANK_RTOL = 1e-9
DEFAULT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FHilbert:
    """A finite-dimensional Hilbert space with a named orthonormal basis."""

    label: str
    basis: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def numbered(cls, label: str, dim: int) -> "FHilbert":
        return cls(label, tuple(str(i) for i in range(dim)))

    def __repr__(self) -> str:
        return f"FHilbert({self.label!r}, dim={self.dim})"


def row_basis(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Canonical orthonormal basis of the row space of M.

    Rank is decided by singular values above rtol * max(s_max, 1).  The basis is
    then put in pivoted form: column-pivoted QR picks coordinates by residual
    norm, which depends only on the subspace, and phases make pivots positive.
    """
    M = np.asarray(M)
    D = M.shape[1]
    if M.shape[0] == 0 or D == 0:
        return np.zeros((0, D), dtype=complex)
    _, s, vh = np.linalg.svd(M, full_matrices=False)
    thr = rtol * max(float(s[0]) if s.size else 0.0, 1.0)
    r = int(np.count_nonzero(s > thr))
    Q = vh[:r]
    if r == 0:
        return np.zeros((0, D), dtype=complex)
    _, R, piv = sla.qr(Q, pivoting=True, mode="economic")
    d = np.diag(R)
    ph = np.where(np.abs(d) > 0, np.conj(d) / np.abs(d), 1.0)
    B = np.empty_like(R)
    B[:, piv] = R * ph[:, None]
    return B.astype(complex, copy=False)


def nullspace(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker M; singular values below rtol * max(s_max, 1) count as zero."""
    M = np.asarray(M)
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    thr = rtol * max(float(s[0]) if s.size else 0.0, 1.0)
    r = int(np.count_nonzero(s > thr))
    return vh[r:].conj().T


class OperatorSpace:
    """Closed linear span of operators ``domain -> codomain``."""

    def __init__(self, domain: FHilbert, codomain: FHilbert, basis: np.ndarray):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1:] != (codomain.dim, domain.dim):
            raise ShapeMismatch(f"basis shape {basis.shape} does not match {codomain.dim}x{domain.dim}")
        self.domain = domain
        self.codomain = codomain
        self.basis = basis

    # construction ------------------------------------------------------
    @classmethod
    def span(cls, ops, domain: FHilbert, codomain: FHilbert) -> "OperatorSpace":
        arr = _stack(ops, codomain.dim, domain.dim)
        if arr.shape[0] == 0:
            return cls.zero(domain, codomain)
        B = row_basis(arr.reshape(arr.shape[0], -1))
        return cls(domain, codomain, B.reshape(-1, codomain.dim, domain.dim))

    @classmethod
    def zero(cls, domain: FHilbert, codomain: FHilbert) -> "OperatorSpace":
        return cls(domain, codomain, np.zeros((0, codomain.dim, domain.dim), dtype=complex))

    @classmethod
    def full(cls, domain: FHilbert, codomain: FHilbert) -> "OperatorSpace":
        n = codomain.dim * domain.dim
        return cls(domain, codomain, np.eye(n, dtype=complex).reshape(n, codomain.dim, domain.dim))

    @classmethod
    def diagonal(cls, space: FHilbert) -> "OperatorSpace":
        d = space.dim
        B = np.zeros((d, d, d), dtype=complex)
        B[np.arange(d), np.arange(d), np.arange(d)] = 1
        return cls(space, space, B)

    @classmethod
    def scalars(cls, space: FHilbert) -> "OperatorSpace":
        d = space.dim
        return cls(space, space, (np.eye(d) / np.sqrt(max(d, 1)))[None].astype(complex))

    # basic data ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codomain.dim, self.domain.dim

    @cached_property
    def vecs(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def __repr__(self) -> str:
        return f"OperatorSpace({self.domain.label}->{self.codomain.label}, dim={self.dim})"

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        return iter(self.basis)

    def coords(self, op: np.ndarray) -> tuple[np.ndarray, float]:
        """Coefficients of the orthogonal projection of op, and the residual norm."""
        op = np.asarray(op)
        if op.shape != self.shape:
            raise ShapeMismatch(f"operator of shape {op.shape} in space of shape {self.shape}")
        v = op.reshape(-1)
        c = self.vecs.conj() @ v
        res = v - c @ self.vecs
        return c, float(np.linalg.norm(res))

    def element(self, coeffs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs), self.basis, axes=(0, 0))

    def member_residual(self, op: np.ndarray) -> float:
        n = float(np.linalg.norm(op))
        return self.coords(op)[1] / max(n, 1.0)

    def has(self, op: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        return self.member_residual(op) <= tol

    # algebra ---------------------------------------------------------------
    def adjoint(self) -> "OperatorSpace":
        return OperatorSpace(self.codomain, self.domain, np.conj(np.transpose(self.basis, (0, 2, 1))))

    def __matmul__(self, other: "OperatorSpace") -> "OperatorSpace":
        return product_space(self, other)

    def __add__(self, other: "OperatorSpace") -> "OperatorSpace":
        return sum_space(self, other)

    def left_mul(self, op: np.ndarray, codomain: FHilbert) -> "OperatorSpace":
        """[op X] for a single operator."""
        return OperatorSpace.span(np.matmul(op, self.basis), self.domain, codomain)

    def right_mul(self, op: np.ndarray, domain: FHilbert) -> "OperatorSpace":
        """[X op] for a single operator."""
        return OperatorSpace.span(np.matmul(self.basis, op), domain, self.codomain)


def _stack(ops, m: int, k: int) -> np.ndarray:
    if isinstance(ops, np.ndarray):
        arr = ops
    else:
        ops = list(ops)
        arr = np.array(ops, dtype=complex) if ops else np.zeros((0, m, k), dtype=complex)
    if arr.ndim == 2 and arr.shape == (m, k):
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (m, k):
        raise ShapeMismatch(f"operators of shape {arr.shape[1:]} where {m}x{k} expected")
    return arr.astype(complex, copy=False)


def span_closure(ops: Sequence[np.ndarray] | np.ndarray, domain: FHilbert | None = None,
                 codomain: FHilbert | None = None) -> OperatorSpace:
    """Closed linear span of a list of matrices (spaces default to numbered ones)."""
    arr = np.asarray(ops, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ShapeMismatch("expected a list of matrices of a common shape")
    m, k = arr.shape[1:]
    domain = domain or FHilbert.numbered("dom", k)
    codomain = codomain or FHilbert.numbered("cod", m)
    return OperatorSpace.span(arr, domain, codomain)


def _check_same(X: OperatorSpace, Y: OperatorSpace) -> None:
    if X.shape != Y.shape:
        raise ShapeMismatch(f"spaces of shapes {X.shape} and {Y.shape}")


def product_space(X: OperatorSpace, Y: OperatorSpace, chunk: int | None = None) -> OperatorSpace:
    """[XY]: span of all products x y."""
    if X.domain.dim != Y.codomain.dim:
        raise ShapeMismatch(f"cannot compose {X} after {Y}")
    D = X.codomain.dim * Y.domain.dim
    if X.dim == 0 or Y.dim == 0:
        return OperatorSpace.zero(Y.domain, X.codomain)
    chunk = chunk or max(1, (4 * D) // max(Y.dim, 1))
    acc = np.zeros((0, D), dtype=complex)
    for start in range(0, X.dim, chunk):
        P = pair_products(X.basis[start:start + chunk], Y.basis).reshape(-1, D)
        acc = row_basis(np.vstack([acc, P]))
        if acc.shape[0] == D:
            break
    return OperatorSpace(Y.domain, X.codomain, acc.reshape(-1, X.codomain.dim, Y.domain.dim))


def adjoint_space(X: OperatorSpace) -> OperatorSpace:
    return X.adjoint()


def sum_space(X: OperatorSpace, Y: OperatorSpace) -> OperatorSpace:
    _check_same(X, Y)
    return OperatorSpace.span(np.concatenate([X.basis, Y.basis]), X.domain, X.codomain)


def containment_residual(X: OperatorSpace, Y: OperatorSpace) -> float:
    """Largest distance from a basis vector of Y to X (0 means Y is inside X)."""
    _check_same(X, Y)
    if Y.dim == 0:
        return 0.0
    Yv = Y.vecs
    R = Yv - (Yv @ X.vecs.conj().T) @ X.vecs if X.dim else Yv
    return float(np.max(np.linalg.norm(R, axis=1)))


def contains(X: OperatorSpace, Y: OperatorSpace, tol: float = DEFAULT_TOL) -> bool:
    """Y is a subspace of X."""
    return containment_residual(X, Y) <= tol


def equality_residual(X: OperatorSpace, Y: OperatorSpace) -> float:
    """Zero iff the spans agree; dimension mismatch counts as residual 1."""
    _check_same(X, Y)
    if X.dim != Y.dim:
        return 1.0
    return containment_residual(X, Y)


def equals(X: OperatorSpace, Y: OperatorSpace, tol: float = DEFAULT_TOL) -> bool:
    return equality_residual(X, Y) <= tol


def intersection(X: OperatorSpace, Y: OperatorSpace) -> OperatorSpace:
    _check_same(X, Y)
    if X.dim == 0 or Y.dim == 0:
        return OperatorSpace.zero(X.domain, X.codomain)
    M = np.concatenate([X.vecs, -Y.vecs]).T
    N = nullspace(M)
    if N.shape[1] == 0:
        return OperatorSpace.zero(X.domain, X.codomain)
    ops = (N[: X.dim].T @ X.vecs).reshape(-1, *X.shape)
    return OperatorSpace.span(ops, X.domain, X.codomain)


def commutant(A: OperatorSpace) -> OperatorSpace:
    """All T with T a = a T for every a in A (null space of the commutator map)."""
    if A.domain.dim != A.codomain.dim:
        raise ShapeMismatch("commutant needs square operators")
    d = A.domain.dim
    if A.dim == 0:
        return OperatorSpace.full(A.domain, A.domain)
    if equality_residual(A, A.adjoint()) <= DEFAULT_TOL:
        return _commutant_selfadjoint(A)
    eye = np.eye(d)
    # row-major vec: vec(aT) = (a kron I) vec T,  vec(Ta) = (I kron a^T) vec T
    blocks = [np.kron(a, eye) - np.kron(eye, a.T) for a in A.basis]
    N = nullspace(np.concatenate(blocks))
    return OperatorSpace.span(N.T.reshape(-1, d, d), A.domain, A.domain)


def _commutant_selfadjoint(A: OperatorSpace) -> OperatorSpace:
    # For a *-closed set, T commutes with A iff it commutes with a generic
    # self-adjoint combination h and with every basis element.  The commutant of
    # h is block diagonal over its eigenspaces, which keeps the final solve small.
    d = A.domain.dim
    rng = np.random.default_rng(12345)
    c = rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim)
    a = np.tensordot(c, A.basis, axes=(0, 0))
    h = a + a.conj().T
    w, U = np.linalg.eigh(h)
    scale = max(float(np.max(np.abs(w))), 1.0)
    groups: list[list[int]] = [[0]]
    for i in range(1, d):
        if w[i] - w[groups[-1][-1]] <= 1e-7 * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    cand = []
    for g in groups:
        Ug = U[:, g]
        for p in range(len(g)):
            for q in range(len(g)):
                cand.append(np.outer(Ug[:, p], Ug[:, q].conj()))
    C = np.array(cand)
    # constraints [b, C_k] = 0 for all basis elements b
    comm = pair_products(A.basis, C) - np.swapaxes(pair_products(C, A.basis), 0, 1)
    L = np.transpose(comm, (0, 2, 3, 1)).reshape(-1, C.shape[0])
    N = nullspace(L)
    ops = np.tensordot(N.T, C, axes=(1, 0))
    return OperatorSpace.span(ops, A.domain, A.domain)


def is_cstar_algebra(X: OperatorSpace, tol: float = DEFAULT_TOL) -> bool:
    return cstar_algebra_residual(X) <= tol


def cstar_algebra_residual(X: OperatorSpace) -> float:
    """max of the defects of [XX] in X and X* = X."""
    if X.domain.dim != X.codomain.dim:
        raise ShapeMismatch("C*-algebra test needs square operators")
    prods = pair_products(X.basis, X.basis).reshape(-1, *X.shape)
    res = 0.0
    if prods.size:
        R = prods.reshape(prods.shape[0], -1)
        R = R - (R @ X.vecs.conj().T) @ X.vecs
        res = float(np.max(np.linalg.norm(R, axis=1)))
    return max(res, equality_residual(X, X.adjoint()))


def commutativity_residual(X: OperatorSpace) -> float:
    b = X.basis
    c = pair_products(b, b) - np.swapaxes(pair_products(b, b), 0, 1)
    return float(np.max(np.abs(c), initial=0.0))


def is_commutative(X: OperatorSpace, tol: float = DEFAULT_TOL) -> bool:
    return commutativity_residual(X) <= tol


def spans_space(X: OperatorSpace, tol: float = DEFAULT_TOL) -> float:
    """Residual of [X domain] = codomain: 0 when the ranges of X fill the codomain."""
    m = X.codomain.dim
    if m == 0:
        return 0.0
    cols = np.transpose(X.basis, (1, 0, 2)).reshape(m, -1)
    if cols.shape[1] == 0:
        return 1.0
    s = np.linalg.svd(cols, compute_uv=False)
    r = int(np.count_nonzero(s > RANK_RTOL * max(s[0], 1.0)))
    return 0.0 if r == m else 1.0


def stack_columns(ops: np.ndarray) -> np.ndarray:
    """Horizontally concatenate a stack of matrices (n, m, k) -> (m, n*k)."""
    n, m, k = ops.shape
    return np.transpose(ops, (1, 0, 2)).reshape(m, n * k)


def solve_operator(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares X with X A = B; returns X and the relative residual."""
    if A.shape[1] == 0:
        return np.zeros((B.shape[0], A.shape[0]), dtype=complex), 0.0
    XH, *_ = np.linalg.lstsq(A.conj().T, B.conj().T, rcond=None)
    X = XH.conj().T
    res = float(np.linalg.norm(X @ A - B)) / max(1.0, float(np.linalg.norm(B)))
    return X, res


def opnorm(T: np.ndarray) -> float:
    if T.size == 0:
        return 0.0
    return float(np.linalg.norm(T, 2))


def unitarity_residual(U: np.ndarray) -> float:
    if U.shape[0] != U.shape[1]:
        return float("inf")
    I = np.eye(U.shape[0])
    return max(opnorm(U.conj().T @ U - I), opnorm(U @ U.conj().T - I))


def pair_products(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All products A[i] @ B[j], shape (len(A), len(B), m, k)."""
    return np.matmul(A[:, None], B[None])


def right_pinv(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Pseudo-inverse of a wide matrix through its small Gram matrix A A^H."""
    m, n = A.shape
    if m == 0 or n == 0:
        return np.zeros((n, m), dtype=complex)
    if m > n:
        return np.linalg.pinv(A, rcond=rtol)
    G = A @ A.conj().T
    w, U = np.linalg.eigh((G + G.conj().T) / 2)
    top = max(float(w[-1]), 0.0)
    keep = w > (rtol ** 2) * max(top, 1.0) * 1e2 if top > 0 else np.zeros_like(w, dtype=bool)
    Ginv = (U[:, keep] / w[keep]) @ U[:, keep].conj().T
    return A.conj().T @ Ginv


def rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > rtol * max(s[0], 1.0)))


def iter_basis(spaces: Iterable[OperatorSpace]):
    for X in spaces:
        yield from X.basis
