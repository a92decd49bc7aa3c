"""Finite groupoids, Haar systems, quasi-invariant measures and the modular cocycle.

Arrows and units are integer indexed; labels are kept for reports and spec files.
Composition is a dense table with -1 marking non-composable pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidGroupoid, NotQuasiInvariant, ParseError


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    units: tuple[str, ...]
    arrows: tuple[str, ...]
    src: np.ndarray
    tgt: np.ndarray
    comp: np.ndarray
    inv: np.ndarray
    unit_arrow: np.ndarray

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_arrows(self) -> int:
        return len(self.arrows)

    def r(self, x: int) -> int:
        return int(self.tgt[x])

    def s(self, x: int) -> int:
        return int(self.src[x])

    def mul(self, x: int, y: int) -> int:
        z = int(self.comp[x, y])
        if z < 0:
            raise ValueError(f"arrows {self.arrows[x]} and {self.arrows[y]} are not composable")
        return z

    def range_fiber(self, u: int) -> list[int]:
        """Arrows with range u."""
        return [x for x in range(self.n_arrows) if self.tgt[x] == u]

    def source_fiber(self, u: int) -> list[int]:
        return [x for x in range(self.n_arrows) if self.src[x] == u]

    def composable_pairs(self) -> list[tuple[int, int]]:
        """Pairs (x, y) with s(x) = r(y), lexicographic."""
        return [(x, y) for x in range(self.n_arrows) for y in range(self.n_arrows) if self.src[x] == self.tgt[y]]

    def range_pairs(self) -> list[tuple[int, int]]:
        """Pairs (x, y) with r(x) = r(y), lexicographic."""
        return [(x, y) for x in range(self.n_arrows) for y in range(self.n_arrows) if self.tgt[x] == self.tgt[y]]

    def is_unit_arrow(self, x: int) -> bool:
        return bool(self.unit_arrow[self.src[x]] == x)

    def arrow_index(self, label: str) -> int:
        return self.arrows.index(label)

    def unit_index(self, label: str) -> int:
        return self.units.index(label)


def make_groupoid(
    units: Sequence[str],
    arrows: Sequence[str],
    src: Sequence[int],
    tgt: Sequence[int],
    comp,
    inv: Sequence[int],
) -> FiniteGroupoid:
    """Validate raw groupoid data and return a FiniteGroupoid.

    ``comp`` is either an (n, n) integer table with -1 for undefined products or
    a mapping ``{(x, y): z}``.  Raises InvalidGroupoid naming the first failed axiom.
    """
    units = tuple(str(u) for u in units)
    arrows = tuple(str(a) for a in arrows)
    n, m = len(arrows), len(units)
    if len(set(units)) != m or len(set(arrows)) != n:
        raise InvalidGroupoid("labels must be unique")
    src = np.asarray(src, dtype=int)
    tgt = np.asarray(tgt, dtype=int)
    inv = np.asarray(inv, dtype=int)
    if src.shape != (n,) or tgt.shape != (n,) or inv.shape != (n,):
        raise InvalidGroupoid("source, range and inverse maps must be total on arrows")
    if n and (src.min() < 0 or src.max() >= m or tgt.min() < 0 or tgt.max() >= m):
        raise InvalidGroupoid("source/range map outside the unit set")
    if n and (inv.min() < 0 or inv.max() >= n):
        raise InvalidGroupoid("inverse map outside the arrow set")
    if isinstance(comp, Mapping):
        table = -np.ones((n, n), dtype=int)
        for (x, y), z in comp.items():
            table[x, y] = z
    else:
        table = np.asarray(comp, dtype=int).reshape(n, n)
    if n and table.max() >= n:
        raise InvalidGroupoid("composition lands outside the arrow set")

    for x, y in iproduct(range(n), range(n)):
        defined = table[x, y] >= 0
        if defined != (src[x] == tgt[y]):
            raise InvalidGroupoid(
                f"composability: product {arrows[x]}*{arrows[y]} must be defined iff s(x)=r(y)"
            )
        if defined:
            z = table[x, y]
            if tgt[z] != tgt[x] or src[z] != src[y]:
                raise InvalidGroupoid(f"range/source of product {arrows[x]}*{arrows[y]} (need r(xy)=r(x), s(xy)=s(y))")
    for x, y in iproduct(range(n), range(n)):
        if table[x, y] < 0:
            continue
        for w in range(n):
            if src[y] != tgt[w]:
                continue
            if table[table[x, y], w] != table[x, table[y, w]]:
                raise InvalidGroupoid(f"associativity fails on ({arrows[x]},{arrows[y]},{arrows[w]})")

    unit_arrow = -np.ones(m, dtype=int)
    for u in range(m):
        for e in range(n):
            if src[e] != u or tgt[e] != u:
                continue
            left = all(table[e, y] == y for y in range(n) if tgt[y] == u)
            right = all(table[x, e] == x for x in range(n) if src[x] == u)
            if left and right:
                unit_arrow[u] = e
                break
        if unit_arrow[u] < 0:
            raise InvalidGroupoid(f"unit {units[u]} has no neutral arrow")
    for x in range(n):
        y = inv[x]
        if src[y] != tgt[x] or tgt[y] != src[x]:
            raise InvalidGroupoid(f"inverse of {arrows[x]} has the wrong range/source")
        if table[y, x] != unit_arrow[src[x]] or table[x, y] != unit_arrow[tgt[x]]:
            raise InvalidGroupoid(f"inverse law fails for {arrows[x]}")

    return FiniteGroupoid(units, arrows, src, tgt, table, inv, unit_arrow)


# ---------------------------------------------------------------- standard zoo


def unit_groupoid(n: int) -> FiniteGroupoid:
    units = [str(i) for i in range(n)]
    arrows = [f"id{i}" for i in range(n)]
    comp = {(i, i): i for i in range(n)}
    return make_groupoid(units, arrows, range(n), range(n), comp, range(n))


def pair_groupoid(n: int) -> FiniteGroupoid:
    """Arrow ``i<-j`` has range i and source j."""
    units = [str(i) for i in range(n)]
    idx = {(i, j): i * n + j for i in range(n) for j in range(n)}
    arrows = [f"{i}<-{j}" for i in range(n) for j in range(n)]
    src = [j for i in range(n) for j in range(n)]
    tgt = [i for i in range(n) for j in range(n)]
    comp = {(idx[i, j], idx[j, k]): idx[i, k] for i in range(n) for j in range(n) for k in range(n)}
    inv = [idx[j, i] for i in range(n) for j in range(n)]
    return make_groupoid(units, arrows, src, tgt, comp, inv)


def cyclic_table(n: int) -> np.ndarray:
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def _check_group(table: np.ndarray) -> int:
    k = table.shape[0]
    if table.shape != (k, k) or table.min() < 0 or table.max() >= k:
        raise InvalidGroupoid("cayley table must be square with entries in range")
    ident = [e for e in range(k) if all(table[e, g] == g and table[g, e] == g for g in range(k))]
    if not ident:
        raise InvalidGroupoid("cayley table has no identity")
    return ident[0]


def group_groupoid(cayley_table, labels: Sequence[str] | None = None) -> FiniteGroupoid:
    table = np.asarray(cayley_table, dtype=int)
    k = table.shape[0]
    e = _check_group(table)
    inv = []
    for g in range(k):
        hs = [h for h in range(k) if table[g, h] == e and table[h, g] == e]
        if not hs:
            raise InvalidGroupoid(f"element {g} has no inverse")
        inv.append(hs[0])
    labels = [str(g) for g in range(k)] if labels is None else list(labels)
    comp = {(g, h): int(table[g, h]) for g in range(k) for h in range(k)}
    return make_groupoid(["*"], labels, [0] * k, [0] * k, comp, inv)


def cyclic_groupoid(n: int) -> FiniteGroupoid:
    return group_groupoid(cyclic_table(n))


def transformation_groupoid(cayley_table, action: Sequence[Sequence[int]], points: Sequence[str] | None = None) -> FiniteGroupoid:
    """Action groupoid of a finite group acting on a finite set.

    ``action[g][p]`` is the image of point p under g.  The arrow ``(g, p)`` goes
    from p to g.p, and (g, h.p)(h, p) = (gh, p).
    """
    table = np.asarray(cayley_table, dtype=int)
    k = table.shape[0]
    e = _check_group(table)
    act = np.asarray(action, dtype=int)
    npts = act.shape[1]
    if act.shape != (k, npts):
        raise InvalidGroupoid("action must list one permutation per group element")
    for g in range(k):
        if sorted(act[g]) != list(range(npts)):
            raise InvalidGroupoid(f"action of {g} is not a permutation")
        for h in range(k):
            if not np.array_equal(act[table[g, h]], act[g][act[h]]):
                raise InvalidGroupoid("action is not a homomorphism")
    if not np.array_equal(act[e], np.arange(npts)):
        raise InvalidGroupoid("identity must act trivially")
    points = [str(p) for p in range(npts)] if points is None else list(points)
    idx = {(g, p): g * npts + p for g in range(k) for p in range(npts)}
    arrows = [f"{g}.{points[p]}" for g in range(k) for p in range(npts)]
    src = [p for g in range(k) for p in range(npts)]
    tgt = [int(act[g, p]) for g in range(k) for p in range(npts)]
    comp = {}
    for g, h, p in iproduct(range(k), range(k), range(npts)):
        comp[idx[g, int(act[h, p])], idx[h, p]] = idx[int(table[g, h]), p]
    ginv = [next(h for h in range(k) if table[g, h] == e) for g in range(k)]
    inv = [idx[ginv[g], int(act[g, p])] for g in range(k) for p in range(npts)]
    return make_groupoid(points, arrows, src, tgt, comp, inv)


def disjoint_union(g1: FiniteGroupoid, g2: FiniteGroupoid) -> FiniteGroupoid:
    n1, m1 = g1.n_arrows, g1.n_units
    units = [f"0/{u}" for u in g1.units] + [f"1/{u}" for u in g2.units]
    arrows = [f"0/{a}" for a in g1.arrows] + [f"1/{a}" for a in g2.arrows]
    src = list(g1.src) + [s + m1 for s in g2.src]
    tgt = list(g1.tgt) + [t + m1 for t in g2.tgt]
    comp = {}
    for x, y in g1.composable_pairs():
        comp[x, y] = int(g1.comp[x, y])
    for x, y in g2.composable_pairs():
        comp[x + n1, y + n1] = int(g2.comp[x, y]) + n1
    inv = list(g1.inv) + [i + n1 for i in g2.inv]
    return make_groupoid(units, arrows, src, tgt, comp, inv)


def product(g1: FiniteGroupoid, g2: FiniteGroupoid) -> FiniteGroupoid:
    """Cartesian product; arrows ordered lexicographically (kron order)."""
    n2, m2 = g2.n_arrows, g2.n_units
    units = [f"({u},{v})" for u in g1.units for v in g2.units]
    arrows = [f"({a},{b})" for a in g1.arrows for b in g2.arrows]
    src = [g1.src[a] * m2 + g2.src[b] for a in range(g1.n_arrows) for b in range(n2)]
    tgt = [g1.tgt[a] * m2 + g2.tgt[b] for a in range(g1.n_arrows) for b in range(n2)]
    comp = {}
    for x1, y1 in g1.composable_pairs():
        for x2, y2 in g2.composable_pairs():
            comp[x1 * n2 + x2, y1 * n2 + y2] = int(g1.comp[x1, y1]) * n2 + int(g2.comp[x2, y2])
    inv = [g1.inv[a] * n2 + g2.inv[b] for a in range(g1.n_arrows) for b in range(n2)]
    return make_groupoid(units, arrows, src, tgt, comp, inv)


# ----------------------------------------------------------- measures


@dataclass(frozen=True, eq=False)
class HaarSystem:
    """Weights lambda(x) = lambda^{r(x)}({x})."""

    weight: np.ndarray


@dataclass(frozen=True, eq=False)
class QuasiInvariantMeasure:
    mu: np.ndarray
    nu: np.ndarray
    nu_inv: np.ndarray
    D: np.ndarray


def counting_haar(G: FiniteGroupoid) -> HaarSystem:
    return HaarSystem(np.ones(G.n_arrows))


def left_invariance_residual(G: FiniteGroupoid, lam: HaarSystem) -> float:
    """Largest defect of sum_{y in G^{s(x)}} g(xy) lam(y) = sum_{z in G^{r(x)}} g(z) lam(z).

    Every g on G^{r(x)} is a combination of point masses, so testing all point
    masses decides the identity for all g.
    """
    w = lam.weight
    worst = 0.0
    for x in range(G.n_arrows):
        for z in G.range_fiber(G.r(x)):
            lhs = sum(w[y] for y in G.range_fiber(G.s(x)) if G.comp[x, y] == z)
            worst = max(worst, abs(lhs - w[z]))
    return float(worst)


def verify_left_invariance(G: FiniteGroupoid, lam: HaarSystem, tol: float = 1e-12) -> bool:
    return left_invariance_residual(G, lam) <= tol


def radon_nikodym(G: FiniteGroupoid, lam: HaarSystem, mu) -> QuasiInvariantMeasure:
    """nu = mu o r times lambda, nu_inv(x) = nu(x^{-1}) and D = nu / nu_inv."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (G.n_units,):
        raise NotQuasiInvariant("measure must assign a weight to every unit")
    if np.any(mu <= 0) or np.any(lam.weight <= 0):
        raise NotQuasiInvariant("zero or negative weights are not quasi-invariant")
    nu = mu[G.tgt] * lam.weight
    nu_inv = nu[G.inv]
    D = nu / nu_inv
    defect = cocycle_residual(G, D)
    if defect > 1e-12 * max(1.0, float(np.max(D))):
        raise NotQuasiInvariant(f"modular function is not a cocycle (defect {defect:.2e}); Haar system not invariant?")
    return QuasiInvariantMeasure(mu, nu, nu_inv, D)


def cocycle_residual(G: FiniteGroupoid, D: np.ndarray) -> float:
    worst = 0.0
    for x, y in G.composable_pairs():
        worst = max(worst, abs(D[x] * D[y] - D[G.comp[x, y]]))
    return float(worst)


# ----------------------------------------------------------- spec files


@dataclass
class GroupoidSpec:
    groupoid: FiniteGroupoid
    haar: HaarSystem
    mu: np.ndarray
    names: dict = field(default_factory=dict)


def parse_groupoid_spec(text: str) -> GroupoidSpec:
    """Parse the line-based groupoid format.

    Lines: ``unit u``, ``arrow x : s -> t``, ``compose x y = z``,
    ``inverse x = y``, ``measure u = w``, ``haar x = w``; ``#`` starts a comment.
    """
    units: list[str] = []
    arrows: list[str] = []
    ends: dict[str, tuple[str, str]] = {}
    comps: dict[tuple[str, str], str] = {}
    invs: dict[str, str] = {}
    measure: dict[str, float] = {}
    haar: dict[str, float] = {}
    lines_of: dict[str, int] = {}

    def num(tok: str, ln: int) -> float:
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(ln, f"expected a number, got {tok!r}") from None
        if not np.isfinite(v):
            raise ParseError(ln, "weights must be finite")
        return v

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        if kw == "unit" and len(tok) == 2:
            if tok[1] in units:
                raise ParseError(ln, f"duplicate unit {tok[1]}")
            units.append(tok[1])
        elif kw == "arrow" and len(tok) == 6 and tok[2] == ":" and tok[4] == "->":
            if tok[1] in arrows:
                raise ParseError(ln, f"duplicate arrow {tok[1]}")
            arrows.append(tok[1])
            ends[tok[1]] = (tok[3], tok[5])
            lines_of[tok[1]] = ln
        elif kw == "compose" and len(tok) == 5 and tok[3] == "=":
            comps[tok[1], tok[2]] = tok[4]
            lines_of[f"c:{tok[1]}:{tok[2]}"] = ln
        elif kw == "inverse" and len(tok) == 4 and tok[2] == "=":
            invs[tok[1]] = tok[3]
            lines_of[f"i:{tok[1]}"] = ln
        elif kw == "measure" and len(tok) == 4 and tok[2] == "=":
            measure[tok[1]] = num(tok[3], ln)
            lines_of[f"m:{tok[1]}"] = ln
        elif kw == "haar" and len(tok) == 4 and tok[2] == "=":
            haar[tok[1]] = num(tok[3], ln)
            lines_of[f"h:{tok[1]}"] = ln
        else:
            raise ParseError(ln, f"cannot parse {raw.strip()!r}")

    uidx = {u: i for i, u in enumerate(units)}
    aidx = {a: i for i, a in enumerate(arrows)}
    for a, (s, t) in ends.items():
        for u in (s, t):
            if u not in uidx:
                raise ParseError(lines_of[a], f"unknown unit {u}")
    table = {}
    for (x, y), z in comps.items():
        ln = lines_of[f"c:{x}:{y}"]
        for a in (x, y, z):
            if a not in aidx:
                raise ParseError(ln, f"unknown arrow {a}")
        table[aidx[x], aidx[y]] = aidx[z]
    inv = []
    for a in arrows:
        if a not in invs:
            raise InvalidGroupoid(f"no inverse given for {a}")
        b = invs[a]
        if b not in aidx:
            raise ParseError(lines_of[f"i:{a}"], f"unknown arrow {b}")
        inv.append(aidx[b])
    for key in measure:
        if key not in uidx:
            raise ParseError(lines_of[f"m:{key}"], f"unknown unit {key}")
    for key in haar:
        if key not in aidx:
            raise ParseError(lines_of[f"h:{key}"], f"unknown arrow {key}")
    G = make_groupoid(
        units,
        arrows,
        [uidx[ends[a][0]] for a in arrows],
        [uidx[ends[a][1]] for a in arrows],
        table,
        inv,
    )
    lam = HaarSystem(np.array([haar.get(a, 1.0) for a in arrows]))
    mu = np.array([measure.get(u, 1.0) for u in units])
    return GroupoidSpec(G, lam, mu)


def format_groupoid_spec(G: FiniteGroupoid, lam: HaarSystem | None = None, mu=None) -> str:
    out = [f"unit {u}" for u in G.units]
    out += [f"arrow {a} : {G.units[G.src[i]]} -> {G.units[G.tgt[i]]}" for i, a in enumerate(G.arrows)]
    out += [f"compose {G.arrows[x]} {G.arrows[y]} = {G.arrows[G.comp[x, y]]}" for x, y in G.composable_pairs()]
    out += [f"inverse {a} = {G.arrows[G.inv[i]]}" for i, a in enumerate(G.arrows)]
    if mu is not None:
        out += [f"measure {u} = {float(w)!r}" for u, w in zip(G.units, mu)]
    if lam is not None:
        out += [f"haar {a} = {float(w)!r}" for a, w in zip(G.arrows, lam.weight)]
    return "\n".join(out) + "\n"
