"""Command-line front end: build a unitary from a groupoid and run verification suites."""
from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import click
import numpy as np

from .errors import InvalidGroupoid, ParseError, PmuError
from .fixedpoints import (cofixed_space, counit, fixed_space, haar_weight, is_compact, is_etale, is_proper,
                          fiber_sum_haar_weight, verify_counit, verify_fixed, verify_left_haar)
from .groupoid import (FiniteGroupoid, HaarSystem, cocycle_residual, counting_haar, cyclic_groupoid,
                       disjoint_union, left_invariance_residual, pair_groupoid, parse_groupoid_spec, product,
                       radon_nikodym, transformation_groupoid, unit_groupoid)
from .legs import (leg, leg_hat, pairing_matrix, regularity_residual, verify_hopf, verify_leg_relations)
from .opspace import OperatorSpace, commutativity_residual, equality_residual
from .pmu import PMU, cross_validate, groupoid_pmu, verify_pmu
from .report import Report
from .reps import (conjugated_bundle, corep_from_groupoid_rep, corep_isomorphism, left_regular_bundle,
                   random_unitary, regular_corep, regular_rep, round_trip_corep, round_trip_rep, trivial_bundle, trivial_corep, trivial_rep,
                   verify_corep, verify_rep, verify_rep_legs)

DEFAULT_TOL = 1e-8


@dataclass
class Target:
    name: str
    groupoid: FiniteGroupoid
    haar: HaarSystem
    mu: np.ndarray

    def pmu(self) -> PMU:
        return groupoid_pmu(self.groupoid, self.haar, self.mu, name=self.name)


# ----------------------------------------------------------------------------
# builtin zoo


def _split_pair(arg: str) -> tuple[str, str]:
    """Split ``a,b`` at the first top-level comma; parentheses group nested names."""
    depth = 0
    for i, ch in enumerate(arg):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return _strip_parens(arg[:i]), _strip_parens(arg[i + 1:])
    raise InvalidGroupoid(f"expected two comma-separated names in {arg!r}")


def _strip_parens(s: str) -> str:
    s = s.strip()
    return s[1:-1] if s.startswith("(") and s.endswith(")") else s


def builtin_groupoid(name: str) -> FiniteGroupoid:
    """Groupoids by name: unit<n>, pair<n>, z<n>, flip<n>, dsum:<a>,<b>, prod:<a>,<b>.

    ``flip<n>`` is the action groupoid of Z/2 reversing n points.
    """
    name = name.strip()
    for prefix, fn in (("dsum:", disjoint_union), ("prod:", product)):
        if name.startswith(prefix):
            a, b = _split_pair(name[len(prefix):])
            return fn(builtin_groupoid(a), builtin_groupoid(b))
    m = re.fullmatch(r"(unit|pair|z|flip)(\d+)", name)
    if not m or int(m.group(2)) < 1:
        raise InvalidGroupoid(f"unknown builtin groupoid {name!r}")
    kind, n = m.group(1), int(m.group(2))
    if kind == "unit":
        return unit_groupoid(n)
    if kind == "pair":
        return pair_groupoid(n)
    if kind == "z":
        return cyclic_groupoid(n)
    rev = list(range(n))[::-1]
    return transformation_groupoid([[0, 1], [1, 0]], [list(range(n)), rev])


def parse_measure(text: str | None, G: FiniteGroupoid, mu: np.ndarray) -> np.ndarray:
    """Apply ``u=w,...`` overrides to the unit measure."""
    mu = np.array(mu, dtype=float)
    if not text:
        return mu
    idx = {u: i for i, u in enumerate(G.units)}
    for item in text.split(","):
        if "=" not in item:
            raise click.BadParameter(f"expected unit=weight, got {item!r}", param_hint="--measure")
        u, w = (s.strip() for s in item.split("=", 1))
        if u not in idx:
            raise click.BadParameter(f"unknown unit {u!r}", param_hint="--measure")
        try:
            v = float(w)
        except ValueError:
            raise click.BadParameter(f"weight {w!r} is not a number", param_hint="--measure") from None
        if not np.isfinite(v) or v <= 0:
            raise click.BadParameter("weights must be positive and finite", param_hint="--measure")
        mu[idx[u]] = v
    return mu


def load_target(source: str, measure: str | None = None) -> Target:
    """Resolve ``builtin:<name>``, a bare builtin name, or a groupoid spec file."""
    if source.startswith("builtin:"):
        G = builtin_groupoid(source[len("builtin:"):])
        lam, mu = counting_haar(G), np.ones(G.n_units)
    elif Path(source).is_file():
        spec = parse_groupoid_spec(Path(source).read_text(encoding="utf-8"))
        G, lam, mu = spec.groupoid, spec.haar, spec.mu
    else:
        G = builtin_groupoid(source)
        lam, mu = counting_haar(G), np.ones(G.n_units)
    return Target(source, G, lam, parse_measure(measure, G, mu))


# ----------------------------------------------------------------------------
# suites


def cmd_verify(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    rep = Report(f"verify {t.name}")
    G = t.groupoid
    rep.data["arrows"] = G.n_arrows
    rep.data["units"] = G.n_units
    rep.add("Haar system left invariant", left_invariance_residual(G, t.haar), tol, "Haar system")
    q = radon_nikodym(G, t.haar, t.mu)
    rep.add("D cocycle", cocycle_residual(G, q.D), tol, "Radon-Nikodym cocycle")
    P = t.pmu()
    rep.extend(verify_pmu(P, tol))
    rep.extend(cross_validate(P), prefix="cross-validation: ")
    return rep


def cmd_legs(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    P = t.pmu()
    G = t.groupoid
    rep = Report(f"legs {t.name}")
    Ah, A = leg_hat(P), leg(P)
    rep.data["dim_Ahat"] = int(Ah.dim)
    rep.data["dim_A"] = int(A.dim)
    rep.data["arrows"] = G.n_arrows
    diag = np.zeros((G.n_arrows, G.n_arrows, G.n_arrows), dtype=complex)
    diag[np.arange(G.n_arrows), np.arange(G.n_arrows), np.arange(G.n_arrows)] = 1
    rep.add("Ahat = multiplication operators", equality_residual(Ah, OperatorSpace(P.H, P.H, diag)), tol,
            "groupoid legs")
    rep.add("Ahat commutative", commutativity_residual(Ah), tol, "groupoid legs")
    rep.add("regular: C = [alpha alpha*]", regularity_residual(P), tol, "regularity")
    rep.extend(verify_leg_relations(P, tol), prefix="relations: ")
    return rep


def cmd_hopf(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    P = t.pmu()
    rep = Report(f"hopf {t.name}")
    rep.extend(verify_hopf(P, "hat", tol), prefix="Ahat: ")
    rep.extend(verify_hopf(P, "plain", tol), prefix="A: ")
    pm = pairing_matrix(P)
    rep.data["pairing rank (hat side)"] = int(pm["rank_hat"])
    rep.data["pairing rank (plain side)"] = int(pm["rank_plain"])
    rep.add("pairing computed both ways agrees", pm["consistency"], tol, "Fourier pairing")
    rep.add("pairing nondegenerate on Ahat", abs(pm["rank_hat"] - pm["dim_hat"]), 0.5, "Fourier pairing")
    rep.add("pairing nondegenerate on A", abs(pm["rank_plain"] - pm["dim_plain"]), 0.5, "Fourier pairing")
    return rep


def cmd_fixed(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    P = t.pmu()
    G = t.groupoid
    rep = Report(f"fixed {t.name}")
    fx, cf = fixed_space(P, seed), cofixed_space(P, seed)
    rep.data["dim Fix"] = int(fx.dim)
    rep.data["dim Cofix"] = int(cf.dim)
    rep.add("dim Fix = |units|", abs(fx.dim - G.n_units), 0.5, "fixed elements")
    rep.add("dim Cofix = |units|", abs(cf.dim - G.n_units), 0.5, "fixed elements")
    rep.add_bool("etale", is_etale(P), ref="fixed elements")
    rep.add_bool("proper", is_proper(P), ref="fixed elements")
    rep.add_bool("compact", is_compact(P), ref="fixed elements")
    rep.extend(verify_fixed(P, tol, seed), prefix="fixed: ")
    rep.extend(verify_counit(P, counit(P), tol, seed), prefix="counit: ")
    rep.extend(verify_left_haar(P, haar_weight(P), tol, seed), prefix="haar: ")
    # the unnormalized weight is reported, not checked
    fsum = verify_left_haar(P, fiber_sum_haar_weight(P), tol, seed)
    rep.data["unnormalized weight: norm phi(Id)"] = fsum.data.get("norm phi(Id)")
    rep.data["unnormalized weight: failed checks"] = [c.name for c in fsum.failures()]
    return rep


def cmd_reps(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    P = t.pmu()
    G = t.groupoid
    rep = Report(f"reps {t.name}")
    one, Vr = trivial_rep(P), regular_rep(P)
    rep.extend(verify_rep(one, tol), prefix="trivial rep: ")
    rep.extend(verify_rep(Vr, tol), prefix="regular rep: ")
    rep.extend(verify_rep_legs(Vr, tol), prefix="regular rep legs: ")
    rng = np.random.default_rng(seed)
    triv, lreg = trivial_bundle(G), left_regular_bundle(G)
    conj = conjugated_bundle(lreg, [random_unitary(d, rng) for d in lreg.dims])
    for label, R in (("trivial bundle", triv), ("left regular bundle", lreg), ("conjugated bundle", conj)):
        rep.extend(round_trip_rep(P, R), prefix=f"{label}: ")
    for label, C in (("trivial corep", trivial_corep(P)), ("regular corep", regular_corep(P))):
        rep.extend(verify_corep(C, tol), prefix=f"{label}: ")
        rep.extend(round_trip_corep(P, C), prefix=f"{label}: ")
    iso = corep_isomorphism(corep_from_groupoid_rep(P, lreg), regular_corep(P), seed)
    rep.add_bool("F(left regular bundle) ~ regular corep", iso is not None, ref="equivalence")
    return rep


SUITES: dict[str, Callable[..., Report]] = {
    "verify": cmd_verify,
    "legs": cmd_legs,
    "hopf": cmd_hopf,
    "fixed": cmd_fixed,
    "reps": cmd_reps,
}


def cmd_all(t: Target, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    rep = Report(f"all {t.name}")
    for name, fn in SUITES.items():
        rep.extend(fn(t, tol, seed), prefix=f"{name}: ")
    return rep


# ----------------------------------------------------------------------------
# output


def render(rep: Report, fmt: str) -> str:
    if fmt == "text":
        return rep.to_text()
    d = rep.to_dict()
    for k, v in rep.data.items():
        d.setdefault(k, v)
    return json.dumps(d, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v).__name__}")


def _run(name: str, source: str, tol: float, fmt: str, measure: str | None, seed: int) -> None:
    if tol <= 0:
        raise click.BadParameter("must be positive", param_hint="--tol")
    try:
        t = load_target(source, measure)
        fn = cmd_all if name == "all" else SUITES[name]
        rep = fn(t, tol, seed)
    except ParseError as exc:
        click.echo(f"ParseError: {exc}", err=True)
        sys.exit(2)
    except PmuError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(2)
    click.echo(render(rep, fmt), nl=False)
    sys.exit(0 if rep.passed else 1)


def _options(f):
    f = click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized checks.")(f)
    f = click.option("--measure", default=None, help="Unit measure overrides, e.g. 0=1,1=2.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)(f)
    f = click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Residual tolerance.")(f)
    f = click.argument("source")(f)
    return f


@click.group()
def main() -> None:
    """Verify the unitary of a finite groupoid.

    SOURCE is a spec file or a builtin name such as builtin:pair3, z4, unit2,
    flip3, dsum:pair2,z2 or prod:z2,pair2.
    """


def _make(name: str, doc: str) -> None:
    @_options
    def command(source: str, tol: float, fmt: str, measure: str | None, seed: int) -> None:
        _run(name, source, tol, fmt, measure, seed)

    command.__doc__ = doc
    main.command(name)(command)


_make("verify", "Unitarity, intertwining relations, pentagon and cross-validation.")
_make("legs", "Leg dimensions, algebra relations and regularity.")
_make("hopf", "Hopf bimodule checks for both legs and the Fourier pairing.")
_make("fixed", "Fixed and cofixed elements, counit and Haar weight.")
_make("reps", "Representations, corepresentations and the bundle equivalence.")
_make("all", "Every suite.")


if __name__ == "__main__":
    main()
