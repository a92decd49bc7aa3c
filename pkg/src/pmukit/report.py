"""Verification reports: named checks with residuals and reference tags."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    ref: str = ""


@dataclass
class Report:
    title: str = ""
    checks: list[Check] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, residual: float, tol: float = DEFAULT_TOL, ref: str = "") -> Check:
        residual = float(abs(residual))
        ok = math.isfinite(residual) and residual <= tol
        return self.add_bool(name, ok, residual, ref)

    def add_bool(self, name: str, passed: bool, residual: float = 0.0, ref: str = "") -> Check:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check name {name!r}")
        c = Check(name, bool(passed), float(residual), ref)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for c in other.checks:
            self.add_bool(prefix + c.name, c.passed, c.residual, c.ref)
        for k, v in other.data.items():
            self.data[prefix + k] = v
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def n_passed(self) -> int:
        return sum(c.passed for c in self.checks)

    @property
    def n_failed(self) -> int:
        return len(self.checks) - self.n_passed

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    # serialization --------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "checks": [asdict(c) for c in self.checks],
            "data": self.data,
            "summary": {"passed": self.n_passed, "failed": self.n_failed},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        r = cls(d.get("title", ""), data=dict(d.get("data", {})))
        for c in d.get("checks", []):
            r.checks.append(Check(c["name"], bool(c["passed"]), float(c["residual"]), c.get("ref", "")))
        return r

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        lines = []
        if self.title:
            lines.append(f"== {self.title} ==")
        for k in sorted(self.data):
            lines.append(f"  {k}: {self.data[k]}")
        width = max((len(c.name) for c in self.checks), default=0)
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            ref = f"  [{c.ref}]" if c.ref else ""
            lines.append(f"{tag}  {c.name.ljust(width)}  residual={c.residual:.3e}{ref}")
        lines.append(f"summary: {self.n_passed} passed, {self.n_failed} failed")
        return "\n".join(lines) + "\n"


def merge(reports: Iterable[Report], title: str = "") -> Report:
    out = Report(title)
    for r in reports:
        out.extend(r, prefix=f"{r.title}: " if r.title else "")
    return out
