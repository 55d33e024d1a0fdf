"""The JSON audit report and its text rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .certificates import StabilityCertificate
from .exceptions import InvariantViolation

SCHEMA_VERSION = 1


@dataclass
class MethodEntry:
    """One bound produced by one method.  ``value`` is ``None`` when there is no finite bound."""

    method: str
    bound_type: str
    value: int | None
    runtime_ms: float
    verified: bool = False
    removal_set: list[int] | None = None
    qualifiers: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @classmethod
    def from_certificate(cls, cert: StabilityCertificate, runtime_ms: float, notes=()) -> "MethodEntry":
        removal = list(cert.removed) if cert.bound_type in ("upper", "exact") else None
        return cls(cert.method, cert.bound_type, int(cert.value), runtime_ms, bool(cert.verified),
                   removal, list(cert.qualifiers), list(notes))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"method": self.method, "bound_type": self.bound_type}
        if self.value is not None:
            out["value"] = int(self.value)
        if self.removal_set is not None:
            out["removal_set"] = [int(i) for i in self.removal_set]
        out["runtime_ms"] = round(float(self.runtime_ms), 3)
        out["verified"] = bool(self.verified)
        out["qualifiers"] = list(self.qualifiers)
        out["notes"] = list(self.notes)
        return out


@dataclass
class AuditReport:
    """All method results for one dataset, with the aggregated bounds.

    The summary's lower bound is the largest lower (or exact) value; its upper
    bound is the smallest *verified* upper (or exact) value.
    """

    dataset: dict[str, Any]
    beta_full: list[float]
    entries: list[MethodEntry] = field(default_factory=list)
    skipped: list[dict[str, str]] = field(default_factory=list)

    def add(self, entry: MethodEntry) -> None:
        self.entries.append(entry)

    def skip(self, method: str, note: str) -> None:
        self.skipped.append({"method": method, "note": note})

    def summary(self) -> dict[str, int]:
        lower = [e.value for e in self.entries
                 if e.value is not None and e.bound_type in ("lower", "exact")]
        upper = [e.value for e in self.entries
                 if e.value is not None and e.verified and e.bound_type in ("upper", "exact")]
        out = {}
        if lower:
            out["stability_lb"] = int(max(lower))
        if upper:
            out["stability_ub"] = int(min(upper))
        return out

    def check_invariants(self) -> None:
        for e in self.entries:
            if e.bound_type in ("upper", "exact") and e.value is not None:
                if not e.verified:
                    raise InvariantViolation(f"{e.method}: upper bound {e.value} is not verified")
                if e.removal_set is None or len(e.removal_set) != e.value:
                    raise InvariantViolation(f"{e.method}: removal set size differs from value {e.value}")
        s = self.summary()
        if "stability_lb" in s and "stability_ub" in s and s["stability_lb"] > s["stability_ub"]:
            raise InvariantViolation(
                f"lower bound {s['stability_lb']} exceeds upper bound {s['stability_ub']}")

    def to_dict(self) -> dict[str, Any]:
        self.check_invariants()
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": dict(self.dataset),
            "beta_full": [float(b) for b in self.beta_full],
            "methods": [e.to_dict() for e in self.entries],
            "skipped": list(self.skipped),
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def render_table(self) -> str:
        """Plain-text table with one line per bound, followed by the summary."""
        ds = self.dataset
        head = f"dataset: {ds.get('path', '<memory>')}  n={ds.get('n')}  d={ds.get('d')}  target={ds.get('target')}"
        rows = [("method", "bound", "value", "verified", "ms")]
        for e in self.entries:
            rows.append((e.method, e.bound_type, "-" if e.value is None else str(e.value),
                         "yes" if e.verified else "no", f"{e.runtime_ms:.1f}"))
        widths = [max(len(r[k]) for r in rows) for k in range(5)]
        lines = [head]
        for r in rows:
            lines.append("  ".join(c.ljust(w) if k < 2 else c.rjust(w)
                                   for k, (c, w) in enumerate(zip(r, widths))).rstrip())
        for e in self.entries:
            for q in e.qualifiers:
                lines.append(f"  [{e.method}] {q}")
            for note in e.notes:
                lines.append(f"  [{e.method}] {note}")
        for s in self.skipped:
            lines.append(f"  skipped {s['method']}: {s['note']}")
        summ = self.summary()
        lines.append(f"Stability in [{summ.get('stability_lb', '-')}, {summ.get('stability_ub', '-')}]")
        return "\n".join(lines) + "\n"
