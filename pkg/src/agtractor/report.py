"""Verification reports and their canonical JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = ["VerificationReport", "PreconditionError", "STATUSES", "merge", "to_jsonable", "dumps"]

STATUSES = ("pass", "fail", "skipped", "inconclusive")


def to_jsonable(obj):
    """Convert exact values, tensors and arrays into JSON-ready data."""
    from .poly import Poly
    from .tensor import IndexedTensor

    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Poly):
        return obj.to_json()
    if isinstance(obj, IndexedTensor):
        return obj.to_json()
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class VerificationReport:
    test_id: str
    status: str
    residual: object = None
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def to_json(self, include_timing: bool = False) -> dict:
        out = {"test_id": self.test_id, "status": self.status}
        if self.status == "fail" and self.residual is not None:
            out["residual"] = to_jsonable(self.residual)
        if self.details:
            out["details"] = to_jsonable(self.details)
        if include_timing:
            out["elapsed_s"] = round(self.elapsed, 3)
        return out

    @classmethod
    def check(cls, test_id: str, ok: bool, residual=None, **details) -> "VerificationReport":
        return cls(test_id, "pass" if ok else "fail", None if ok else residual, details)

    def __str__(self):
        return f"[{self.status.upper():>12}] {self.test_id}"


def merge(reports) -> list:
    """Deterministic ordering by test id (stable for equal ids)."""
    return sorted(reports, key=lambda r: r.test_id)


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class PreconditionError(ValueError):
    """An operation was called on inputs outside its stated domain."""
