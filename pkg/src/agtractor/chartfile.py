"""JSON chart files: parsing with located errors, and serialization.

A polynomial is either a list of ``[exponents, "p/q"]`` terms or a string
such as ``"x0*x3 - 1/2*x5^2 + 3"`` over the variables ``x0 .. x{2n-1}``.
See ``docs/formats.md`` for the full schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .poly import DegreeCapError, Poly, degree_cap, get_degree_cap, to_fraction
from .tensor import IndexedTensor, Slot
from .weyl import RHO_SLOTS, ChartWeylData, shear_matrices, validate

__all__ = ["ChartParseError", "ChartFile", "parse_chart", "load_chart", "parse_poly", "chart_to_json"]

BUNDLE_SLOTS = {"tractor": (Slot.FU,), "cotractor": (Slot.ED,)}


class ChartParseError(ValueError):
    """Malformed chart file; ``location`` is a JSON path or line:column."""

    def __init__(self, location: str, msg: str):
        super().__init__(f"{location}: {msg}")
        self.location = location


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>x\d+)|(?P<op>[-+*^()]))")


def parse_poly(nvars: int, text: str, where: str = "$") -> Poly:
    """Parse a polynomial string; errors carry the character offset."""
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ChartParseError(f"{where}@{pos}", f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    i = 0

    def peek():
        return tokens[i]

    def take():
        nonlocal i
        t = tokens[i]
        i += 1
        return t

    def fail(tok, msg):
        raise ChartParseError(f"{where}@{tok[2]}", msg)

    def atom():
        tok = take()
        if tok[0] == "num":
            if "/" in tok[1] and int(tok[1].split("/")[1]) == 0:
                fail(tok, f"zero denominator in {tok[1]!r}")
            return Poly.const(nvars, Fraction(tok[1]))
        if tok[0] == "var":
            k = int(tok[1][1:])
            if k >= nvars:
                fail(tok, f"variable {tok[1]} out of range for {nvars} variables")
            return Poly.var(nvars, k)
        if tok[1] == "(":
            v = expr()
            if take()[1] != ")":
                fail(tok, "unbalanced parenthesis")
            return v
        fail(tok, f"unexpected token {tok[1]!r}")

    def power():
        base = atom()
        if peek()[1] == "^":
            take()
            tok = take()
            if tok[0] != "num" or "/" in tok[1]:
                fail(tok, "exponent must be a non-negative integer")
            base = base ** int(tok[1])
        return base

    def unary():
        if peek()[1] in "+-" and peek()[0] == "op":
            sign = take()[1]
            v = unary()
            return -v if sign == "-" else v
        return power()

    def term():
        v = unary()
        while peek()[1] == "*":
            take()
            v = v * unary()
        return v

    def expr():
        v = term()
        while peek()[0] == "op" and peek()[1] in "+-":
            op = take()[1]
            v = v + term() if op == "+" else v - term()
        return v

    if tokens[0][0] == "end":
        fail(tokens[0], "empty polynomial")
    result = expr()
    if peek()[0] != "end":
        fail(peek(), f"trailing token {peek()[1]!r}")
    return result


def _poly(nvars: int, value, where: str) -> Poly:
    try:
        if isinstance(value, str):
            return parse_poly(nvars, value, where)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if isinstance(value, float):
                raise ChartParseError(where, "floats are not exact; use a \"p/q\" string")
            return Poly.const(nvars, value)
        if isinstance(value, list):
            return Poly.from_json(nvars, value)
    except ChartParseError:
        raise
    except DegreeCapError as e:
        raise ChartParseError(where, str(e)) from None
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ChartParseError(where, f"bad polynomial: {e}") from None
    raise ChartParseError(where, f"expected a polynomial, got {type(value).__name__}")


def _array(nvars: int, value, shape: tuple, where: str) -> np.ndarray:
    out = np.empty(shape, dtype=object)

    def fill(v, idx, path):
        depth = len(idx)
        if depth == len(shape):
            out[idx] = _poly(nvars, v, path)
            return
        if not isinstance(v, list) or len(v) != shape[depth]:
            raise ChartParseError(path, f"expected a list of length {shape[depth]}")
        for k, item in enumerate(v):
            fill(item, idx + (k,), f"{path}[{k}]")

    fill(value, (), where)
    return out


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ChartParseError(where, f"missing key {key!r}")
    return obj[key]


def _object(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ChartParseError(f"$.{key}", "expected an object")
    return value


@dataclass
class ChartFile:
    data: ChartWeylData
    sections: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def parse_chart(text: str, label: str = "chart") -> ChartFile:
    """Parse chart JSON text into validated chart data."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChartParseError(f"line {e.lineno}, column {e.colno}", e.msg) from None
    if not isinstance(raw, dict):
        raise ChartParseError("$", "top level must be an object")
    n = _require(raw, "n", "$")
    if not isinstance(n, int) or isinstance(n, bool) or n < 3:
        raise ChartParseError("$.n", "n must be an integer >= 3")
    meta = raw.get("metadata", {})
    if not isinstance(meta, dict):
        raise ChartParseError("$.metadata", "expected an object")
    cap = meta.get("degree_cap", get_degree_cap())
    if not isinstance(cap, int) or cap < 1:
        raise ChartParseError("$.metadata.degree_cap", "expected a positive integer")
    with degree_cap(cap):
        chart = _parse_body(raw, n, label)
    chart.metadata = meta
    return chart


def _parse_body(raw: dict, n: int, label: str) -> ChartFile:
    nv = 2 * n
    sold = _require(raw, "soldering", "$")
    if not isinstance(sold, dict):
        raise ChartParseError("$.soldering", "expected an object")
    if "shears" in sold:
        shears = []
        for k, sh in enumerate(sold["shears"]):
            w = f"$.soldering.shears[{k}]"
            if not isinstance(sh, dict):
                raise ChartParseError(w, "expected an object with row, col, entry")
            row, col = _require(sh, "row", w), _require(sh, "col", w)
            for key, v in (("row", row), ("col", col)):
                if not isinstance(v, int) or not 0 <= v < nv:
                    raise ChartParseError(f"{w}.{key}", f"index must lie in [0, {nv})")
            if row == col:
                raise ChartParseError(w, "shears must be off-diagonal")
            shears.append((row, col, _poly(nv, _require(sh, "entry", w), f"{w}.entry")))
        s, sinv = shear_matrices(n, shears)
    elif "matrix" in sold:
        s = _array(nv, sold["matrix"], (nv, nv), "$.soldering.matrix")
        sinv = _array(nv, _require(sold, "inverse", "$.soldering"), (nv, nv), "$.soldering.inverse")
    else:
        raise ChartParseError("$.soldering", "needs either 'shears' or 'matrix' and 'inverse'")
    zero = Poly.zero(nv)
    ge = _array(nv, raw["gammaE"], (nv, 2, 2), "$.gammaE") if "gammaE" in raw else np.full((nv, 2, 2), zero, dtype=object)
    gf = _array(nv, raw["gammaF"], (nv, n, n), "$.gammaF") if "gammaF" in raw else np.full((nv, n, n), zero, dtype=object)
    rho_comps = _array(nv, raw["rho"], (2, n, 2, n), "$.rho") if "rho" in raw else None
    data = ChartWeylData(n, s, sinv, ge, gf, IndexedTensor(n, RHO_SLOTS, rho_comps), label)
    for rep in validate(data):
        if not rep.passed:
            raise ChartParseError("$.soldering" if "inverse" in rep.test_id else "$.gammaE", f"validation failed: {rep.test_id}")
    sections = {}
    for name, sec in _object(raw, "sections").items():
        w = f"$.sections.{name}"
        if not isinstance(sec, dict):
            raise ChartParseError(w, "expected an object with bundle and components")
        bundle = _require(sec, "bundle", w)
        if bundle not in BUNDLE_SLOTS:
            raise ChartParseError(f"{w}.bundle", f"must be one of {sorted(BUNDLE_SLOTS)}")
        slots = BUNDLE_SLOTS[bundle]
        comps = _array(nv, _require(sec, "components", w), (slots[0].dim(n),), f"{w}.components")
        sections[name] = IndexedTensor(n, slots, comps)
    points = {}
    for name, plist in _object(raw, "points").items():
        w = f"$.points.{name}"
        if not isinstance(plist, list):
            raise ChartParseError(w, "expected a list of points")
        pts = []
        for k, p in enumerate(plist):
            if not isinstance(p, list) or len(p) != nv:
                raise ChartParseError(f"{w}[{k}]", f"expected {nv} coordinates")
            try:
                pts.append(tuple(to_fraction(c) for c in p))
            except (ValueError, TypeError, ZeroDivisionError) as e:
                raise ChartParseError(f"{w}[{k}]", f"bad coordinate: {e}") from None
        points[name] = pts
    return ChartFile(data, sections, points)


def load_chart(path: str) -> ChartFile:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_chart(text, label=path.rsplit("/", 1)[-1].removesuffix(".json"))


def chart_to_json(chart: ChartFile) -> dict:
    """Explicit-matrix serialization of a chart file (round-trips through parse_chart)."""
    d = chart.data

    def arr(a):
        return np.vectorize(lambda p: p.to_json(), otypes=[object])(a).tolist()

    out = {
        "n": d.n,
        "soldering": {"matrix": arr(d.soldering), "inverse": arr(d.soldering_inv)},
        "gammaE": arr(d.gammaE),
        "gammaF": arr(d.gammaF),
        "rho": arr(d.rho.comps),
        "sections": {
            name: {
                "bundle": next(b for b, sl in BUNDLE_SLOTS.items() if sl == s.slots),
                "components": [p.to_json() for p in s.comps.flat],
            }
            for name, s in chart.sections.items()
        },
        "points": {
            name: [[str(c) for c in p] for p in pts] for name, pts in chart.points.items()
        },
    }
    if chart.metadata:
        out["metadata"] = chart.metadata
    return out
