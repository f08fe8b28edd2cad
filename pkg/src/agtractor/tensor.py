"""Abstract-index tensors with polynomial components.

A tensor carries an ordered tuple of slot kinds.  Unprimed indices belong to
the rank-2 bundle E, primed ones to the rank-n bundle F; upper slots are
vectors, lower slots covectors.  Components live in a dense numpy object
array whose axes follow the slot order.
"""

from __future__ import annotations

from collections import namedtuple
from enum import Enum
from fractions import Fraction
from itertools import permutations
from math import factorial

import numpy as np

from .poly import Poly, to_fraction

__all__ = [
    "Slot",
    "IndexedTensor",
    "SlotError",
    "contract",
    "sym_ops",
    "symmetrize",
    "alternate",
    "Sym2Parts",
    "sym2_decompose",
    "TraceDecomposition",
    "trace_free_decompose",
    "two_form_projectors",
    "delta",
    "outer",
]


class SlotError(ValueError):
    """Illegal slot signature for the requested operation."""


class Slot(str, Enum):
    EU = "E^"
    ED = "E_"
    FU = "F^"
    FD = "F_"

    @property
    def bundle(self) -> str:
        return self.value[0]

    @property
    def upper(self) -> bool:
        return self.value[1] == "^"

    def dual(self) -> "Slot":
        return {Slot.EU: Slot.ED, Slot.ED: Slot.EU, Slot.FU: Slot.FD, Slot.FD: Slot.FU}[self]

    def dim(self, n: int) -> int:
        return 2 if self.bundle == "E" else n


def _as_slots(slots) -> tuple:
    return tuple(s if isinstance(s, Slot) else Slot(s) for s in slots)


def _poly_array(arr: np.ndarray, nvars: int) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = v if isinstance(v, Poly) else Poly.const(nvars, v)
    return out


class IndexedTensor:
    """Dense tensor of polynomials over a type (2,n) chart.

    Immutable by convention: operations return new tensors.
    """

    __slots__ = ("n", "slots", "comps")

    def __init__(self, n: int, slots, comps=None):
        self.n = n
        self.slots = _as_slots(slots)
        shape = tuple(s.dim(n) for s in self.slots)
        if comps is None:
            comps = np.empty(shape, dtype=object)
            comps.fill(Poly.zero(2 * n))
        else:
            comps = np.asarray(comps, dtype=object)
            if comps.shape != shape:
                raise SlotError(f"component shape {comps.shape} does not match slots {shape}")
            comps = _poly_array(comps, 2 * n)
        self.comps = comps

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, n: int, slots) -> "IndexedTensor":
        return cls(n, slots)

    @classmethod
    def from_function(cls, n: int, slots, fn) -> "IndexedTensor":
        slots = _as_slots(slots)
        shape = tuple(s.dim(n) for s in slots)
        comps = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            comps[idx] = fn(*idx)
        return cls(n, slots, comps)

    @property
    def nvars(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return self.comps.shape

    @property
    def rank(self) -> int:
        return len(self.slots)

    def __getitem__(self, idx) -> Poly:
        return self.comps[idx]

    def _check_same(self, other: "IndexedTensor"):
        if not isinstance(other, IndexedTensor):
            raise TypeError("expected IndexedTensor")
        if other.n != self.n or other.slots != self.slots:
            raise SlotError(f"slot mismatch: {self.signature()} vs {other.signature()}")

    def signature(self) -> str:
        return "(" + ",".join(s.value for s in self.slots) + ")"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        self._check_same(other)
        return IndexedTensor(self.n, self.slots, self.comps + other.comps)

    def __sub__(self, other):
        self._check_same(other)
        return IndexedTensor(self.n, self.slots, self.comps - other.comps)

    def __neg__(self):
        return IndexedTensor(self.n, self.slots, -self.comps)

    def __mul__(self, c):
        if isinstance(c, IndexedTensor):
            return NotImplemented
        if not isinstance(c, Poly):
            c = to_fraction(c)
        return IndexedTensor(self.n, self.slots, self.comps * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, IndexedTensor):
            return NotImplemented
        return (
            self.n == other.n
            and self.slots == other.slots
            and all(a == b for a, b in zip(self.comps.flat, other.comps.flat))
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps.flat)

    def nonzero_count(self) -> int:
        return sum(1 for c in self.comps.flat if not c.is_zero())

    def max_degree(self) -> int:
        return max((c.degree() for c in self.comps.flat), default=-1)

    # index gymnastics -----------------------------------------------------
    def permute(self, order) -> "IndexedTensor":
        """New tensor whose slot ``k`` is this tensor's slot ``order[k]``."""
        order = tuple(order)
        return IndexedTensor(
            self.n, tuple(self.slots[i] for i in order), np.transpose(self.comps, order)
        )

    def diff(self, var: int) -> "IndexedTensor":
        return self.map(lambda p: p.diff(var))

    def map(self, fn) -> "IndexedTensor":
        out = np.empty(self.shape, dtype=object)
        for idx, v in np.ndenumerate(self.comps):
            out[idx] = fn(v)
        return IndexedTensor(self.n, self.slots, out)

    def evaluate(self, point) -> np.ndarray:
        """Rational component array at a point."""
        out = np.empty(self.shape, dtype=object)
        for idx, v in np.ndenumerate(self.comps):
            out[idx] = v.evaluate(point)
        return out

    def at(self, point) -> "IndexedTensor":
        """Constant tensor with the values at ``point``."""
        return IndexedTensor(self.n, self.slots, self.evaluate(point))

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "n": self.n,
            "slots": [s.value for s in self.slots],
            "components": [p.to_json() for p in self.comps.flat],
        }

    @classmethod
    def from_json(cls, data: dict) -> "IndexedTensor":
        n = int(data["n"])
        slots = _as_slots(data["slots"])
        shape = tuple(s.dim(n) for s in slots)
        flat = [Poly.from_json(2 * n, c) for c in data["components"]]
        size = int(np.prod(shape)) if shape else 1
        if len(flat) != size:
            raise SlotError(f"expected {size} components, got {len(flat)}")
        comps = np.empty(size, dtype=object)
        comps[:] = flat
        return cls(n, slots, comps.reshape(shape))

    def __repr__(self):
        return f"IndexedTensor(n={self.n}, slots={self.signature()}, nonzero={self.nonzero_count()})"


def _clean(arr, nvars):
    if not isinstance(arr, np.ndarray):
        arr = np.array(arr, dtype=object)
    return _poly_array(arr, nvars)


def einsum(n: int, subscripts: str, *tensors, slots) -> IndexedTensor:
    """``np.einsum`` over component arrays with explicit output slots."""
    arrays = [t.comps if isinstance(t, IndexedTensor) else t for t in tensors]
    res = np.einsum(subscripts, *arrays)
    return IndexedTensor(n, slots, _clean(res, 2 * n))


def outer(a: IndexedTensor, b: IndexedTensor) -> IndexedTensor:
    if a.n != b.n:
        raise SlotError("rank mismatch between tensors")
    comps = np.multiply.outer(a.comps, b.comps)
    return IndexedTensor(a.n, a.slots + b.slots, _clean(comps, a.nvars))


def delta(n: int, bundle: str) -> IndexedTensor:
    """Kronecker delta with slots (upper, lower) on E or F."""
    if bundle == "E":
        slots, dim = (Slot.EU, Slot.ED), 2
    elif bundle == "F":
        slots, dim = (Slot.FU, Slot.FD), n
    else:
        raise SlotError(f"unknown bundle {bundle!r}")
    return IndexedTensor(n, slots, np.eye(dim, dtype=int).astype(object))


def contract(t: IndexedTensor, i: int, j: int) -> IndexedTensor:
    """Trace over the slot pair ``(i, j)``; remaining slots keep their order."""
    if i == j:
        raise SlotError("cannot contract a slot with itself")
    if t.slots[i].dual() != t.slots[j]:
        raise SlotError(
            f"slots {i} ({t.slots[i].value}) and {j} ({t.slots[j].value}) are not dual"
        )
    comps = np.trace(t.comps, axis1=i, axis2=j)
    slots = tuple(s for k, s in enumerate(t.slots) if k not in (i, j))
    if not slots:
        comps = np.array(comps, dtype=object)
    return IndexedTensor(t.n, slots, _clean(comps, t.nvars))


def sym_ops(t: IndexedTensor, slots, mode: str) -> IndexedTensor:
    """Average over permutations of ``slots`` (with sign when alternating)."""
    slots = list(slots)
    if mode not in ("symmetrize", "alternate"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(set(slots)) != len(slots):
        raise SlotError("repeated slot in group")
    kinds = {t.slots[k] for k in slots}
    if len(kinds) > 1:
        raise SlotError(f"mixed slot kinds in group: {sorted(k.value for k in kinds)}")
    if len(slots) < 2:
        return t
    total = None
    base = list(range(t.rank))
    for perm in permutations(range(len(slots))):
        order = list(base)
        for pos, src in zip(slots, perm):
            order[pos] = slots[src]
        term = np.transpose(t.comps, order)
        if mode == "alternate" and _parity(perm):
            term = -term
        total = term if total is None else total + term
    return IndexedTensor(t.n, t.slots, total * Fraction(1, factorial(len(slots))))


def symmetrize(t: IndexedTensor, slots) -> IndexedTensor:
    return sym_ops(t, slots, "symmetrize")


def alternate(t: IndexedTensor, slots) -> IndexedTensor:
    return sym_ops(t, slots, "alternate")


def _parity(perm) -> int:
    perm = list(perm)
    odd = 0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            odd ^= 1
    return odd


PAIR_SLOTS = (Slot.EU, Slot.FD, Slot.EU, Slot.FD)

Sym2Parts = namedtuple("Sym2Parts", ["symmetric", "alternating"])
Sym2Parts.__doc__ = "Parts S^((..)) in Sym2 E x Sym2 F* and S^[[..]] in L2 E x L2 F*."


def _check_pair_form(s: IndexedTensor):
    if s.slots != PAIR_SLOTS:
        raise SlotError(f"expected slots (E^,F_,E^,F_), got {s.signature()}")


def _ee_ff(s: IndexedTensor, e_mode: str, f_mode: str) -> IndexedTensor:
    return sym_ops(sym_ops(s, (0, 2), e_mode), (1, 3), f_mode)


def sym2_decompose(s: IndexedTensor, check: bool = True) -> Sym2Parts:
    """Split a symmetric (0,2)-tensor into its ((..)) and [[..]] parts."""
    _check_pair_form(s)
    if check and s != s.permute((2, 3, 0, 1)):
        raise ValueError("input is not symmetric under (A,A') <-> (B,B')")
    return Sym2Parts(
        _ee_ff(s, "symmetrize", "symmetrize"), _ee_ff(s, "alternate", "alternate")
    )


def mixed_projections(s: IndexedTensor):
    """The projections S^{(A}_{[A'}^{B)}_{B']} and S^{[A}_{(A'}^{B]}_{B')}."""
    _check_pair_form(s)
    return _ee_ff(s, "symmetrize", "alternate"), _ee_ff(s, "alternate", "symmetrize")


def two_form_projectors(s: IndexedTensor):
    """Components of an antisymmetric (0,2)-tensor in Sym2E x L2F* and L2E x Sym2F*.

    Extra trailing slots are carried along untouched.
    """
    if s.slots[:4] != PAIR_SLOTS:
        raise SlotError(f"expected leading slots (E^,F_,E^,F_), got {s.signature()}")
    return _ee_ff(s, "symmetrize", "alternate"), _ee_ff(s, "alternate", "symmetrize")


TraceDecomposition = namedtuple("TraceDecomposition", ["trace_free", "trace"])

_SHAPES = {
    "TStarM_F": (Slot.EU, Slot.FD, Slot.FU),
    "TStarM_EStar": (Slot.EU, Slot.FD, Slot.ED),
}


def trace_free_decompose(t: IndexedTensor, shape: str) -> TraceDecomposition:
    """Split T*M (x) F or T*M (x) E* into trace-free and trace parts.

    ``shape="TStarM_F"``:  Phi_o = Phi - (1/n) delta^{B'}_{A'} Phi^A_{I'}^{I'}
    ``shape="TStarM_EStar"``: Psi_o = Psi - (1/2) delta^A_B Psi^I_{A'I}
    """
    if shape not in _SHAPES:
        raise ValueError(f"unknown shape {shape!r}")
    if t.slots != _SHAPES[shape]:
        raise SlotError(f"shape {shape} needs slots {_SHAPES[shape]}, got {t.signature()}")
    n = t.n
    if shape == "TStarM_F":
        tr = contract(t, 1, 2)  # (E^)
        d = delta(n, "F")  # (F^,F_)
        pure = einsum(n, "a,cb->abc", tr, d, slots=t.slots) * Fraction(1, n)
    else:
        tr = contract(t, 0, 2)  # (F_)
        d = delta(n, "E")
        pure = einsum(n, "b,ac->abc", tr, d, slots=t.slots) * Fraction(1, 2)
    return TraceDecomposition(t - pure, tr)


def trace_part_from(tr: IndexedTensor, shape: str) -> IndexedTensor:
    """Re-embed a trace (as returned above) into the pure-trace subspace."""
    n = tr.n
    if shape == "TStarM_F":
        return einsum(n, "a,cb->abc", tr, delta(n, "F"), slots=_SHAPES[shape]) * Fraction(1, n)
    return einsum(n, "b,ac->abc", tr, delta(n, "E"), slots=_SHAPES[shape]) * Fraction(1, 2)
