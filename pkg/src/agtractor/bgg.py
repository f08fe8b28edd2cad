"""Splitting operators, first BGG operators and prolongation connections.

Sections of F are :class:`IndexedTensor` objects with slots ``(F^,)``
("tractor" side); sections of E* have slots ``(E_,)`` ("cotractor" side).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import nullspace, rank
from .poly import Poly, monomials_upto
from .report import PreconditionError, VerificationReport
from .tensor import IndexedTensor, Slot, contract, einsum, sym2_decompose, trace_free_decompose
from .weyl import (
    ChartWeylData,
    ConsistencyError,
    SplitCotractor,
    SplitTractor,
    check_normality,
    contractions,
    covariant_derivative,
    curvature_blocks,
    tractor_derivative,
)

__all__ = [
    "BUNDLES",
    "BggSolutionBasis",
    "bundle_of",
    "split",
    "bgg_operator",
    "prolongation_correction",
    "prolongation_derivative",
    "bullet_difference",
    "is_normal_solution",
    "solve_bgg_polynomial",
    "one_jet_rank",
]

BUNDLES = {"tractor": (Slot.FU,), "cotractor": (Slot.ED,)}
_SHAPE = {"tractor": "TStarM_F", "cotractor": "TStarM_EStar"}


def bundle_of(s: IndexedTensor) -> str:
    for name, slots in BUNDLES.items():
        if s.slots == slots:
            return name
    raise ValueError(f"not a section of F or E*: slots {s.signature()}")


def split(data: ChartWeylData, s: IndexedTensor):
    """The splitting operator L: F -> T or E* -> T*."""
    n = data.n
    d = covariant_derivative(data, s)
    if bundle_of(s) == "tractor":
        return SplitTractor(s, contract(d, 1, 2) * Fraction(-1, n))
    return SplitCotractor(s, contract(d, 0, 2) * Fraction(1, 2))


def bgg_operator(data: ChartWeylData, s: IndexedTensor) -> IndexedTensor:
    """D s: the trace-free part of the covariant derivative."""
    return trace_free_decompose(covariant_derivative(data, s), _SHAPE[bundle_of(s)]).trace_free


def _require_normal(data: ChartWeylData, blocks=None):
    rep = check_normality(data, blocks)
    if not rep.passed:
        raise PreconditionError(f"chart data {data.label!r} is not normal")


def prolongation_correction(data: ChartWeylData, blocks=None, check: bool = True):
    """The one-forms Phi and Psi built from tr(i_tau tau); slots (E^, F_, E^, F_)."""
    blocks = blocks if blocks is not None else curvature_blocks(data)
    if check:
        _require_normal(data, blocks)
    n = data.n
    _, _, s = contractions(blocks)
    parts = sym2_decompose(s)
    phi = parts.symmetric * Fraction(-1, (n - 1) * n) + parts.alternating * Fraction(-1, (n + 1) * (n + 4))
    psi = parts.symmetric * Fraction(-1, n) + parts.alternating * Fraction(-1, 3 * (n + 4))
    return phi, psi


def _phi_term(phi: IndexedTensor, eta: IndexedTensor) -> IndexedTensor:
    """Phi^A_{A'}^B_{I'} eta^{I'}, with any extra leading slots on eta."""
    return einsum(phi.n, "axbi,i->axb", phi, eta, slots=(Slot.EU, Slot.FD, Slot.EU))


def _psi_term(psi: IndexedTensor, phi_: IndexedTensor) -> IndexedTensor:
    return einsum(psi.n, "axiy,i->axy", psi, phi_, slots=(Slot.EU, Slot.FD, Slot.FD))


def prolongation_derivative(data: ChartWeylData, s, corrections=None):
    """Prolongation connection on T (uses Phi) or T* (uses Psi).

    ``corrections`` may pass a precomputed ``(Phi, Psi)`` pair.
    """
    phi, psi = corrections if corrections is not None else prolongation_correction(data)
    d = tractor_derivative(data, s)
    if isinstance(s, SplitTractor):
        return SplitTractor(d.eta, d.xi - _phi_term(phi, s.eta))
    if isinstance(s, SplitCotractor):
        return SplitCotractor(d.phi, d.mu - _psi_term(psi, s.phi))
    raise TypeError(f"unsupported section type {type(s).__name__}")


def _g1_matrices(form: IndexedTensor) -> list:
    """Frame components of a T*M-valued one-form as g_1 matrices."""
    n = form.n
    out = []
    for p in range(2 * n):
        a, ap = divmod(p, n)
        z = np.empty((n + 2, n + 2), dtype=object)
        z.fill(Poly.zero(2 * n))
        z[:2, 2:] = form.comps[a, ap]
        out.append(z)
    return out


def bullet_difference(form: IndexedTensor, s):
    """The one-form valued section X_p -> form(X_p) . s via the matrix action.

    Standard vectors are columns (xi, eta); dual vectors transform by -Z^T.
    """
    n = form.n
    if isinstance(s, SplitTractor):
        v = np.concatenate([s.xi.comps, s.eta.comps])
        vals = [z.dot(v) for z in _g1_matrices(form)]
        xi = np.array([w[:2] for w in vals], dtype=object).reshape((2, n, 2))
        eta = np.array([w[2:] for w in vals], dtype=object).reshape((2, n, n))
        return SplitTractor(
            IndexedTensor(n, (Slot.EU, Slot.FD, Slot.FU), eta),
            IndexedTensor(n, (Slot.EU, Slot.FD, Slot.EU), xi),
        )
    if isinstance(s, SplitCotractor):
        w = np.concatenate([s.phi.comps, s.mu.comps])
        vals = [-(z.T.dot(w)) for z in _g1_matrices(form)]
        phi = np.array([u[:2] for u in vals], dtype=object).reshape((2, n, 2))
        mu = np.array([u[2:] for u in vals], dtype=object).reshape((2, n, n))
        return SplitCotractor(
            IndexedTensor(n, (Slot.EU, Slot.FD, Slot.ED), phi),
            IndexedTensor(n, (Slot.EU, Slot.FD, Slot.FD), mu),
        )
    raise TypeError(f"unsupported section type {type(s).__name__}")


def _contract_with(s_tensor: IndexedTensor, section: IndexedTensor) -> IndexedTensor:
    n = section.n
    if bundle_of(section) == "tractor":
        return einsum(n, "axby,y->axb", s_tensor, section, slots=(Slot.EU, Slot.FD, Slot.EU))
    return einsum(n, "axby,b->axy", s_tensor, section, slots=(Slot.EU, Slot.FD, Slot.FD))


def is_normal_solution(data: ChartWeylData, s: IndexedTensor, blocks=None):
    """(solution, normal) for a section of F or E*.

    ``normal`` is decided from the tr(i_tau tau) contraction; it is
    cross-checked against a direct evaluation of the tractor derivative of
    the split section and a disagreement raises :class:`ConsistencyError`.
    """
    blocks = blocks if blocks is not None else curvature_blocks(data)
    _require_normal(data, blocks)
    solution = bgg_operator(data, s).is_zero()
    _, _, tt = contractions(blocks)
    normal = solution and _contract_with(tt, s).is_zero()
    parallel = tractor_derivative(data, split(data, s)).is_zero()
    if solution and parallel != normal:
        raise ConsistencyError("parallel split section disagrees with the tr(i_tau tau) test")
    return solution, normal


@dataclass(frozen=True)
class BggSolutionBasis:
    bundle: str
    degree: int
    basis: tuple
    n: int

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def to_json(self) -> dict:
        return {
            "bundle": self.bundle,
            "degree": self.degree,
            "n": self.n,
            "dimension": self.dimension,
            "basis": [s.to_json() for s in self.basis],
        }


def _unit_section(n: int, bundle: str, k: int, mono: tuple) -> IndexedTensor:
    slots = BUNDLES[bundle]
    t = IndexedTensor(n, slots)
    comps = t.comps.copy()
    comps[k] = Poly.monomial(mono)
    return IndexedTensor(n, slots, comps)


def solve_bgg_polynomial(data: ChartWeylData, bundle: str, degree: int) -> BggSolutionBasis:
    """Kernel of D on sections with polynomial components of degree <= ``degree``.

    Columns are ordered component-major, monomials degree-lexicographically;
    the basis is read off the reduced echelon form, one vector per free column.
    """
    if bundle not in BUNDLES:
        raise ValueError(f"bundle must be one of {sorted(BUNDLES)}")
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n, nv = data.n, data.nvars
    dim = BUNDLES[bundle][0].dim(n)
    monos = monomials_upto(nv, degree)
    columns = [(k, m) for k in range(dim) for m in monos]
    row_index: dict = {}
    rows: list[dict] = []
    for col, (k, m) in enumerate(columns):
        image = bgg_operator(data, _unit_section(n, bundle, k, m))
        for pos, p in enumerate(image.comps.flat):
            for exp, c in p.items():
                key = (pos, exp)
                r = row_index.get(key)
                if r is None:
                    r = row_index[key] = len(rows)
                    rows.append({})
                rows[r][col] = c
    kernel = nullspace(rows, len(columns))
    basis = []
    for vec in kernel:
        comps = np.empty(dim, dtype=object)
        comps.fill(Poly.zero(nv))
        for (k, m), c in zip(columns, vec):
            if c:
                comps[k] = comps[k] + Poly.monomial(m, c)
        basis.append(IndexedTensor(n, BUNDLES[bundle], comps))
    return BggSolutionBasis(bundle, degree, tuple(basis), n)


def one_jet_rank(data: ChartWeylData, basis, point) -> VerificationReport:
    """Injectivity of solution -> (value, first derivative) at ``point``."""
    vectors = []
    for s in basis:
        val = s.evaluate(point)
        jet = covariant_derivative(data, s).evaluate(point)
        vectors.append([Fraction(v) for v in list(val.flat) + list(jet.flat)])
    r = rank(vectors) if vectors else 0
    return VerificationReport.check(
        "bgg.one_jet_determinacy",
        r == len(vectors),
        {"rank": r, "dimension": len(vectors)},
        rank=r,
        dimension=len(vectors),
        point=[Fraction(x) for x in point],
    )
