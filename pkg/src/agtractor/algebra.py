"""The |1|-graded Lie algebra sl(n+2, Q) and its bullet actions.

Matrices are (n+2) x (n+2) with block sizes (2, n).  The lower-left n x 2
block is g_{-1} (identified with TM = E* (x) F), the block diagonal is g_0 and
the upper-right 2 x n block is g_1 (identified with T*M = E (x) F*).  The pair
index p = (A, A') of both g_{-1} and g_1 is flattened as ``A*n + A'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "GradedAlgebra",
    "build_graded_algebra",
    "RepVector",
    "act",
    "bracket",
    "codifferential",
    "lower_basis",
    "upper_basis",
    "frac_matrix",
]

REPS = ("standard", "dual", "adjoint")


def frac_matrix(m) -> np.ndarray:
    arr = np.array(m, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v)
    return out


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x.dot(y) - y.dot(x)


def lower_basis(n: int, a: int, ap: int) -> np.ndarray:
    """g_{-1} element for the frame vector with pair index (a, a')."""
    m = np.zeros((n + 2, n + 2), dtype=np.int64)
    m[2 + ap, a] = 1
    return m


def upper_basis(n: int, a: int, ap: int) -> np.ndarray:
    """g_1 element dual to ``lower_basis(n, a, ap)`` under tr(Z X)."""
    m = np.zeros((n + 2, n + 2), dtype=np.int64)
    m[a, 2 + ap] = 1
    return m


@dataclass(frozen=True)
class GradedAlgebra:
    n: int
    basis: tuple = field(repr=False)
    grades: tuple = field(repr=False)

    @property
    def size(self) -> int:
        return (self.n + 2) ** 2 - 1

    def indices(self, grade: int) -> list[int]:
        return [i for i, g in enumerate(self.grades) if g == grade]

    def dim(self, grade: int) -> int:
        return len(self.indices(grade))

    def grade_of(self, m) -> int | None:
        """Grade of a homogeneous matrix, ``None`` if mixed or zero."""
        m = np.asarray(m)
        nz = [(i, j) for i, j in zip(*np.nonzero(m))]
        if not nz:
            return None
        grades = {self._entry_grade(i, j) for i, j in nz}
        return grades.pop() if len(grades) == 1 else None

    @staticmethod
    def _entry_grade(i, j) -> int:
        return (1 if j >= 2 else 0) - (1 if i >= 2 else 0)

    def coordinates(self, m) -> list:
        """Coordinates of a traceless matrix in ``basis`` (exact)."""
        return _coordinates(self.n, m)

    def from_coordinates(self, coords) -> np.ndarray:
        out = np.zeros((self.n + 2, self.n + 2), dtype=object)
        out.fill(Fraction(0))
        for c, b in zip(coords, self.basis):
            if c:
                out = out + b.astype(object) * Fraction(c)
        return out

    def structure_constants(self) -> np.ndarray:
        return _structure_constants(self.n)

    def g0_components(self, m):
        """Split a block-diagonal matrix into its (E-endomorphism, F-endomorphism)."""
        m = np.asarray(m)
        return m[:2, :2], m[2:, 2:]


def _diag_generators(k: int):
    out = []
    for i in range(k - 1):
        h = np.zeros((k, k), dtype=np.int64)
        h[i, i] = 1
        h[i + 1, i + 1] = -1
        out.append(h)
    return out


@lru_cache(maxsize=None)
def build_graded_algebra(n: int) -> GradedAlgebra:
    """Basis of sl(n+2) ordered g_{-1}, g_0, g_1, each block row-major.

    g_{-1} and g_1 are ordered E-index-major, F-index-minor so that basis
    position equals the pair index.  g_0 lists off-diagonal units of the two
    diagonal blocks row-major, then the diagonal generators E_ii - E_{i+1,i+1}.
    """
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n!r}")
    size = n + 2
    basis, grades = [], []
    for a in range(2):
        for ap in range(n):
            basis.append(lower_basis(n, a, ap))
            grades.append(-1)
    for i in range(size):
        for j in range(size):
            if i != j and (i < 2) == (j < 2):
                m = np.zeros((size, size), dtype=np.int64)
                m[i, j] = 1
                basis.append(m)
                grades.append(0)
    for h in _diag_generators(size):
        basis.append(h)
        grades.append(0)
    for a in range(2):
        for ap in range(n):
            basis.append(upper_basis(n, a, ap))
            grades.append(1)
    for b in basis:
        b.setflags(write=False)
    return GradedAlgebra(n, tuple(basis), tuple(grades))


def _coordinates(n: int, m) -> list:
    m = np.asarray(m, dtype=object)
    size = n + 2
    if sum(m[i, i] for i in range(size)) != 0:
        raise ValueError("matrix is not traceless")
    coords = []
    for a in range(2):
        for ap in range(n):
            coords.append(Fraction(m[2 + ap, a]))
    for i in range(size):
        for j in range(size):
            if i != j and (i < 2) == (j < 2):
                coords.append(Fraction(m[i, j]))
    running = Fraction(0)
    for k in range(size - 1):
        running += Fraction(m[k, k])
        coords.append(running)
    for a in range(2):
        for ap in range(n):
            coords.append(Fraction(m[a, 2 + ap]))
    return coords


@lru_cache(maxsize=None)
def _structure_constants(n: int) -> np.ndarray:
    alg = build_graded_algebra(n)
    d = alg.size
    c = np.zeros((d, d, d), dtype=object)
    c.fill(Fraction(0))
    for i in range(d):
        for j in range(d):
            br = bracket(alg.basis[i], alg.basis[j])
            if br.any():
                c[i, j, :] = _coordinates(n, br)
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class RepVector:
    """A vector in the standard, dual or adjoint representation.

    Standard and dual vectors are length n+2 (first two entries the E /
    E* part); adjoint vectors are stored as traceless matrices.
    """

    rep: str
    components: np.ndarray

    def __post_init__(self):
        if self.rep not in REPS:
            raise ValueError(f"unknown representation {self.rep!r}")
        comps = frac_matrix(self.components)
        if self.rep == "adjoint":
            if comps.ndim != 2 or comps.shape[0] != comps.shape[1]:
                raise ValueError("adjoint vectors are square matrices")
            if sum(comps[i, i] for i in range(comps.shape[0])) != 0:
                raise ValueError("adjoint vector is not traceless")
        elif comps.ndim != 1:
            raise ValueError(f"{self.rep} vectors are one-dimensional")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components.shape[0] - 2

    def __add__(self, other):
        self._same(other)
        return RepVector(self.rep, self.components + other.components)

    def __sub__(self, other):
        self._same(other)
        return RepVector(self.rep, self.components - other.components)

    def __neg__(self):
        return RepVector(self.rep, -self.components)

    def __mul__(self, c):
        return RepVector(self.rep, self.components * Fraction(c))

    __rmul__ = __mul__

    def _same(self, other):
        if self.rep != other.rep or self.components.shape != other.components.shape:
            raise ValueError("representation mismatch")

    def __eq__(self, other):
        if not isinstance(other, RepVector):
            return NotImplemented
        return self.rep == other.rep and np.array_equal(self.components, other.components)

    __hash__ = None

    def is_zero(self) -> bool:
        return not any(self.components.flat)

    @classmethod
    def zero(cls, rep: str, n: int) -> "RepVector":
        shape = (n + 2, n + 2) if rep == "adjoint" else (n + 2,)
        return cls(rep, np.zeros(shape, dtype=np.int64))


def act(element, v: RepVector) -> RepVector:
    """Action of a Lie algebra element (matrix) on a representation vector."""
    x = frac_matrix(element)
    size = v.components.shape[0]
    if x.shape != (size, size):
        raise ValueError(f"element of shape {x.shape} cannot act on {v.rep} vector of size {size}")
    if v.rep == "standard":
        return RepVector("standard", x.dot(v.components))
    if v.rep == "dual":
        return RepVector("dual", -(x.T.dot(v.components)))
    return RepVector("adjoint", bracket(x, v.components))


def _check_form(element: dict, k: int, n: int):
    for key in element:
        if len(key) != k or list(key) != sorted(set(key)):
            raise ValueError(f"wedge key {key} is not a sorted {k}-tuple")
        if any(not 0 <= i < 2 * n for i in key):
            raise ValueError(f"wedge key {key} out of range for p+ of dimension {2 * n}")


def codifferential(k: int, rep: str, element: dict, n: int) -> dict:
    """Kostant codifferential on Lambda^k p_+ (x) V.

    ``element`` maps sorted tuples of g_1 basis indices (Z_i = E-major pair
    index) to :class:`RepVector` values.  The result is in the same format
    with tuples of length k-1 and implements

        d*(Z_0 ^ ... ^ Z_k-1 (x) v) = sum_i (-1)^(i+1) Z_0 ^ ..^Z_i^.. (x) Z_i v
    """
    if k not in (1, 2):
        raise ValueError(f"codifferential implemented for k in (1, 2), got {k}")
    if rep not in REPS:
        raise ValueError(f"unknown representation {rep!r}")
    _check_form(element, k, n)
    out: dict = {}
    for key, v in element.items():
        if v.rep != rep:
            raise ValueError(f"value has representation {v.rep}, expected {rep}")
        for pos, zi in enumerate(key):
            rest = key[:pos] + key[pos + 1:]
            z = upper_basis(n, zi // n, zi % n)
            term = act(z, v)
            if (pos + 1) % 2:
                term = -term
            out[rest] = out[rest] + term if rest in out else term
    return {key: v for key, v in out.items() if not v.is_zero()}


def wedge_basis(n: int, k: int) -> list[tuple]:
    """Lexicographic basis of Lambda^k p_+ as index tuples."""
    return list(combinations(range(2 * n), k))


# -- normality of curvature blocks -------------------------------------------

BLOCK_NAMES = ("top-left", "top-right", "bottom-right")


def _const_blocks_by_monomial(blocks):
    """Split polynomial blocks into constant coefficient arrays per monomial."""
    arrays = {name: getattr(blocks, name).comps for name in ("tau", "W", "Wp", "Y")}
    monos = set()
    for arr in arrays.values():
        for p in arr.flat:
            monos.update(e for e, _ in p.items())
    out = {}
    for mono in sorted(monos):
        coeffs = {}
        for name, arr in arrays.items():
            c = np.empty(arr.shape, dtype=object)
            for idx, p in np.ndenumerate(arr):
                c[idx] = p.coefficient(mono)
            coeffs[name] = c
        out[mono] = coeffs
    return out


def kappa_matrix(n: int, c: dict, p: int, q: int) -> np.ndarray:
    """Assemble the sl(n+2) value of the curvature on frame vectors p, q."""
    a, ap, b, bp = p // n, p % n, q // n, q % n
    m = np.empty((n + 2, n + 2), dtype=object)
    m[:2, :2] = c["W"][a, ap, b, bp]
    m[:2, 2:] = c["Y"][a, ap, b, bp]
    m[2:, :2] = c["tau"][a, ap, b, bp]
    m[2:, 2:] = c["Wp"][a, ap, b, bp]
    return m


def half_codiff_via_complex(n: int, c: dict) -> dict:
    """(1/2) d*kappa through the generic codifferential on Lambda^2 p_+ (x) g.

    With the averaging convention for wedges, the 2-form with values
    kappa(e_p, e_q) is sum_{p<q} 2 kappa_pq Z_p ^ Z_q.
    """
    element = {}
    for p, q in combinations(range(2 * n), 2):
        m = kappa_matrix(n, c, p, q)
        if any(m.flat):
            element[(p, q)] = RepVector("adjoint", m * 2)
    res = codifferential(2, "adjoint", element, n)
    zero = np.zeros((n + 2, n + 2), dtype=object)
    zero.fill(Fraction(0))
    return {
        r: (res[(r,)].components * Fraction(1, 2) if (r,) in res else zero.copy())
        for r in range(2 * n)
    }


def half_codiff_via_blocks(n: int, c: dict) -> dict:
    """(1/2) d*kappa from the closed block formula in terms of tau, W and W'."""
    tau, w, wp = c["tau"], c["W"], c["Wp"]
    out = {}
    for r in range(2 * n):
        a, ap = divmod(r, n)
        m = np.zeros((n + 2, n + 2), dtype=object)
        m.fill(Fraction(0))
        for b in range(2):
            for cc in range(2):
                m[b, cc] = sum(tau[a, ap, b, i, i, cc] for i in range(n))
            for cp in range(n):
                m[b, 2 + cp] = sum(wp[a, ap, b, i, i, cp] for i in range(n)) - sum(
                    w[a, ap, i, cp, b, i] for i in range(2)
                )
        for bp in range(n):
            for cp in range(n):
                m[2 + bp, 2 + cp] = -sum(tau[a, ap, i, cp, bp, i] for i in range(2))
        out[r] = m
    return out


def _offending(n: int, mats: dict) -> set:
    bad = set()
    for m in mats.values():
        if any(m[:2, :2].flat):
            bad.add("top-left")
        if any(m[:2, 2:].flat):
            bad.add("top-right")
        if any(m[2:, 2:].flat):
            bad.add("bottom-right")
        if any(m[2:, :2].flat):
            bad.add("bottom-left")
    return bad


def check_block_codifferential(kappa, n: int):
    """Compare both evaluations of (1/2) d*kappa and report normality.

    ``kappa`` is any object with ``tau``, ``W``, ``Wp`` and ``Y`` tensors
    (see :class:`agtractor.weyl.CurvatureBlocks`); polynomial components are
    handled monomial by monomial since both paths are linear.
    """
    from .report import VerificationReport

    expected = {
        "tau": ("E^", "F_", "E^", "F_", "F^", "E_"),
        "W": ("E^", "F_", "E^", "F_", "E^", "E_"),
        "Wp": ("E^", "F_", "E^", "F_", "F^", "F_"),
        "Y": ("E^", "F_", "E^", "F_", "E^", "F_"),
    }
    for name, sig in expected.items():
        t = getattr(kappa, name)
        if t.n != n or tuple(s.value for s in t.slots) != sig:
            raise ValueError(f"block {name} has slots {t.signature()}, expected ({','.join(sig)})")
    max_diff = []
    offending = set()
    for mono, c in _const_blocks_by_monomial(kappa).items():
        a = half_codiff_via_complex(n, c)
        b = half_codiff_via_blocks(n, c)
        for r in range(2 * n):
            d = a[r] - b[r]
            if any(d.flat):
                max_diff.append({"monomial": list(mono), "row": r, "difference": d})
        offending |= _offending(n, b)
    normal = not offending
    return VerificationReport(
        "algebra.block_codifferential",
        "pass" if not max_diff else "fail",
        max_diff or None,
        {"normal": normal, "offending_blocks": sorted(offending)},
    )
