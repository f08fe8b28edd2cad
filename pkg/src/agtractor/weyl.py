"""Chart-level AG structures: Weyl connections, Rho, torsion and curvature.

Conventions
-----------
* Coordinates ``x[mu]`` with ``mu = A*n + A'`` are the components
  :math:`x^{A'}_A`; the same flattening labels the pair index ``p = (A, A')``.
* ``soldering[mu, p]`` is the coefficient of :math:`\\partial_\\mu` in the
  frame vector field :math:`X_p`; ``soldering_inv`` is its polynomial inverse.
  A frame derivative is :math:`\\nabla_p = \\sum_\\mu S[\\mu,p] \\nabla_\\mu`,
  which is how the leading ``(E^, F_)`` slot pair of a covariant derivative
  is produced.
* ``gammaE[mu]`` (2x2) and ``gammaF[mu]`` (n x n) act on upper indices:
  :math:`\\nabla_\\mu \\xi^B = \\partial_\\mu \\xi^B + \\Gamma^E{}_\\mu{}^B{}_C \\xi^C`.
* ``rho`` has slots ``(E^, F_, E^, F_)``: the first pair is the form index.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations

import numpy as np

from .algebra import build_graded_algebra, check_block_codifferential
from .linalg import min_norm_solver, rank
from .poly import Poly
from .report import VerificationReport
from .tensor import (
    IndexedTensor,
    Slot,
    alternate,
    contract,
    delta,
    einsum,
    mixed_projections,
    sym2_decompose,
)

__all__ = [
    "ChartWeylData",
    "CurvatureBlocks",
    "SplitTractor",
    "SplitCotractor",
    "AdjointSection",
    "WeylizeError",
    "ConsistencyError",
    "NormalizationError",
    "flat_data",
    "shear_data",
    "validate",
    "covariant_derivative",
    "torsion",
    "weylize",
    "tractor_derivative",
    "curvature_blocks",
    "contractions",
    "normalize_rho",
    "check_normality",
    "apply_upsilon",
    "resplit",
    "verify_bianchi",
    "verify_weyl_tensor_relations",
    "spencer_rank",
]

EU, ED, FU, FD = Slot.EU, Slot.ED, Slot.FU, Slot.FD
FORM = (EU, FD)
RHO_SLOTS = (EU, FD, EU, FD)
TAU_SLOTS = (EU, FD, EU, FD, FU, ED)
W_SLOTS = (EU, FD, EU, FD, EU, ED)
WP_SLOTS = (EU, FD, EU, FD, FU, FD)
Y_SLOTS = (EU, FD, EU, FD, EU, FD)


class WeylizeError(ArithmeticError):
    """Non-harmonic torsion not absorbed by a connection change."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class ConsistencyError(AssertionError):
    """Two computations that must agree exactly did not."""


class NormalizationError(ArithmeticError):
    """The pointwise normality system for Rho could not be solved."""


def _poly_matrix(rows, nvars) -> np.ndarray:
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            arr[i, j] = v if isinstance(v, Poly) else Poly.const(nvars, v)
    return arr


def _zeros(shape, nvars) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr.fill(Poly.zero(nvars))
    return arr


def _identity(k, nvars) -> np.ndarray:
    arr = _zeros((k, k), nvars)
    for i in range(k):
        arr[i, i] = Poly.const(nvars, 1)
    return arr


@dataclass(frozen=True, eq=False)
class ChartWeylData:
    n: int
    soldering: np.ndarray = field(repr=False)
    soldering_inv: np.ndarray = field(repr=False)
    gammaE: np.ndarray = field(repr=False)
    gammaF: np.ndarray = field(repr=False)
    rho: IndexedTensor = field(repr=False)
    label: str = "chart"

    @property
    def nvars(self) -> int:
        return 2 * self.n

    @property
    def dim(self) -> int:
        return 2 * self.n

    def coordinate(self, mu: int) -> Poly:
        return Poly.var(self.nvars, mu)

    @cached_property
    def frame_gammaE(self) -> np.ndarray:
        """Gamma^E along the frame: shape (2n, 2, 2)."""
        return np.einsum("mp,mbc->pbc", self.soldering, self.gammaE)

    @cached_property
    def frame_gammaF(self) -> np.ndarray:
        return np.einsum("mp,mbc->pbc", self.soldering, self.gammaF)

    @cached_property
    def brackets(self) -> np.ndarray:
        """Frame components c[p, q, r] of [X_p, X_q] = sum_r c[p,q,r] X_r."""
        s, sinv, d = self.soldering, self.soldering_inv, self.dim
        ds = np.empty((d, d, d), dtype=object)  # ds[mu, nu, q] = d_mu S[nu, q]
        for mu in range(d):
            for nu in range(d):
                for q in range(d):
                    ds[mu, nu, q] = s[nu, q].diff(mu)
        # coordinate components of [X_p, X_q]
        xpq = np.einsum("mp,mnq->pqn", s, ds)
        lie = xpq - np.transpose(xpq, (1, 0, 2))
        return np.einsum("rn,pqn->pqr", sinv, lie)

    def frame_derivative(self, poly: Poly, p: int) -> Poly:
        out = Poly.zero(self.nvars)
        for mu in range(self.dim):
            c = self.soldering[mu, p]
            if c:
                out = out + c * poly.diff(mu)
        return out

    def frame_derivative_array(self, arr: np.ndarray) -> np.ndarray:
        """Stack of X_p(arr) with a new leading axis of length 2n."""
        out = np.empty((self.dim,) + arr.shape, dtype=object)
        partials = [np.vectorize(lambda q, m=mu: q.diff(m), otypes=[object])(arr)
                    for mu in range(self.dim)]
        for p in range(self.dim):
            acc = None
            for mu in range(self.dim):
                c = self.soldering[mu, p]
                if not c:
                    continue
                term = partials[mu] * c
                acc = term if acc is None else acc + term
            out[p] = acc if acc is not None else _zeros(arr.shape, self.nvars)
        return out

    def omega(self, p: int) -> np.ndarray:
        """Tractor connection matrix along X_p: [[Gamma^E, Rho], [theta, Gamma^F]]."""
        n, nv = self.n, self.nvars
        a, ap = divmod(p, n)
        m = _zeros((n + 2, n + 2), nv)
        m[:2, :2] = self.frame_gammaE[p]
        m[2:, 2:] = self.frame_gammaF[p]
        m[:2, 2:] = self.rho.comps[a, ap]
        m[2 + ap, a] = Poly.const(nv, 1)
        return m

    @cached_property
    def omegas(self) -> list:
        return [self.omega(p) for p in range(self.dim)]

    def with_rho(self, rho: IndexedTensor) -> "ChartWeylData":
        return replace(self, rho=rho)

    def with_gamma(self, gammaE, gammaF) -> "ChartWeylData":
        return replace(self, gammaE=gammaE, gammaF=gammaF)

    def at_point_summary(self) -> dict:
        return {"n": self.n, "label": self.label}


def flat_data(n: int) -> ChartWeylData:
    """The flat model chart: identity frame, vanishing connection and Rho."""
    if n < 3:
        raise ValueError("n must be >= 3")
    nv = 2 * n
    return ChartWeylData(
        n,
        _identity(nv, nv),
        _identity(nv, nv),
        _zeros((nv, 2, 2), nv),
        _zeros((nv, n, n), nv),
        IndexedTensor(n, RHO_SLOTS),
        "flat",
    )


def shear_matrices(n: int, shears) -> tuple:
    """Product of elementary shears I + c E_ij and its exact inverse.

    ``shears`` is a sequence of ``(row, col, poly)`` with ``row != col``;
    the soldering is the product in the given order.
    """
    nv = 2 * n
    s = _identity(nv, nv)
    sinv = _identity(nv, nv)
    for i, j, c in shears:
        if i == j:
            raise ValueError("shear must be off-diagonal")
        c = c if isinstance(c, Poly) else Poly.const(nv, c)
        e = _identity(nv, nv)
        e[i, j] = c
        einv = _identity(nv, nv)
        einv[i, j] = -c
        s = s.dot(e)
        sinv = einv.dot(sinv)
    return s, sinv


def shear_data(n: int, shears, gammaE=None, gammaF=None, rho=None, label="shear") -> ChartWeylData:
    s, sinv = shear_matrices(n, shears)
    nv = 2 * n
    return ChartWeylData(
        n,
        s,
        sinv,
        gammaE if gammaE is not None else _zeros((nv, 2, 2), nv),
        gammaF if gammaF is not None else _zeros((nv, n, n), nv),
        rho if rho is not None else IndexedTensor(n, RHO_SLOTS),
        label,
    )


# -- validation -------------------------------------------------------------


def validate(data: ChartWeylData) -> list:
    """Check the frame inverse and the trace compatibility of the Gammas."""
    nv = data.nvars
    prod = data.soldering.dot(data.soldering_inv)
    ident = _identity(nv, nv)
    bad_inv = [(i, j) for i in range(nv) for j in range(nv) if prod[i, j] != ident[i, j]]
    bad_tr = []
    for mu in range(nv):
        tr = sum((data.gammaE[mu, i, i] for i in range(2)), Poly.zero(nv)) + sum(
            (data.gammaF[mu, i, i] for i in range(data.n)), Poly.zero(nv)
        )
        if tr:
            bad_tr.append({"direction": mu, "trace_sum": tr})
    return [
        VerificationReport.check(
            f"weyl.validate.{data.label}.soldering_inverse",
            not bad_inv,
            [{"entry": list(e), "value": prod[e]} for e in bad_inv],
        ),
        VerificationReport.check(
            f"weyl.validate.{data.label}.trace_compatibility", not bad_tr, bad_tr
        ),
    ]


# -- covariant derivative ---------------------------------------------------


def _gamma_terms(arr: np.ndarray, slots, ge: np.ndarray, gf: np.ndarray) -> np.ndarray:
    """Connection terms of one direction acting on every slot of ``arr``."""
    total = None
    for k, s in enumerate(slots):
        g = ge if s.bundle == "E" else gf
        if s.upper:
            term = np.moveaxis(np.tensordot(g, arr, axes=([1], [k])), 0, k)
        else:
            term = -np.moveaxis(np.tensordot(g, arr, axes=([0], [k])), 0, k)
        total = term if total is None else total + term
    return total


def covariant_derivative(data: ChartWeylData, t: IndexedTensor) -> IndexedTensor:
    """Weyl covariant derivative with the form slots (E^, F_) prepended."""
    if t.n != data.n:
        raise ValueError("tensor and chart have different n")
    n = data.n
    d = data.frame_derivative_array(t.comps)  # (2n, *shape)
    if t.rank:
        for p in range(data.dim):
            d[p] = d[p] + _gamma_terms(t.comps, t.slots, data.frame_gammaE[p], data.frame_gammaF[p])
    comps = d.reshape((2, n) + t.shape)
    return IndexedTensor(n, FORM + t.slots, comps)


# -- torsion and weylization --------------------------------------------------


def _frame_action_on_basis(n, ge, gf):
    """(ge, gf) in g_0 applied to each frame vector e_q, as a (2n, n, 2) array.

    Result[q, C', C] = gf[C', Q'] delta^Q_C - delta^{C'}_{Q'} ge[Q, C].
    """
    out = np.empty((2 * n, n, 2), dtype=object)
    for q in range(2 * n):
        qa, qp = divmod(q, n)
        for cp in range(n):
            for c in range(2):
                v = gf[cp, qp] if c == qa else 0
                if cp == qp:
                    v = v - ge[qa, c]
                out[q, cp, c] = v
    return out


def _torsion_array(data: ChartWeylData) -> np.ndarray:
    n, d, nv = data.n, data.dim, data.nvars
    out = _zeros((d, d, n, 2), nv)
    acts = [_frame_action_on_basis(n, data.frame_gammaE[p], data.frame_gammaF[p]) for p in range(d)]
    br = data.brackets
    for p in range(d):
        for q in range(d):
            t = acts[p][q] - acts[q][p]
            for r in range(d):
                c = br[p, q, r]
                if c:
                    ra, rp = divmod(r, n)
                    t[rp, ra] = t[rp, ra] - c
            out[p, q] = t
    return out.reshape((2, n, 2, n, n, 2))


def harmonic_defects(tau: IndexedTensor) -> dict:
    """Components that must vanish for harmonic torsion."""
    return {
        "lambda2E_sym2F": alternate(tau, (0, 2)),
        "E_trace": contract(tau, 2, 5),
        "F_trace": contract(tau, 3, 4),
    }


def torsion(data: ChartWeylData):
    """Torsion of the induced TM-connection on the frame and its harmonicity."""
    tau = IndexedTensor(data.n, TAU_SLOTS, _torsion_array(data))
    harmonic = all(t.is_zero() for t in harmonic_defects(tau).values())
    return tau, harmonic


def _g0_basis(n):
    alg = build_graded_algebra(n)
    return [alg.basis[i] for i in alg.indices(0)]


def _defect_vector_const(arr: np.ndarray) -> list:
    """Flattened harmonic defects of a constant (2,n,2,n,n,2) torsion array."""
    alt = (arr - np.transpose(arr, (2, 1, 0, 3, 4, 5))) * Fraction(1, 2)
    etr = np.trace(arr, axis1=2, axis2=5)
    ftr = np.trace(arr, axis1=3, axis2=4)
    return list(alt.flat) + list(etr.flat) + list(ftr.flat)


@lru_cache(maxsize=None)
def _spencer(n: int):
    """delta: T*M (x) g_0 -> L2 T*M (x) TM and the defect-projected solver."""
    d = 2 * n
    g0 = _g0_basis(n)
    cols_delta, cols_defect = [], []
    for p in range(d):
        for g in g0:
            ge = np.array(g[:2, :2], dtype=object)
            gf = np.array(g[2:, 2:], dtype=object)
            act = _frame_action_on_basis(n, ge, gf)
            arr = np.zeros((d, d, n, 2), dtype=object)
            for q in range(d):
                arr[p, q] = arr[p, q] + act[q]
                arr[q, p] = arr[q, p] - act[q]
            arr = arr.reshape((2, n, 2, n, n, 2))
            cols_delta.append([Fraction(v) for v in arr.flat])
            cols_defect.append([Fraction(v) for v in _defect_vector_const(arr)])
    delta_rows = [list(r) for r in zip(*cols_delta)]
    defect_rows = [list(r) for r in zip(*cols_defect)]
    ids, k = min_norm_solver(defect_rows, len(cols_defect))
    return {
        "g0": g0,
        "delta_rows": delta_rows,
        "defect_rows": defect_rows,
        "row_ids": ids,
        "solver": k,
    }


def spencer_rank(n: int) -> dict:
    """Exact rank of delta against the size of the non-harmonic complement."""
    sp = _spencer(n)
    r_delta = rank(sp["delta_rows"])
    total = (2 * n) * (2 * n - 1) // 2 * (2 * n)
    harmonic = 4 * (n * n * (n - 1) // 2 - n)
    return {
        "rank_delta": r_delta,
        "rank_defect_of_delta": len(sp["row_ids"]),
        "domain_dim": 2 * n * len(sp["g0"]),
        "two_forms_dim": total,
        "harmonic_dim": harmonic,
        "nonharmonic_dim": total - harmonic,
    }


def weylize(data: ChartWeylData) -> ChartWeylData:
    """Shift Gamma by a T*M (x) g_0 correction so the torsion becomes harmonic.

    The correction is the minimum-norm solution (in the g_0 basis of
    :func:`agtractor.algebra.build_graded_algebra`), solved coefficient-wise
    because the Spencer map has constant coefficients in the frame.
    """
    n, nv, d = data.n, data.nvars, data.dim
    tau, harmonic = torsion(data)
    if harmonic:
        return data
    sp = _spencer(n)
    defects = _defect_vector_poly(tau.comps)
    rhs = [-defects[i] for i in sp["row_ids"]]
    g0 = sp["g0"]
    k = sp["solver"]
    sol = []
    for row in k:
        acc = Poly.zero(nv)
        for coef, b in zip(row, rhs):
            if coef and b:
                acc = acc + b * coef
        sol.append(acc)
    ng = len(g0)
    frame_dE = _zeros((d, 2, 2), nv)
    frame_dF = _zeros((d, n, n), nv)
    for p in range(d):
        for gi, g in enumerate(g0):
            c = sol[p * ng + gi]
            if c:
                frame_dE[p] = frame_dE[p] + np.array(g[:2, :2], dtype=object) * c
                frame_dF[p] = frame_dF[p] + np.array(g[2:, 2:], dtype=object) * c
    new = _shift_gamma(data, frame_dE, frame_dF)
    tau2, ok = torsion(new)
    if not ok:
        residual = {k_: v for k_, v in harmonic_defects(tau2).items() if not v.is_zero()}
        raise WeylizeError("torsion not harmonic after correction", residual)
    return new


def _defect_vector_poly(arr: np.ndarray) -> list:
    alt = (arr - np.transpose(arr, (2, 1, 0, 3, 4, 5))) * Fraction(1, 2)
    etr = np.trace(arr, axis1=2, axis2=5)
    ftr = np.trace(arr, axis1=3, axis2=4)
    return list(alt.flat) + list(etr.flat) + list(ftr.flat)


def _shift_gamma(data: ChartWeylData, frame_dE, frame_dF, label=None) -> ChartWeylData:
    """Add frame-indexed connection changes, converted to coordinate directions."""
    coord_dE = np.einsum("pm,pbc->mbc", data.soldering_inv, frame_dE)
    coord_dF = np.einsum("pm,pbc->mbc", data.soldering_inv, frame_dF)
    return replace(
        data,
        gammaE=data.gammaE + coord_dE,
        gammaF=data.gammaF + coord_dF,
        label=label or data.label,
    )


# -- sections and the tractor connection -------------------------------------


@dataclass(frozen=True)
class SplitTractor:
    """(eta, xi) in F (+) E; with two extra leading form slots it is one-form valued."""

    eta: IndexedTensor
    xi: IndexedTensor

    def __post_init__(self):
        if self.eta.slots[-1] != FU or self.xi.slots[-1] != EU:
            raise ValueError("SplitTractor needs eta with trailing F^ and xi with trailing E^")

    def __sub__(self, other):
        return SplitTractor(self.eta - other.eta, self.xi - other.xi)

    def __add__(self, other):
        return SplitTractor(self.eta + other.eta, self.xi + other.xi)

    def is_zero(self) -> bool:
        return self.eta.is_zero() and self.xi.is_zero()

    def __eq__(self, other):
        return isinstance(other, SplitTractor) and self.eta == other.eta and self.xi == other.xi

    def to_json(self):
        return {"eta": self.eta.to_json(), "xi": self.xi.to_json()}


@dataclass(frozen=True)
class SplitCotractor:
    """(phi, mu) in E* (+) F*."""

    phi: IndexedTensor
    mu: IndexedTensor

    def __post_init__(self):
        if self.phi.slots[-1] != ED or self.mu.slots[-1] != FD:
            raise ValueError("SplitCotractor needs phi with trailing E_ and mu with trailing F_")

    def __sub__(self, other):
        return SplitCotractor(self.phi - other.phi, self.mu - other.mu)

    def __add__(self, other):
        return SplitCotractor(self.phi + other.phi, self.mu + other.mu)

    def is_zero(self) -> bool:
        return self.phi.is_zero() and self.mu.is_zero()

    def __eq__(self, other):
        return isinstance(other, SplitCotractor) and self.phi == other.phi and self.mu == other.mu

    def to_json(self):
        return {"phi": self.phi.to_json(), "mu": self.mu.to_json()}


@dataclass(frozen=True)
class AdjointSection:
    """Section of the adjoint tractor bundle TM (+) s(gl(E)+gl(F)) (+) T*M."""

    vector: IndexedTensor  # (F^, E_)
    endE: IndexedTensor  # (E^, E_)
    endF: IndexedTensor  # (F^, F_)
    covector: IndexedTensor  # (E^, F_)

    def __post_init__(self):
        tr = contract(self.endE, 0, 1) if self.endE.rank == 2 else None
        if tr is not None:
            total = tr + contract(self.endF, 0, 1)
            if not total.is_zero():
                raise ValueError("g_0 part must have pointwise trace sum zero")

    def matrix(self) -> np.ndarray:
        n = self.vector.n
        m = _zeros((n + 2, n + 2), 2 * n)
        m[:2, :2] = self.endE.comps
        m[:2, 2:] = self.covector.comps
        m[2:, :2] = self.vector.comps
        m[2:, 2:] = self.endF.comps
        return m

    @classmethod
    def from_matrix(cls, n: int, m: np.ndarray) -> "AdjointSection":
        return cls(
            IndexedTensor(n, (FU, ED), m[2:, :2]),
            IndexedTensor(n, (EU, ED), m[:2, :2]),
            IndexedTensor(n, (FU, FD), m[2:, 2:]),
            IndexedTensor(n, (EU, FD), m[:2, 2:]),
        )

    def __eq__(self, other):
        return isinstance(other, AdjointSection) and all(
            a == b for a, b in zip(self.matrix().flat, other.matrix().flat)
        )


def tractor_derivative(data: ChartWeylData, s):
    """Tractor, cotractor or adjoint-tractor covariant derivative.

    Returns a section of the same kind whose tensors carry the form slots
    ``(E^, F_)`` in front (for the adjoint case: a ``(2, n)`` object array of
    :class:`AdjointSection` values).
    """
    n = data.n
    if isinstance(s, SplitTractor):
        if s.eta.slots != (FU,) or s.xi.slots != (EU,):
            raise ValueError("tractor section must have eta (F^) and xi (E^)")
        d_eta = covariant_derivative(data, s.eta)
        d_xi = covariant_derivative(data, s.xi)
        first = d_eta + einsum(n, "a,cb->abc", s.xi, delta(n, "F"), slots=(EU, FD, FU))
        second = d_xi + einsum(n, "i,abci->abc", s.eta, data.rho, slots=(EU, FD, EU))
        return SplitTractor(first, second)
    if isinstance(s, SplitCotractor):
        if s.phi.slots != (ED,) or s.mu.slots != (FD,):
            raise ValueError("cotractor section must have phi (E_) and mu (F_)")
        d_phi = covariant_derivative(data, s.phi)
        d_mu = covariant_derivative(data, s.mu)
        first = d_phi - einsum(n, "b,ac->abc", s.mu, delta(n, "E"), slots=(EU, FD, ED))
        second = d_mu - einsum(n, "i,abic->abc", s.phi, data.rho, slots=(EU, FD, FD))
        return SplitCotractor(first, second)
    if isinstance(s, AdjointSection):
        m = s.matrix()
        dm = data.frame_derivative_array(m)
        out = np.empty((2, n), dtype=object)
        for p in range(data.dim):
            om = data.omegas[p]
            val = dm[p] + om.dot(m) - m.dot(om)
            out[divmod(p, n)] = AdjointSection.from_matrix(n, val)
        return out
    raise TypeError(f"unsupported section type {type(s).__name__}")


def _tractor_component(one_form: SplitTractor, p: int, n: int) -> SplitTractor:
    a, ap = divmod(p, n)
    return SplitTractor(
        IndexedTensor(n, (FU,), one_form.eta.comps[a, ap]),
        IndexedTensor(n, (EU,), one_form.xi.comps[a, ap]),
    )


def _basis_tractor(n: int, k: int) -> SplitTractor:
    nv = 2 * n
    xi = IndexedTensor(n, (EU,))
    eta = IndexedTensor(n, (FU,))
    if k < 2:
        c = xi.comps.copy()
        c[k] = Poly.const(nv, 1)
        xi = IndexedTensor(n, (EU,), c)
    else:
        c = eta.comps.copy()
        c[k - 2] = Poly.const(nv, 1)
        eta = IndexedTensor(n, (FU,), c)
    return SplitTractor(eta, xi)


# -- curvature ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurvatureBlocks:
    """Blocks [[W, Y], [tau, W']] of the curvature on frame pairs."""

    tau: IndexedTensor
    W: IndexedTensor
    Wp: IndexedTensor
    Y: IndexedTensor

    @classmethod
    def from_matrices(cls, n: int, mats: np.ndarray) -> "CurvatureBlocks":
        """``mats[p, q]`` is the (n+2)x(n+2) curvature on (X_p, X_q)."""
        d = 2 * n
        full = np.empty((d, d, n + 2, n + 2), dtype=object)
        for p in range(d):
            for q in range(d):
                full[p, q] = mats[p, q]
        full = full.reshape((2, n, 2, n, n + 2, n + 2))
        return cls(
            IndexedTensor(n, TAU_SLOTS, full[..., 2:, :2]),
            IndexedTensor(n, W_SLOTS, full[..., :2, :2]),
            IndexedTensor(n, WP_SLOTS, full[..., 2:, 2:]),
            IndexedTensor(n, Y_SLOTS, full[..., :2, 2:]),
        )

    def matrix(self, p: int, q: int) -> np.ndarray:
        n = self.tau.n
        a, ap = divmod(p, n)
        b, bp = divmod(q, n)
        m = _zeros((n + 2, n + 2), 2 * n)
        m[:2, :2] = self.W.comps[a, ap, b, bp]
        m[:2, 2:] = self.Y.comps[a, ap, b, bp]
        m[2:, :2] = self.tau.comps[a, ap, b, bp]
        m[2:, 2:] = self.Wp.comps[a, ap, b, bp]
        return m

    def blocks(self) -> dict:
        return {"tau": self.tau, "W": self.W, "Wp": self.Wp, "Y": self.Y}

    def is_zero(self) -> bool:
        return all(t.is_zero() for t in self.blocks().values())

    def __eq__(self, other):
        return isinstance(other, CurvatureBlocks) and all(
            self.blocks()[k] == other.blocks()[k] for k in self.blocks()
        )


def _curvature_via_tractor(data: ChartWeylData) -> np.ndarray:
    """R(X_p, X_q) from second tractor derivatives of constant basis sections."""
    n, d = data.n, data.dim
    mats = np.empty((d, d), dtype=object)
    for p in range(d):
        for q in range(d):
            mats[p, q] = _zeros((n + 2, n + 2), data.nvars)
    br = data.brackets
    for k in range(n + 2):
        first = tractor_derivative(data, _basis_tractor(n, k))
        second = [
            tractor_derivative(data, _tractor_component(first, q, n)) for q in range(d)
        ]
        for p in range(d):
            for q in range(p + 1, d):
                val = _tractor_component(second[q], p, n) - _tractor_component(second[p], q, n)
                for r in range(d):
                    c = br[p, q, r]
                    if c:
                        comp = _tractor_component(first, r, n)
                        val = val - SplitTractor(comp.eta * c, comp.xi * c)
                col = np.concatenate([val.xi.comps, val.eta.comps])
                mats[p, q][:, k] = col
                mats[q, p][:, k] = -col
    return mats


def _curvature_via_cartan(data: ChartWeylData) -> np.ndarray:
    """R(X_p, X_q) = X_p(Om_q) - X_q(Om_p) + [Om_p, Om_q] - Om([X_p, X_q])."""
    n, d = data.n, data.dim
    om = data.omegas
    dom = [data.frame_derivative_array(o) for o in om]  # dom[q][p] = X_p(Om_q)
    br = data.brackets
    mats = np.empty((d, d), dtype=object)
    zero = _zeros((n + 2, n + 2), data.nvars)
    for p in range(d):
        mats[p, p] = zero
        for q in range(p + 1, d):
            val = dom[q][p] - dom[p][q] + om[p].dot(om[q]) - om[q].dot(om[p])
            for r in range(d):
                c = br[p, q, r]
                if c:
                    val = val - om[r] * c
            mats[p, q] = val
            mats[q, p] = -val
    return mats


def curvature_blocks(data: ChartWeylData, method: str = "tractor") -> CurvatureBlocks:
    """Curvature of the standard tractor connection, split into blocks.

    ``method="tractor"`` differentiates constant basis sections twice;
    ``method="cartan"`` uses the structure equation for the connection
    matrices.  Either way the tau block is checked against :func:`torsion`.
    """
    if method == "tractor":
        mats = _curvature_via_tractor(data)
    elif method == "cartan":
        mats = _curvature_via_cartan(data)
    else:
        raise ValueError(f"unknown method {method!r}")
    blocks = CurvatureBlocks.from_matrices(data.n, mats)
    tau, _ = torsion(data)
    if blocks.tau != tau:
        raise ConsistencyError("tau block of the tractor curvature differs from the torsion")
    return blocks


def contractions(blocks: CurvatureBlocks):
    """tr(W), tr(W') and tr(i_tau tau), each with slots (E^, F_, E^, F_)."""
    n = blocks.tau.n
    tr_w = einsum(n, "axiybi->axby", blocks.W, slots=RHO_SLOTS)
    tr_wp = einsum(n, "axbiiy->axby", blocks.Wp, slots=RHO_SLOTS)
    tr_tt = einsum(n, "ijaxkl,lkbyji->axby", blocks.tau, blocks.tau, slots=RHO_SLOTS)
    return tr_w, tr_wp, tr_tt


# -- normalization --------------------------------------------------------------


def _normality_residual(data: ChartWeylData, method: str) -> IndexedTensor:
    tr_w, tr_wp, _ = contractions(curvature_blocks(data, method))
    return tr_wp - tr_w


def normalize_rho(data: ChartWeylData, method: str = "cartan") -> ChartWeylData:
    """Replace Rho by the unique solution of tr(W') = tr(W).

    The map Rho -> tr(W') - tr(W) is affine and algebraic; its constant part
    and its linear part are read off by evaluating the curvature at Rho = 0
    and at every constant basis tensor.
    """
    n, nv = data.n, data.nvars
    base_data = data.with_rho(IndexedTensor(n, RHO_SLOTS))
    b = _normality_residual(base_data, method)
    size = (2 * n) ** 2
    columns = []
    for k in range(size):
        comps = _zeros((2, n, 2, n), nv)
        comps.flat[k] = Poly.const(nv, 1)
        col = _normality_residual(data.with_rho(IndexedTensor(n, RHO_SLOTS, comps)), method) - b
        vals = []
        for p in col.comps.flat:
            if not p.is_constant():
                raise NormalizationError("normality map is not constant-coefficient in Rho")
            vals.append(p.constant_term())
        columns.append(vals)
    matrix = [list(r) for r in zip(*columns)]
    inv = _exact_inverse(matrix)
    if inv is None:
        raise NormalizationError("pointwise normality system for Rho is singular")
    rhs = [-p for p in b.comps.flat]
    sol = []
    for row in inv:
        acc = Poly.zero(nv)
        for c, r in zip(row, rhs):
            if c and r:
                acc = acc + r * c
        sol.append(acc)
    rho = IndexedTensor(n, RHO_SLOTS, np.array(sol, dtype=object).reshape((2, n, 2, n)))
    return data.with_rho(rho)


def _exact_inverse(matrix):
    from .linalg import _inverse

    try:
        return _inverse(matrix)
    except ZeroDivisionError:
        return None


def check_normality(data: ChartWeylData, blocks: CurvatureBlocks | None = None) -> VerificationReport:
    """Two tau traces and tr(W') - tr(W) must vanish."""
    blocks = blocks if blocks is not None else curvature_blocks(data)
    tr_w, tr_wp, _ = contractions(blocks)
    conditions = {
        "tau_F_trace": contract(blocks.tau, 3, 4),
        "tau_E_trace": contract(blocks.tau, 2, 5),
        "trWp_minus_trW": tr_wp - tr_w,
    }
    failing = {k: v for k, v in conditions.items() if not v.is_zero()}
    cross = check_block_codifferential(blocks, data.n)
    details = {
        "conditions": {k: v.is_zero() for k, v in conditions.items()},
        "codifferential_paths_agree": cross.passed,
        "codifferential_normal": cross.details["normal"],
    }
    if not failing:
        details["trW_equals_trWp"] = tr_w == tr_wp
    ok = not failing and cross.passed and cross.details["normal"]
    return VerificationReport(
        f"weyl.check_normality.{data.label}", "pass" if ok else "fail", failing or None, details
    )


# -- change of Weyl structure ---------------------------------------------------


def _check_upsilon(data: ChartWeylData, ups: IndexedTensor):
    if ups.n != data.n or ups.slots != FORM:
        raise ValueError(f"Upsilon must have slots (E^,F_), got {ups.signature()}")


def resplit(section, ups: IndexedTensor):
    """Express a section given in the old splitting in the new one.

    (eta, xi) -> (eta, xi - Ups(eta));  (phi, mu) -> (phi, mu + Ups(phi)).
    Works for sections and for one-form valued sections alike.
    """
    n = ups.n
    if isinstance(section, SplitTractor):
        corr = einsum(n, "bi,...i->...b", ups, section.eta, slots=section.xi.slots)
        return SplitTractor(section.eta, section.xi - corr)
    if isinstance(section, SplitCotractor):
        corr = einsum(n, "ia,...i->...a", ups, section.phi, slots=section.mu.slots)
        return SplitCotractor(section.phi, section.mu + corr)
    raise TypeError(f"cannot re-split {type(section).__name__}")


def apply_upsilon(data: ChartWeylData, ups: IndexedTensor, section=None):
    """Change of Weyl structure by the one-form ``ups`` (slots (E^, F_)).

    Returns ``(new_data, new_section)``; ``new_section`` is ``None`` when no
    section is given.
    """
    _check_upsilon(data, ups)
    n, nv, d = data.n, data.nvars, data.dim
    u = ups.comps
    frame_dE = _zeros((d, 2, 2), nv)
    frame_dF = _zeros((d, n, n), nv)
    for p in range(d):
        a, ap = divmod(p, n)
        for c in range(2):
            frame_dE[p, c, a] = frame_dE[p, c, a] - u[c, ap]
        for i in range(n):
            frame_dF[p, ap, i] = frame_dF[p, ap, i] + u[a, i]
    nabla_u = covariant_derivative(data, ups)
    quad = einsum(n, "bx,ay->axby", ups, ups, slots=RHO_SLOTS)
    new = _shift_gamma(data, frame_dE, frame_dF)
    new = new.with_rho(data.rho + nabla_u - quad)
    return new, (resplit(section, ups) if section is not None else None)


# -- Bianchi identity and Weyl tensor relations --------------------------------


def _adjoint_frame_derivative(data: ChartWeylData, m: np.ndarray, p: int) -> np.ndarray:
    om = data.omegas[p]
    return data.frame_derivative_array(m)[p] + om.dot(m) - m.dot(om)


def verify_bianchi(
    data: ChartWeylData, blocks: CurvatureBlocks | None = None, frame: str = "coordinate"
) -> VerificationReport:
    """Cyclic sum of nabla^A kappa(X2, X3) - kappa([X1, X2], X3) over triples.

    ``blocks`` defaults to the curvature of ``data``; passing blocks from other
    data is how a corrupted curvature is detected.  ``frame`` selects the
    coordinate frame (vanishing brackets) or the soldering frame.
    """
    blocks = blocks if blocks is not None else curvature_blocks(data)
    n, d, nv = data.n, data.dim, data.nvars
    kap = {(p, q): blocks.matrix(p, q) for p in range(d) for q in range(d)}
    if frame == "coordinate":
        sinv = data.soldering_inv
        coord = {}
        for mu in range(d):
            for nu in range(d):
                acc = _zeros((n + 2, n + 2), nv)
                for p in range(d):
                    if not sinv[p, mu]:
                        continue
                    for q in range(d):
                        if sinv[q, nu]:
                            acc = acc + kap[p, q] * (sinv[p, mu] * sinv[q, nu])
                coord[mu, nu] = acc
        om_c = []
        for mu in range(d):
            acc = _zeros((n + 2, n + 2), nv)
            for p in range(d):
                if sinv[p, mu]:
                    acc = acc + data.omegas[p] * sinv[p, mu]
            om_c.append(acc)

        def nabla(m, mu):
            dm = np.vectorize(lambda q: q.diff(mu), otypes=[object])(m)
            return dm + om_c[mu].dot(m) - m.dot(om_c[mu])

        values, brackets = coord, None
    elif frame == "soldering":
        values, brackets = kap, data.brackets

        def nabla(m, p):
            return _adjoint_frame_derivative(data, m, p)

    else:
        raise ValueError(f"unknown frame {frame!r}")
    residuals = []
    for a, b, c in combinations(range(d), 3):
        total = _zeros((n + 2, n + 2), nv)
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            total = total + nabla(values[y, z], x)
            if brackets is not None:
                for r in range(d):
                    coef = brackets[x, y, r]
                    if coef:
                        total = total - values[r, z] * coef
        if any(not v.is_zero() for v in total.flat):
            residuals.append({"triple": [a, b, c], "residual": total})
    return VerificationReport(
        f"weyl.bianchi.{data.label}.{frame}",
        "pass" if not residuals else "fail",
        residuals or None,
        {"triples": len(list(combinations(range(d), 3))), "nonzero": len(residuals)},
    )


def verify_weyl_tensor_relations(data: ChartWeylData, blocks: CurvatureBlocks | None = None):
    """tr(W) = tr(W') and the n, n+4 ratios against tr(i_tau tau)."""
    blocks = blocks if blocks is not None else curvature_blocks(data)
    test_id = f"weyl.weyl_tensor_relations.{data.label}"
    normal = check_normality(data, blocks)
    if not normal.passed:
        return VerificationReport(test_id, "skipped", None, {"precondition": "data not normal"})
    n = data.n
    tr_w, tr_wp, tr_tt = contractions(blocks)
    s_parts = sym2_decompose(tr_tt, check=False)
    w_parts = sym2_decompose(tr_w, check=False)
    checks = {
        "trW_eq_trWp": tr_w - tr_wp,
        "sym_ratio_n": s_parts.symmetric - w_parts.symmetric * n,
        "alt_ratio_n_plus_4": s_parts.alternating - w_parts.alternating * (n + 4),
    }
    for name, t in (("trItauTau", tr_tt), ("trW", tr_w)):
        m1, m2 = mixed_projections(t)
        checks[f"{name}_mixed_sym_alt"] = m1
        checks[f"{name}_mixed_alt_sym"] = m2
    failing = {k: v for k, v in checks.items() if not v.is_zero()}
    return VerificationReport(
        test_id,
        "pass" if not failing else "fail",
        failing or None,
        {
            "relations": {k: v.is_zero() for k, v in checks.items()},
            "trItauTau_nonzero": not tr_tt.is_zero(),
            "tau_nonzero": not blocks.tau.is_zero(),
        },
    )
