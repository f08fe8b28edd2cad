"""Zero loci of first-BGG solutions and the structures induced on them.

Tangent vectors are written in the soldering frame: a vector ``v`` of
length 2n has component ``v[p]`` along ``X_p`` with ``p = A*n + A'``, i.e.
``v[p] = v^{A'}_A``.  At a zero of a section the frame matrix of its
covariant derivative is the differential of the section, so its kernel is
the tangent space of the zero set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bgg import bgg_operator, bundle_of, split
from .linalg import nullspace, rank, rref, solve, span_equal
from .poly import Poly, get_degree_cap, monomials_upto, to_fraction
from .report import PreconditionError, VerificationReport
from .tensor import IndexedTensor, Slot
from .weyl import ChartWeylData, apply_upsilon, covariant_derivative, torsion

__all__ = [
    "ZeroLocusReport",
    "affine_zero_set",
    "sample_zero_points",
    "random_points",
    "jet_check",
    "zero_locus_analysis",
    "nowhere_vanishing_weyl_check",
    "induced_projective_structure",
    "induced_ag_structure",
    "wedge_coefficient",
]


DEFAULT_UPSILON_DEGREE = 2


def _point(x) -> tuple:
    return tuple(to_fraction(v) for v in x)


def _frame_matrix(grad: np.ndarray, n: int) -> list:
    """Rows indexed by the value slot, columns by the frame index p."""
    vals = grad.reshape((2 * n, -1))
    return [[Fraction(vals[p, k]) for p in range(2 * n)] for k in range(vals.shape[1])]


def _require_solution(data: ChartWeylData, s: IndexedTensor):
    if s.is_zero():
        raise PreconditionError("the zero section is excluded")
    residual = bgg_operator(data, s)
    if not residual.is_zero():
        err = PreconditionError("section does not solve the first BGG operator")
        err.residual = residual
        raise err


# -- zero sets of affine sections ---------------------------------------------


def affine_zero_set(s: IndexedTensor):
    """Exact zero set of a section with components of degree <= 1.

    Returns ``(base_point, directions)`` or ``None`` when the set is empty.
    """
    nv = s.nvars
    rows, rhs = [], []
    for p in s.comps.flat:
        if p.degree() > 1:
            raise ValueError("closed-form zero sets need components of degree <= 1")
        if p.is_zero():
            continue
        rows.append([p.coefficient(tuple(int(i == j) for j in range(nv))) for i in range(nv)])
        rhs.append(-p.constant_term())
    if not rows:
        return tuple(Fraction(0) for _ in range(nv)), [list(v) for v in np.eye(nv, dtype=int).tolist()]
    base = solve(rows, rhs, nv)
    if base is None:
        return None
    return tuple(base), nullspace(rows, nv)


def sample_zero_points(s: IndexedTensor, count: int, seed: int, bound: int = 9) -> list:
    """Seeded rational points on the affine zero set of ``s`` (verified exactly)."""
    zs = affine_zero_set(s)
    if zs is None:
        return []
    base, dirs = zs
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        x = list(base)
        for d in dirs:
            c = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
            x = [xi + c * di for xi, di in zip(x, d)]
        x = tuple(x)
        if any(p.evaluate(x) for p in s.comps.flat):
            raise ArithmeticError("sampled point is not a zero of the section")
        out.append(x)
    return out


def random_points(nvars: int, count: int, seed: int, bound: int = 9) -> list:
    rng = random.Random(seed)
    return [
        tuple(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(nvars))
        for _ in range(count)
    ]


# -- one-jet and orbit checks --------------------------------------------------


def _split_value(data, s, x):
    ls = split(data, s)
    parts = (ls.eta, ls.xi) if bundle_of(s) == "tractor" else (ls.phi, ls.mu)
    return [Fraction(v) for t in parts for v in t.evaluate(x).flat]


def jet_check(data: ChartWeylData, s: IndexedTensor, points) -> VerificationReport:
    """(s(x), grad s(x)) != 0 and L s(x) != 0 at every sample point."""
    _require_solution(data, s)
    grad = covariant_derivative(data, s)
    failures = []
    orbits = {"zero": 0, "nonzero": 0}
    for x in map(_point, points):
        val = s.evaluate(x)
        jet_zero = not any(val.flat) and not any(grad.evaluate(x).flat)
        split_zero = not any(_split_value(data, s, x))
        orbits["zero" if not any(val.flat) else "nonzero"] += 1
        if jet_zero or split_zero:
            failures.append({"point": list(x), "jet_zero": jet_zero, "split_zero": split_zero})
    return VerificationReport(
        f"loci.jet_check.{bundle_of(s)}",
        "pass" if not failures else "fail",
        failures or None,
        {"points": len(points), "orbits": orbits},
    )


# -- zero locus -----------------------------------------------------------------


@dataclass
class ZeroLocusReport:
    bundle: str
    points: list
    codimension: int | None = None
    per_point: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p["match"] for p in self.per_point)

    def to_json(self) -> dict:
        from .report import to_jsonable

        return {
            "bundle": self.bundle,
            "status": "pass" if self.passed else "fail",
            "codimension": self.codimension,
            "points": to_jsonable([list(p) for p in self.points]),
            "per_point": to_jsonable(self.per_point),
        }


def _predicted_tangent(data, s, x) -> list:
    n = data.n
    ls = split(data, s)
    if bundle_of(s) == "tractor":
        xi = [Fraction(v) for v in ls.xi.evaluate(x).flat]
        alpha = [xi[1], -xi[0]]  # spans the annihilator of xi in E*
        return [[alpha[a] * int(ap == j) for a in range(2) for ap in range(n)] for j in range(n)]
    mu = [Fraction(v) for v in ls.mu.evaluate(x).flat]
    ftilde = nullspace([mu], n)
    return [[int(a == e) * f[ap] for a in range(2) for ap in range(n)] for e in range(2) for f in ftilde]


def zero_locus_analysis(data: ChartWeylData, s: IndexedTensor, points) -> ZeroLocusReport:
    """Rank of grad s and the tangent model at exact zeros of ``s``."""
    _require_solution(data, s)
    n = data.n
    bundle = bundle_of(s)
    expected = n if bundle == "tractor" else 2
    grad = covariant_derivative(data, s)
    report = ZeroLocusReport(bundle, [_point(x) for x in points])
    codims = set()
    for x in report.points:
        if any(s.evaluate(x).flat):
            raise ValueError(f"point {list(map(str, x))} is not on the zero set")
        mat = _frame_matrix(grad.evaluate(x), n)
        r = rank(mat)
        kernel = nullspace(mat, 2 * n)
        predicted = _predicted_tangent(data, s, x)
        match = r == expected and span_equal(kernel, predicted, 2 * n)
        codims.add(r)
        report.per_point.append(
            {"point": list(x), "rank": r, "kernel": kernel, "predicted": predicted, "match": match}
        )
    report.codimension = codims.pop() if len(codims) == 1 else None
    return report


# -- Weyl structures for nowhere-vanishing solutions ------------------------------


def _target_upsilon_value(data, s) -> IndexedTensor:
    """The required Ups(s): -(1/n) tr(grad eta) or -(1/2) tr(grad phi)."""
    ls = split(data, s)
    return ls.xi if bundle_of(s) == "tractor" else ls.mu * Fraction(-1)


def _polynomial_upsilon(data, s, target, max_degree):
    """Polynomial Ups with Ups(s) = target, lowest degree first; free unknowns 0."""
    n, nv = data.n, data.nvars
    tractor = bundle_of(s) == "tractor"
    for deg in range(max_degree + 1):
        monos = monomials_upto(nv, deg)
        cols = [(a, ap, m) for a in range(2) for ap in range(n) for m in monos]
        rows: dict = {}
        for c, (a, ap, m) in enumerate(cols):
            mono = Poly.monomial(m)
            # tractor: Ups^a_{ap} eta^{ap} feeds component a
            # cotractor: Ups^a_{ap} phi_a feeds component ap
            src, dst = (s.comps[ap], a) if tractor else (s.comps[a], ap)
            for exp, coef in (mono * src).items():
                rows.setdefault((dst, exp), {})[c] = coef
        keys = set(rows)
        for k, p in enumerate(target.comps.flat):
            for exp, _ in p.items():
                keys.add((k, exp))
        keys = sorted(keys)
        mat = [rows.get(k, {}) for k in keys]
        rhs = [target.comps.flat[k[0]].coefficient(k[1]) for k in keys]
        sol = solve(mat, rhs, len(cols))
        if sol is not None:
            comps = np.empty((2, n), dtype=object)
            comps.fill(Poly.zero(nv))
            for (a, ap, m), c in zip(cols, sol):
                if c:
                    comps[a, ap] = comps[a, ap] + Poly.monomial(m, c)
            return IndexedTensor(n, (Slot.EU, Slot.FD), comps)
    return None


def _pointwise_upsilon(data, s, target, x) -> IndexedTensor:
    """Constant Ups with Ups(s(x)) = target(x)."""
    n, nv = data.n, data.nvars
    val = [Fraction(v) for v in s.evaluate(x).flat]
    tgt = [Fraction(v) for v in target.evaluate(x).flat]
    i = next(k for k, v in enumerate(val) if v)
    comps = np.empty((2, n), dtype=object)
    comps.fill(Poly.zero(nv))
    if bundle_of(s) == "tractor":
        for a in range(2):
            comps[a, i] = Poly.const(nv, tgt[a] / val[i])
    else:
        for ap in range(n):
            comps[i, ap] = Poly.const(nv, tgt[ap] / val[i])
    return IndexedTensor(n, (Slot.EU, Slot.FD), comps)


def nowhere_vanishing_weyl_check(
    data: ChartWeylData, s: IndexedTensor, samples=(), max_degree: int | None = None
) -> VerificationReport:
    """Find Ups making the solution parallel for the new Weyl connection.

    A polynomial Ups (degree <= ``max_degree``, default 2, never above what
    the degree cap allows) is tried first; otherwise a constant Ups is solved at each sample point,
    which suffices because the new derivative at x only sees Ups(x).
    """
    _require_solution(data, s)
    test_id = f"loci.nowhere_vanishing.{bundle_of(s)}"
    samples = [_point(x) for x in samples]
    for x in samples:
        if not any(s.evaluate(x).flat):
            raise PreconditionError(f"section vanishes at sample {list(map(str, x))}")
    target = _target_upsilon_value(data, s)
    cap = get_degree_cap() - max(p.degree() for p in s.comps.flat)
    bound = min(DEFAULT_UPSILON_DEGREE if max_degree is None else max_degree, cap)
    ups = _polynomial_upsilon(data, s, target, max(bound, 0))
    if ups is not None:
        new, _ = apply_upsilon(data, ups)
        d = covariant_derivative(new, s)
        return VerificationReport.check(
            test_id, d.is_zero(), d, mode="polynomial", upsilon=ups
        )
    if not samples:
        return VerificationReport(test_id, "inconclusive", None, {"mode": "none", "degree_bound": bound})
    failures = []
    for x in samples:
        new, _ = apply_upsilon(data, _pointwise_upsilon(data, s, target, x))
        val = covariant_derivative(new, s).evaluate(x)
        if any(val.flat):
            failures.append({"point": list(x), "value": val})
    return VerificationReport(
        test_id,
        "pass" if not failures else "fail",
        failures or None,
        {"mode": "pointwise", "samples": len(samples)},
    )


# -- induced structures ------------------------------------------------------------


def _contract_direction(grad_at_x: np.ndarray, v, n: int) -> np.ndarray:
    """sum_p v[p] * grad[p, ...] for a frame-indexed derivative value."""
    g = grad_at_x.reshape((2 * n,) + grad_at_x.shape[2:])
    return sum((g[p] * Fraction(v[p]) for p in range(2 * n) if v[p]), np.zeros(g.shape[1:], dtype=object) + Fraction(0))


def _alpha_field(ls_xi: IndexedTensor) -> IndexedTensor:
    """alpha_B = eps_{AB} xi^A with eps_{12} = 1: (-xi^2, xi^1)."""
    c = ls_xi.comps
    return IndexedTensor(ls_xi.n, (Slot.ED,), np.array([-c[1], c[0]], dtype=object))


def _tangent_field(alpha: IndexedTensor, f) -> IndexedTensor:
    """The vector field alpha (x) f with components Y^{B'}_B = f^{B'} alpha_B."""
    n = alpha.n
    comps = np.empty((n, 2), dtype=object)
    for bp in range(n):
        for b in range(2):
            comps[bp, b] = alpha.comps[b] * Fraction(f[bp])
    return IndexedTensor(n, (Slot.FU, Slot.ED), comps)


def _frame_vector(t_at_x: np.ndarray, n: int) -> list:
    """(F^, E_) components at a point as a frame vector v[A*n + A']."""
    return [Fraction(t_at_x[ap, a]) for a in range(2) for ap in range(n)]


def _lie_bracket_frame(data: ChartWeylData, y1: IndexedTensor, y2: IndexedTensor, x) -> list:
    """[Y1, Y2](x) in frame components, via coordinate components."""
    n, d = data.n, data.dim
    f1 = [y1.comps[p % n, p // n] for p in range(d)]
    f2 = [y2.comps[p % n, p // n] for p in range(d)]
    c1 = [sum((data.soldering[mu, p] * f1[p] for p in range(d)), Poly.zero(d)) for mu in range(d)]
    c2 = [sum((data.soldering[mu, p] * f2[p] for p in range(d)), Poly.zero(d)) for mu in range(d)]
    br = []
    for nu in range(d):
        v = Poly.zero(d)
        for mu in range(d):
            v = v + c1[mu] * c2[nu].diff(mu) - c2[mu] * c1[nu].diff(mu)
        br.append(v)
    return [
        sum((Fraction(data.soldering_inv[p, nu].evaluate(x)) * br[nu].evaluate(x) for nu in range(d)), Fraction(0))
        for p in range(d)
    ]


def induced_projective_structure(
    data1: ChartWeylData, upsilon: IndexedTensor, eta: IndexedTensor, x, tangent_pairs
) -> VerificationReport:
    """Pointwise checks of the projective structure induced on the zero set N."""
    _require_solution(data1, eta)
    if bundle_of(eta) != "tractor":
        raise ValueError("the projective structure lives on the zero set of an F-section")
    n = data1.n
    x = _point(x)
    if any(eta.evaluate(x).flat):
        raise ValueError("x is not on the zero set")
    data2, _ = apply_upsilon(data1, upsilon)
    grad_eta = _frame_matrix(covariant_derivative(data1, eta).evaluate(x), n)
    for pair in tangent_pairs:
        for v in pair:
            if any(sum(r[p] * Fraction(v[p]) for p in range(2 * n)) for r in grad_eta):
                raise ValueError("tangent vector is not in the kernel of grad eta")
    ls = split(data1, eta)
    xi_at = [Fraction(v) for v in ls.xi.evaluate(x).flat]
    alpha = _alpha_field(ls.xi)
    alpha_at = [Fraction(v) for v in alpha.evaluate(x).flat]
    # (a) the E-part of L eta is parallel along N
    grad_xi = covariant_derivative(data1, ls.xi).evaluate(x)
    # (b) the line field ell is preserved
    grad_alpha = covariant_derivative(data1, alpha).evaluate(x)
    ups_at = upsilon.evaluate(x)
    tau, _ = torsion(data1)
    tau_at = tau.evaluate(x)
    # covariant derivatives of the basis fields alpha (x) e_j under both data
    basis_fields = [_tangent_field(alpha, [int(i == j) for i in range(n)]) for j in range(n)]
    nab1 = [covariant_derivative(data1, y).evaluate(x) for y in basis_fields]
    nab2 = [covariant_derivative(data2, y).evaluate(x) for y in basis_fields]

    def f_of(v):
        # v = alpha (x) f: recover f from a nonzero alpha component
        a = next(i for i in range(2) if alpha_at[i])
        return [Fraction(v[a * n + ap]) / alpha_at[a] for ap in range(n)]

    def ups_of(v):
        return sum((Fraction(ups_at[a, ap]) * Fraction(v[a * n + ap]) for a in range(2) for ap in range(n)), Fraction(0))

    def nabla_along(nab, v, w):
        fw = f_of(w)
        acc = None
        for j in range(n):
            if fw[j]:
                t = _contract_direction(nab[j], v, n) * fw[j]
                acc = t if acc is None else acc + t
        if acc is None:
            return [Fraction(0)] * (2 * n)
        return _frame_vector(acc, n)

    failures = {"parallel_E_part": [], "line_preserved": [], "difference": [], "torsion": [], "tangent": []}
    for v1, v2 in tangent_pairs:
        v1 = [Fraction(c) for c in v1]
        v2 = [Fraction(c) for c in v2]
        for v in (v1, v2):
            dx = _contract_direction(grad_xi, v, n)
            if any(dx.flat):
                failures["parallel_E_part"].append({"direction": v, "value": dx})
            da = _contract_direction(grad_alpha, v, n)
            if sum(Fraction(da[b]) * xi_at[b] for b in range(2)):
                failures["line_preserved"].append({"direction": v})
            # tangent vectors must lie in ell (x) F
            if any(f_of(v)[ap] * alpha_at[a] != v[a * n + ap] for a in range(2) for ap in range(n)):
                failures["tangent"].append({"direction": v})
        d1 = nabla_along(nab1, v1, v2)
        d2 = nabla_along(nab2, v1, v2)
        expected = [ups_of(v1) * b + ups_of(v2) * a for a, b in zip(v1, v2)]
        diff = [b - a for a, b in zip(d1, d2)]
        if diff != expected:
            failures["difference"].append({"pair": [v1, v2], "difference": diff, "expected": expected})
        # torsion of the ambient connection on the extending fields
        y1 = _tangent_field(alpha, f_of(v1))
        y2 = _tangent_field(alpha, f_of(v2))
        t_fields = [
            a - b - c
            for a, b, c in zip(nabla_along(nab1, v1, v2), nabla_along(nab1, v2, v1), _lie_bracket_frame(data1, y1, y2, x))
        ]
        t_tau = _frame_vector(
            np.einsum("p,q,pqkc->kc", np.array(v1, dtype=object), np.array(v2, dtype=object), tau_at.reshape((2 * n, 2 * n, n, 2))),
            n,
        )
        if t_fields != t_tau:
            failures["torsion"].append({"pair": [v1, v2], "fields": t_fields, "tau": t_tau})
    bad = {k: v for k, v in failures.items() if v}
    return VerificationReport(
        "loci.induced_projective_structure",
        "pass" if not bad else "fail",
        bad or None,
        {"point": list(x), "pairs": len(tangent_pairs), "checks": {k: not v for k, v in failures.items()}},
    )


def _det(rows) -> Fraction:
    m = [[Fraction(v) for v in r] for r in rows]
    k = len(m)
    det = Fraction(1)
    for c in range(k):
        piv = next((r for r in range(c, k) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, k):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def wedge_coefficient(vectors) -> Fraction:
    """Coefficient of f_1 ^ ... ^ f_n in v_1 ^ ... ^ v_n."""
    return _det([list(v) for v in vectors])


def induced_ag_structure(data: ChartWeylData, phi: IndexedTensor, x, beta0=None, beta0_alt=None) -> VerificationReport:
    """Checks of the isomorphism L2 E* -> L^{n-1} F~ at a point of the zero set."""
    _require_solution(data, phi)
    if bundle_of(phi) != "cotractor":
        raise ValueError("the AG-structure lives on the zero set of an E*-section")
    n = data.n
    x = _point(x)
    if any(phi.evaluate(x).flat):
        raise ValueError("x is not on the zero set")
    mu = [Fraction(v) for v in split(data, phi).mu.evaluate(x).flat]
    ftilde = [r for r in rref(nullspace([mu], n))[0]]
    ftilde = [[r.get(c, Fraction(0)) for c in range(n)] for r in ftilde]
    if beta0 is None:
        i = next(k for k, v in enumerate(mu) if v)
        beta0 = [Fraction(int(k == i)) / mu[i] for k in range(n)]
    if beta0_alt is None:
        beta0_alt = [b + f for b, f in zip(beta0, ftilde[0])]
    coeffs = []
    for b in (beta0, beta0_alt):
        b = [Fraction(v) for v in b]
        if sum(m * v for m, v in zip(mu, b)) != 1:
            raise ValueError("beta0 must pair to 1 with the F*-part of L phi")
        coeffs.append(wedge_coefficient(ftilde + [b]))
    iso = coeffs[0] != 0
    independent = coeffs[0] == coeffs[1]
    # chart datum e^1 ^ e^2 -> f_1 ^ ... ^ f_n composed with the inverse map
    composite = 1 / coeffs[0] if iso else Fraction(0)
    ok = iso and independent and composite != 0
    return VerificationReport.check(
        "loci.induced_ag_structure",
        ok,
        {"coefficients": coeffs},
        point=list(x),
        ftilde=ftilde,
        isomorphism=iso,
        beta0_independent=independent,
        composite_coefficient=composite,
    )
