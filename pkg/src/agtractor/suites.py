"""Verification suites run by ``agtractor verify``.

Every check returns one :class:`VerificationReport`; unexpected exceptions
become failing reports so that one broken check cannot hide the others.
All randomness flows from the suite seed.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import algebra, bgg, examples, loci, weyl
from .algebra import RepVector, build_graded_algebra, codifferential, wedge_basis
from .linalg import span_equal
from .poly import Poly
from .report import VerificationReport, merge
from .tensor import IndexedTensor, Slot, trace_free_decompose

__all__ = ["SUITES", "run_suite"]

UPSILON_SAMPLES = 50
KAPPA_SAMPLES = 50
CODIFF_SAMPLES = 100
ZERO_POINTS = 20
PROJECTIVE_POINTS = 10
PROJECTIVE_PAIRS = 5
AG_POINTS = 10


class _Collector:
    def __init__(self):
        self.reports: list[VerificationReport] = []

    def run(self, test_id: str, fn):
        """``fn`` returns a report, a bool, or (bool, details)."""
        start = time.perf_counter()
        try:
            out = fn()
        except Exception as e:  # noqa: BLE001 - recorded as a failing check
            out = VerificationReport(test_id, "fail", {"error": f"{type(e).__name__}: {e}"})
        if isinstance(out, VerificationReport):
            out.test_id = test_id
            rep = out
        else:
            details = {}
            if isinstance(out, tuple):
                out, details = out
            rep = VerificationReport(test_id, "pass" if out else "fail", None if out else details, details)
        rep.elapsed = time.perf_counter() - start
        self.reports.append(rep)
        return rep


def _rng(seed: int, tag: str) -> random.Random:
    return random.Random(f"{seed}:{tag}")


# -- algebra -----------------------------------------------------------------------


def _random_rep_vector(rep: str, n: int, rng) -> RepVector:
    if rep == "adjoint":
        m = np.array([[examples.random_rational(rng) for _ in range(n + 2)] for _ in range(n + 2)], dtype=object)
        m[0, 0] -= sum(m[i, i] for i in range(n + 2))
        return RepVector(rep, m)
    return RepVector(rep, np.array([examples.random_rational(rng) for _ in range(n + 2)], dtype=object))


def _random_kappa(n: int, rng) -> weyl.CurvatureBlocks:
    d, nv = 2 * n, 2 * n
    mats = np.empty((d, d), dtype=object)
    for p in range(d):
        mats[p, p] = np.full((n + 2, n + 2), Poly.zero(nv), dtype=object)
    for p, q in combinations(range(d), 2):
        m = _random_rep_vector("adjoint", n, rng).components
        pm = np.vectorize(lambda c: Poly.const(nv, c), otypes=[object])(m)
        mats[p, q] = pm
        mats[q, p] = -pm
    return weyl.CurvatureBlocks.from_matrices(n, mats)


def algebra_suite(n: int, seed: int) -> list:
    c = _Collector()
    alg = build_graded_algebra(n)

    def dims():
        got = [alg.dim(-1), alg.dim(0), alg.dim(1)]
        return got == [2 * n, n * n + 3, 2 * n], {"dims": got}

    def grading():
        bad = []
        for i, x in enumerate(alg.basis):
            for j, y in enumerate(alg.basis):
                br = algebra.bracket(x, y)
                g = alg.grades[i] + alg.grades[j]
                if any(br.flat) and (abs(g) > 1 or alg.grade_of(br) != g):
                    bad.append([i, j])
        return not bad, {"violations": bad[:10]}

    def codiff_squared():
        rng = _rng(seed, "codiff")
        bad = 0
        for k in range(CODIFF_SAMPLES):
            rep = ("standard", "dual", "adjoint")[k % 3]
            keys = rng.sample(wedge_basis(n, 2), rng.randint(1, 4))
            element = {key: _random_rep_vector(rep, n, rng) for key in sorted(keys)}
            if codifferential(1, rep, codifferential(2, rep, element, n), n):
                bad += 1
        return bad == 0, {"samples": CODIFF_SAMPLES, "nonzero": bad}

    def block_codiff():
        rng = _rng(seed, "kappa")
        fails = 0
        for _ in range(KAPPA_SAMPLES):
            if not algebra.check_block_codifferential(_random_kappa(n, rng), n).passed:
                fails += 1
        return fails == 0, {"samples": KAPPA_SAMPLES, "disagreements": fails}

    c.run("algebra.dimensions", dims)
    c.run("algebra.grading", grading)
    c.run("algebra.codifferential_squared", codiff_squared)
    c.run("algebra.block_codifferential_paths", block_codiff)
    return c.reports


# -- weyl ----------------------------------------------------------------------------


def _normal_examples(n: int, seed: int) -> list:
    return [examples.flat_data(n), examples.constant_gamma(n, seed), examples.flagship(n)]


def _random_tractor(n, rng, degree=2):
    return weyl.SplitTractor(
        examples.random_section(n, "tractor", rng, degree),
        IndexedTensor(n, (Slot.EU,), np.array([examples.random_poly(2 * n, rng, degree) for _ in range(2)], dtype=object)),
    )


def _random_cotractor(n, rng, degree=2):
    return weyl.SplitCotractor(
        examples.random_section(n, "cotractor", rng, degree),
        IndexedTensor(n, (Slot.FD,), np.array([examples.random_poly(2 * n, rng, degree) for _ in range(n)], dtype=object)),
    )


def weyl_suite(n: int, seed: int, cache: dict) -> list:
    c = _Collector()
    datas = cache.setdefault("normal", _normal_examples(n, seed))
    flag = datas[-1]
    blocks = {d.label: weyl.curvature_blocks(d) for d in datas}
    cache["blocks"] = blocks

    def spencer():
        r = weyl.spencer_rank(n)
        return r["rank_delta"] == r["nonharmonic_dim"], r

    c.run("weyl.spencer_rank", spencer)
    for d in datas + [examples.constant_rho(n, seed)]:
        for rep in weyl.validate(d):
            c.run(rep.test_id, lambda rep=rep: rep)
    for d in datas:
        b = blocks[d.label]
        c.run(f"weyl.tau_block.{d.label}", lambda d=d, b=b: b.tau == weyl.torsion(d)[0])
        c.run(f"weyl.curvature_methods.{d.label}", lambda d=d, b=b: b == weyl.curvature_blocks(d, "cartan"))
        c.run(f"weyl.normality.{d.label}", lambda d=d, b=b: weyl.check_normality(d, b))
        c.run(f"weyl.weyl_tensor_relations.{d.label}", lambda d=d, b=b: weyl.verify_weyl_tensor_relations(d, b))
        for frame in ("coordinate", "soldering"):
            c.run(f"weyl.bianchi.{d.label}.{frame}", lambda d=d, b=b, f=frame: weyl.verify_bianchi(d, b, f))
    c.run(
        "weyl.flagship_torsion_nonzero",
        lambda: (not blocks[flag.label].tau.is_zero() and not weyl.contractions(blocks[flag.label])[2].is_zero(), {}),
    )
    c.run("weyl.flagship_harmonic", lambda: weyl.torsion(flag)[1])

    def idempotent():
        once = weyl.weylize(weyl.shear_data(n, examples.flagship_shears(n)))
        return weyl.torsion(weyl.weylize(once))[0] == weyl.torsion(once)[0]

    c.run("weyl.weylize_idempotent", idempotent)
    bad = examples.constant_rho(n, seed)
    c.run("weyl.non_normal_detected", lambda: weyl.check_normality(bad).failed)

    def corrupted():
        rng = _rng(seed, "corrupt")
        rho = flag.rho.comps.copy()
        idx = tuple(rng.randrange(s) for s in rho.shape)
        rho[idx] = rho[idx] + Poly.var(2 * n, rng.randrange(2 * n))
        wrong = weyl.curvature_blocks(flag.with_rho(IndexedTensor(n, flag.rho.slots, rho)))
        return weyl.verify_bianchi(flag, wrong).failed

    c.run("weyl.bianchi_corruption_detected", corrupted)

    def tractor_equivariance():
        rng = _rng(seed, "tractor-eq")
        bad = 0
        for _ in range(5):
            ups = examples.random_upsilon(n, rng)
            for s in (_random_tractor(n, rng), _random_cotractor(n, rng)):
                new, s2 = weyl.apply_upsilon(flag, ups, s)
                if weyl.tractor_derivative(new, s2) != weyl.resplit(weyl.tractor_derivative(flag, s), ups):
                    bad += 1
        return bad == 0, {"mismatches": bad}

    c.run("weyl.tractor_derivative_upsilon_equivariance", tractor_equivariance)

    def group_action():
        rng = _rng(seed, "group")
        u1, u2 = examples.random_upsilon(n, rng, 1), examples.random_upsilon(n, rng, 1)
        s = _random_tractor(n, rng)
        d1, s1 = weyl.apply_upsilon(flag, u1, s)
        d12, s12 = weyl.apply_upsilon(d1, u2, s1)
        dc, sc = weyl.apply_upsilon(flag, u1 + u2, s)
        same_gamma = bool((d12.gammaE == dc.gammaE).all() and (d12.gammaF == dc.gammaF).all())
        same_section = s12 == sc
        same_derivative = weyl.tractor_derivative(d12, s12) == weyl.tractor_derivative(dc, sc)
        return same_gamma and same_section and same_derivative, {
            "gamma": same_gamma,
            "section": same_section,
            "derivative": same_derivative,
            "rho_equal": d12.rho == dc.rho,
        }

    c.run("weyl.upsilon_group_action", group_action)
    return c.reports


# -- bgg -------------------------------------------------------------------------------


def _coefficient_vectors(sections, monos):
    index = {m: i for i, m in enumerate(monos)}
    out = []
    for s in sections:
        v = [Fraction(0)] * (len(monos) * s.comps.size)
        for k, p in enumerate(s.comps.flat):
            for e, c in p.items():
                v[k * len(monos) + index[e]] = c
        out.append(v)
    return out


def _flat_family(n: int, bundle: str) -> list:
    dim = n if bundle == "tractor" else 2
    other = 2 if bundle == "tractor" else n
    fam = []
    for i in range(dim):
        a = [int(j == i) for j in range(dim)]
        fam.append(examples.flat_solution(n, bundle, a, [0] * other))
    for i in range(other):
        b = [int(j == i) for j in range(other)]
        fam.append(examples.flat_solution(n, bundle, [0] * dim, b))
    return fam


def bgg_suite(n: int, seed: int, cache: dict) -> list:
    from .poly import monomials_upto

    c = _Collector()
    datas = cache.get("normal") or _normal_examples(n, seed)
    blocks = cache.get("blocks") or {d.label: weyl.curvature_blocks(d) for d in datas}
    flat, flag = datas[0], datas[-1]
    corrections = {d.label: bgg.prolongation_correction(d, blocks[d.label]) for d in datas}

    solutions = {}
    for bundle in bgg.BUNDLES:
        basis = bgg.solve_bgg_polynomial(flat, bundle, 2)
        solutions[(flat.label, bundle)] = basis

        def flat_dim(basis=basis, bundle=bundle):
            fam = _flat_family(n, bundle)
            monos = monomials_upto(2 * n, 2)
            same = span_equal(_coefficient_vectors(basis.basis, monos), _coefficient_vectors(fam, monos), 0)
            return basis.dimension == n + 2 and same, {"dimension": basis.dimension, "matches_family": same}

        c.run(f"bgg.flat_dimension.{bundle}", flat_dim)
        low = bgg.solve_bgg_polynomial(flat, bundle, 0)
        expect = n if bundle == "tractor" else 2
        c.run(f"bgg.flat_dimension_degree0.{bundle}", lambda low=low, e=expect: (low.dimension == e, {"dimension": low.dimension}))
        c.run(
            f"bgg.one_jet.{bundle}",
            lambda basis=basis: bgg.one_jet_rank(flat, basis.basis, examples.random_rational_point(2 * n, _rng(seed, "jet"))),
        )
    for d in datas[1:]:
        for bundle in bgg.BUNDLES:
            solutions[(d.label, bundle)] = bgg.solve_bgg_polynomial(d, bundle, 2)
    for (label, bundle), basis in sorted(solutions.items()):
        c.run(
            f"bgg.dimension_bound.{label}.{bundle}",
            lambda basis=basis: (basis.dimension <= n + 2, {"dimension": basis.dimension}),
        )

    for d in (flat, flag):

        def invariance(d=d):
            rng = _rng(seed, f"ups-{d.label}")
            bad = []
            for k in range(UPSILON_SAMPLES):
                ups = examples.random_upsilon(n, rng, 2)
                bundle = ("tractor", "cotractor")[k % 2]
                s = examples.random_section(n, bundle, rng, 2)
                new, _ = weyl.apply_upsilon(d, ups)
                if bgg.split(new, s) != weyl.resplit(bgg.split(d, s), ups):
                    bad.append([k, "split"])
                if bgg.bgg_operator(new, s) != bgg.bgg_operator(d, s):
                    bad.append([k, "bgg_operator"])
            return not bad, {"samples": UPSILON_SAMPLES, "mismatches": bad}

        c.run(f"bgg.upsilon_invariance.{d.label}", invariance)

    def split_properties():
        rng = _rng(seed, "split")
        bad = 0
        for d in datas:
            for bundle in bgg.BUNDLES:
                s = examples.random_section(n, bundle, rng, 2)
                ls = bgg.split(d, s)
                dl = weyl.tractor_derivative(d, ls)
                if bundle == "tractor":
                    proj_ok = ls.eta == s
                    tr = trace_free_decompose(dl.eta, "TStarM_F").trace
                else:
                    proj_ok = ls.phi == s
                    tr = trace_free_decompose(dl.phi, "TStarM_EStar").trace
                dtr = trace_free_decompose(
                    weyl.covariant_derivative(d, s), "TStarM_F" if bundle == "tractor" else "TStarM_EStar"
                )
                fine = proj_ok and tr.is_zero() and (bgg.bgg_operator(d, s) == dtr.trace_free)
                bad += not fine
        return bad == 0, {"failures": bad}

    c.run("bgg.split_defining_property", split_properties)

    def prolongation_bullet(d):
        rng = _rng(seed, f"bullet-{d.label}")
        phi, psi = corrections[d.label]
        ok = True
        for _ in range(3):
            t = _random_tractor(n, rng)
            diff = bgg.prolongation_derivative(d, t, (phi, psi)) - weyl.tractor_derivative(d, t)
            ok &= diff == bgg.bullet_difference(phi * -1, t)
            ct = _random_cotractor(n, rng)
            diff = bgg.prolongation_derivative(d, ct, (phi, psi)) - weyl.tractor_derivative(d, ct)
            ok &= diff == bgg.bullet_difference(psi, ct)
        return ok

    for d in datas:
        c.run(f"bgg.prolongation_bullet.{d.label}", lambda d=d: prolongation_bullet(d))

    def flat_parallel():
        bad = 0
        for bundle in bgg.BUNDLES:
            for s in solutions[(flat.label, bundle)].basis:
                ls = bgg.split(flat, s)
                bad += not bgg.prolongation_derivative(flat, ls, corrections[flat.label]).is_zero()
                bad += not weyl.tractor_derivative(flat, ls).is_zero()
        return bad == 0, {"nonparallel": bad}

    c.run("bgg.flat_prolongation_parallel", flat_parallel)

    for d in datas:
        phi, psi = corrections[d.label]
        _, _, tt = weyl.contractions(blocks[d.label])
        for bundle in bgg.BUNDLES:
            sols = solutions[(d.label, bundle)].basis

            def prolongation_identity(d=d, sols=sols, bundle=bundle, phi=phi, psi=psi):
                bad = []
                for k, s in enumerate(sols):
                    ls = bgg.split(d, s)
                    dl = weyl.tractor_derivative(d, ls)
                    pr = bgg.prolongation_derivative(d, ls, (phi, psi))
                    if bundle == "tractor":
                        fine = dl.eta.is_zero() and dl.xi == bgg._phi_term(phi, s)
                    else:
                        fine = dl.phi.is_zero() and dl.mu == bgg._psi_term(psi, s)
                    if not (fine and pr.is_zero()):
                        bad.append(k)
                return not bad, {"solutions": len(sols), "failing": bad}

            def biconditional(d=d, sols=sols, tt=tt):
                rows = []
                for s in sols:
                    parallel = weyl.tractor_derivative(d, bgg.split(d, s)).is_zero()
                    contraction_zero = bgg._contract_with(tt, s).is_zero()
                    rows.append({"parallel": parallel, "contraction_zero": contraction_zero})
                ok = all(r["parallel"] == r["contraction_zero"] for r in rows)
                return ok, {"solutions": rows}

            c.run(f"bgg.prolongation_identity.{d.label}.{bundle}", prolongation_identity)
            c.run(f"bgg.normal_solution.{d.label}.{bundle}", biconditional)
    cache["solutions"] = solutions
    return c.reports


# -- loci ---------------------------------------------------------------------------------


def _coordinate_section(n: int, bundle: str) -> IndexedTensor:
    """eta^{B'} = x^{B'}_1 or phi_B = x^{1'}_B."""
    if bundle == "tractor":
        return examples.flat_solution(n, bundle, [0] * n, [1, 0])
    return examples.flat_solution(n, bundle, [0, 0], [int(i == 0) for i in range(n)])


def loci_suite(n: int, seed: int, cache: dict) -> list:
    c = _Collector()
    flat = examples.flat_data(n)
    eta = _coordinate_section(n, "tractor")
    phi = _coordinate_section(n, "cotractor")
    n_points = loci.sample_zero_points(eta, ZERO_POINTS, seed)
    nt_points = loci.sample_zero_points(phi, ZERO_POINTS, seed + 1)

    def zl(s, pts, codim):
        rep = loci.zero_locus_analysis(flat, s, pts)
        return rep.passed and rep.codimension == codim and len(pts) >= ZERO_POINTS, {
            "codimension": rep.codimension,
            "points": len(pts),
        }

    c.run("loci.zero_locus.tractor", lambda: zl(eta, n_points, n))
    c.run("loci.zero_locus.cotractor", lambda: zl(phi, nt_points, 2))
    mixed = loci.random_points(2 * n, 5, seed)
    c.run("loci.jet_check.tractor", lambda: loci.jet_check(flat, eta, n_points[:5] + mixed))
    c.run("loci.jet_check.cotractor", lambda: loci.jet_check(flat, phi, nt_points[:5] + mixed))

    rng = _rng(seed, "nowhere")
    a = [examples.random_rational(rng) or 1 for _ in range(n)]
    b = [examples.random_rational(rng) for _ in range(2)]
    gen = examples.flat_solution(n, "tractor", a, b)
    samples = [x for x in loci.random_points(2 * n, 8, seed + 2) if any(gen.evaluate(x).flat)]
    c.run("loci.nowhere_vanishing.tractor_affine", lambda: loci.nowhere_vanishing_weyl_check(flat, gen, samples))
    const = examples.flat_solution(n, "tractor", a, [0, 0])
    c.run(
        "loci.nowhere_vanishing.tractor_constant",
        lambda: loci.nowhere_vanishing_weyl_check(flat, const),
    )
    cconst = examples.flat_solution(n, "cotractor", [1, 2], [0] * n)
    c.run("loci.nowhere_vanishing.cotractor_constant", lambda: loci.nowhere_vanishing_weyl_check(flat, cconst))

    def projective(ups_degree):
        rng = _rng(seed, f"proj{ups_degree}")
        ups = examples.random_upsilon(n, rng, ups_degree, density=0.5)
        fails = []
        for x in n_points[:PROJECTIVE_POINTS]:
            ker = loci.zero_locus_analysis(flat, eta, [x]).per_point[0]["kernel"]
            pairs = []
            for _ in range(PROJECTIVE_PAIRS):
                v1 = [sum(examples.random_rational(rng) * k[i] for k in ker) for i in range(2 * n)]
                v2 = [sum(examples.random_rational(rng) * k[i] for k in ker) for i in range(2 * n)]
                pairs.append((v1, v2))
            rep = loci.induced_projective_structure(flat, ups, eta, x, pairs)
            if not rep.passed:
                fails.append(rep.to_json())
        return not fails, {"points": PROJECTIVE_POINTS, "pairs_per_point": PROJECTIVE_PAIRS, "failures": fails}

    c.run("loci.induced_projective.constant_upsilon", lambda: projective(0))
    c.run("loci.induced_projective.polynomial_upsilon", lambda: projective(2))

    def ag():
        rng = _rng(seed, "ag")
        fails = []
        for x in nt_points[:AG_POINTS]:
            alt = None
            rep = loci.induced_ag_structure(flat, phi, x)
            ft = rep.details["ftilde"]
            beta = [Fraction(int(i == 0)) for i in range(n)]
            alt = [bi + examples.random_rational(rng) * sum(f[i] for f in ft) for i, bi in enumerate(beta)]
            rep2 = loci.induced_ag_structure(flat, phi, x, beta, alt)
            if not (rep.passed and rep2.passed):
                fails.append([str(v) for v in x])
        return not fails, {"points": AG_POINTS, "failures": fails}

    c.run("loci.induced_ag_structure", ag)

    # curved example: affine solutions with nonempty zero sets, if any
    flag = (cache.get("normal") or [examples.flagship(n)])[-1]
    sols = cache.get("solutions", {})
    found = False
    for bundle in bgg.BUNDLES:
        basis = sols.get((flag.label, bundle)) or bgg.solve_bgg_polynomial(flag, bundle, 2)
        for k, s in enumerate(basis.basis):
            if max(p.degree() for p in s.comps.flat) > 1:
                continue
            pts = loci.sample_zero_points(s, 5, seed + 3 + k)
            if not pts:
                continue
            found = True
            c.run(f"loci.curved_zero_locus.{flag.label}.{bundle}.{k}", lambda s=s, pts=pts: _curved_zero(flag, s, pts))
    if not found:
        c.reports.append(
            VerificationReport(f"loci.curved_zero_locus.{flag.label}", "skipped", None, {"reason": "no affine solution with zeros"})
        )
    return c.reports


def _curved_zero(data, s, pts):
    rep = loci.zero_locus_analysis(data, s, pts)
    expected = data.n if bgg.bundle_of(s) == "tractor" else 2
    return rep.passed and rep.codimension == expected, {"codimension": rep.codimension, "points": len(pts)}


SUITES = {
    "algebra": lambda n, seed, cache: algebra_suite(n, seed),
    "weyl": weyl_suite,
    "bgg": bgg_suite,
    "loci": loci_suite,
}


def run_suite(suite: str, n: int, seed: int) -> list:
    """Reports of one suite (or ``all``), sorted by test id."""
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    names = list(SUITES) if suite == "all" else [suite]
    cache: dict = {}
    reports = []
    for name in names:
        reports.extend(SUITES[name](n, seed, cache))
    return merge(reports)
