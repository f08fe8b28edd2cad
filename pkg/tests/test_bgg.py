import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from agtractor import bgg, examples, weyl
from agtractor.poly import Poly, monomials_upto
from agtractor.report import PreconditionError
from agtractor.tensor import IndexedTensor, trace_free_decompose
from agtractor.weyl import SplitCotractor, SplitTractor, apply_upsilon, resplit, tractor_derivative

N = 3
NV = 2 * N


def x(i):
    return Poly.var(NV, i)


def vec(slot, values):
    return IndexedTensor(N, (slot,), np.array(values, dtype=object))


@pytest.fixture(scope="module")
def flagship3_cotractor(flagship3):
    return bgg.solve_bgg_polynomial(flagship3, "cotractor", 2)


# -- split and D ------------------------------------------------------------------


def test_split_constant(flat3):
    eta = vec("F^", [1, -2, 4])
    assert bgg.split(flat3, eta) == SplitTractor(eta, vec("E^", [0, 0]))


def test_split_flat_family(flat3):
    a, b = [3, 0, -1], [2, Fraction(1, 3)]
    eta = examples.flat_solution(N, "tractor", a, b)
    assert bgg.split(flat3, eta) == SplitTractor(eta, vec("E^", [-v for v in b]))


def test_split_cotractor_coordinate(flat3):
    phi = vec("E_", [x(0), x(N)])  # phi_B = x^{1'}_B
    assert bgg.split(flat3, phi) == SplitCotractor(phi, vec("F_", [1, 0, 0]))


@given(st.integers(0, 10**6), st.sampled_from(["tractor", "cotractor"]))
@settings(max_examples=6, deadline=None)
def test_split_and_d_upsilon_invariant(flagship3, seed, bundle):
    rng = random.Random(seed)
    ups = examples.random_upsilon(N, rng, 2)
    s = examples.random_section(N, bundle, rng, 2)
    new, _ = apply_upsilon(flagship3, ups)
    assert bgg.split(new, s) == resplit(bgg.split(flagship3, s), ups)
    assert bgg.bgg_operator(new, s) == bgg.bgg_operator(flagship3, s)


@given(st.integers(0, 10**6), st.sampled_from(["tractor", "cotractor"]))
@settings(max_examples=6, deadline=None)
def test_split_defining_property(flagship3, seed, bundle):
    rng = random.Random(seed)
    s = examples.random_section(N, bundle, rng, 2)
    ls = bgg.split(flagship3, s)
    dl = tractor_derivative(flagship3, ls)
    if bundle == "tractor":
        assert ls.eta == s
        assert trace_free_decompose(dl.eta, "TStarM_F").trace.is_zero()
        assert trace_free_decompose(bgg.bgg_operator(flagship3, s), "TStarM_F").trace.is_zero()
    else:
        assert ls.phi == s
        assert trace_free_decompose(dl.phi, "TStarM_EStar").trace.is_zero()
        assert trace_free_decompose(bgg.bgg_operator(flagship3, s), "TStarM_EStar").trace.is_zero()


def test_d_on_flat_family_and_quadratic(flat3):
    assert bgg.bgg_operator(flat3, examples.flat_solution(N, "tractor", [1, 2, 3], [4, 5])).is_zero()
    eta = vec("F^", [x(bp) * x(0) for bp in range(N)])  # x^{B'}_1 x^{1'}_1
    d = bgg.bgg_operator(flat3, eta)
    assert not d.is_zero()
    assert all(p.degree() <= 1 for p in d.comps.flat)


# -- solver ---------------------------------------------------------------------


def coefficient_matrix(sections, degree):
    monos = monomials_upto(NV, degree)
    return sympy.Matrix([[sympy.Rational(str(p.coefficient(m))) for p in s.comps.flat for m in monos] for s in sections])


@pytest.mark.parametrize("bundle,dim_a,dim_b", [("tractor", N, 2), ("cotractor", 2, N)])
def test_flat_solution_space(flat3, bundle, dim_a, dim_b):
    basis = bgg.solve_bgg_polynomial(flat3, bundle, 2)
    assert basis.dimension == N + 2
    family = [examples.flat_solution(N, bundle, [int(i == k) for i in range(dim_a)], [0] * dim_b) for k in range(dim_a)]
    family += [examples.flat_solution(N, bundle, [0] * dim_a, [int(i == k) for i in range(dim_b)]) for k in range(dim_b)]
    a, b = coefficient_matrix(basis.basis, 2), coefficient_matrix(family, 2)
    assert a.rank() == b.rank() == a.col_join(b).rank() == N + 2
    for s in basis.basis:
        assert bgg.bgg_operator(flat3, s).is_zero()


def test_flat_degree_zero(flat3):
    assert bgg.solve_bgg_polynomial(flat3, "tractor", 0).dimension == N
    assert bgg.solve_bgg_polynomial(flat3, "cotractor", 0).dimension == 2


def test_solver_rejects_bad_input(flat3):
    with pytest.raises(ValueError):
        bgg.solve_bgg_polynomial(flat3, "adjoint", 2)
    with pytest.raises(ValueError):
        bgg.solve_bgg_polynomial(flat3, "tractor", -1)


def test_one_jet(flat3):
    basis = bgg.solve_bgg_polynomial(flat3, "tractor", 2).basis
    assert bgg.one_jet_rank(flat3, basis, (Fraction(1, 2), 3, -1, 0, 2, Fraction(5, 7))).passed


# -- prolongation ---------------------------------------------------------------


def test_corrections_vanish_without_torsion(flat3, const_gamma3):
    for d in (flat3, const_gamma3):
        phi, psi = bgg.prolongation_correction(d)
        assert phi.is_zero() and psi.is_zero()


def test_corrections_need_normal_data():
    with pytest.raises(PreconditionError):
        bgg.prolongation_correction(examples.constant_rho(N, 2))


def test_corrections_on_symmetric_input(flagship3, flagship3_blocks, monkeypatch):
    _, _, tt = weyl.contractions(flagship3_blocks)
    sym = weyl.sym2_decompose(tt).symmetric
    assert not sym.is_zero()
    monkeypatch.setattr(bgg, "contractions", lambda blocks: (None, None, sym))
    phi, psi = bgg.prolongation_correction(flagship3, flagship3_blocks, check=False)
    assert phi == sym * Fraction(-1, (N - 1) * N)
    assert psi == sym * Fraction(-1, N)


def test_corrections_coefficients(flagship3, flagship3_blocks):
    phi, psi = bgg.prolongation_correction(flagship3, flagship3_blocks)
    _, _, tt = weyl.contractions(flagship3_blocks)
    s, a = weyl.sym2_decompose(tt)
    assert not tt.is_zero()
    assert phi == s * Fraction(-1, 6) + a * Fraction(-1, 28)
    assert psi == s * Fraction(-1, 3) + a * Fraction(-1, 21)


def test_flat_prolongation_equals_tractor(flat3):
    rng = random.Random(5)
    t = SplitTractor(examples.random_section(N, "tractor", rng), vec("E^", [x(1), 3]))
    assert bgg.prolongation_derivative(flat3, t) == tractor_derivative(flat3, t)
    for s in bgg.solve_bgg_polynomial(flat3, "tractor", 2).basis:
        assert bgg.prolongation_derivative(flat3, bgg.split(flat3, s)).is_zero()


@given(st.integers(0, 10**6))
@settings(max_examples=4, deadline=None)
def test_prolongation_is_bullet_modification(flagship3, flagship3_blocks, seed):
    rng = random.Random(seed)
    phi, psi = bgg.prolongation_correction(flagship3, flagship3_blocks)
    t = SplitTractor(examples.random_section(N, "tractor", rng), vec("E^", [examples.random_poly(NV, rng, 2) for _ in range(2)]))
    ct = SplitCotractor(examples.random_section(N, "cotractor", rng), vec("F_", [examples.random_poly(NV, rng, 2) for _ in range(N)]))
    diff = bgg.prolongation_derivative(flagship3, t, (phi, psi)) - tractor_derivative(flagship3, t)
    assert diff == bgg.bullet_difference(phi * -1, t)
    diff = bgg.prolongation_derivative(flagship3, ct, (phi, psi)) - tractor_derivative(flagship3, ct)
    assert diff == bgg.bullet_difference(psi, ct)


def test_cotractor_prolongation_identity_curved(flagship3, flagship3_blocks, flagship3_cotractor):
    phi, psi = bgg.prolongation_correction(flagship3, flagship3_blocks)
    assert flagship3_cotractor.dimension >= 1
    kinds = []
    for s in flagship3_cotractor.basis:
        solution, normal = bgg.is_normal_solution(flagship3, s, flagship3_blocks)
        assert solution
        kinds.append(normal)
        ls = bgg.split(flagship3, s)
        dl = tractor_derivative(flagship3, ls)
        assert dl.phi.is_zero() and dl.mu == bgg._psi_term(psi, s)
        assert bgg.prolongation_derivative(flagship3, ls, (phi, psi)).is_zero()
        assert dl.is_zero() == normal
    assert False in kinds  # a curved solution that is not normal


@pytest.mark.slow
def test_tractor_prolongation_identity_n4():
    data = examples.flagship(4)
    blocks = weyl.curvature_blocks(data)
    phi, psi = bgg.prolongation_correction(data, blocks)
    basis = bgg.solve_bgg_polynomial(data, "tractor", 2)
    assert basis.dimension >= 1
    for s in basis.basis:
        ls = bgg.split(data, s)
        dl = tractor_derivative(data, ls)
        assert dl.eta.is_zero() and dl.xi == bgg._phi_term(phi, s)
        assert bgg.prolongation_derivative(data, ls, (phi, psi)).is_zero()
        assert bgg.is_normal_solution(data, s, blocks) == (True, dl.is_zero())


def test_normal_solution_flat(flat3):
    eta = examples.flat_solution(N, "tractor", [1, 0, 2], [0, 1])
    assert bgg.is_normal_solution(flat3, eta) == (True, True)
    assert tractor_derivative(flat3, bgg.split(flat3, eta)).is_zero()
    assert bgg.is_normal_solution(flat3, vec("F^", [x(0) ** 2, 0, 0])) == (False, False)


def test_torsion_free_normal_iff_solution(const_gamma3):
    rng = random.Random(2)
    for s in bgg.solve_bgg_polynomial(const_gamma3, "cotractor", 1).basis:
        assert bgg.is_normal_solution(const_gamma3, s) == (True, True)
    s = examples.random_section(N, "tractor", rng, 2)
    sol, normal = bgg.is_normal_solution(const_gamma3, s)
    assert sol == normal


def test_basis_json(flat3):
    js = bgg.solve_bgg_polynomial(flat3, "cotractor", 1).to_json()
    assert js["dimension"] == len(js["basis"]) == N + 2
