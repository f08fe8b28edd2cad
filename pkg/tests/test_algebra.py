import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from agtractor.algebra import (
    RepVector,
    act,
    bracket,
    build_graded_algebra,
    check_block_codifferential,
    codifferential,
    upper_basis,
    wedge_basis,
)
from agtractor.tensor import IndexedTensor
from agtractor.weyl import TAU_SLOTS, W_SLOTS, WP_SLOTS, Y_SLOTS, CurvatureBlocks

N = 3
fracs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def as_sympy(m):
    return sympy.Matrix(m.shape[0], m.shape[1], lambda i, j: sympy.Rational(str(Fraction(m[i, j]))))


def graded_element(alg, grade, coeffs):
    idx = alg.indices(grade)
    return sum((alg.basis[i].astype(object) * Fraction(c) for i, c in zip(idx, coeffs)),
               np.zeros((N + 2, N + 2), dtype=object))


def test_dimensions():
    alg = build_graded_algebra(N)
    assert len(alg.basis) == (N + 2) ** 2 - 1 == 24
    assert alg.dim(-1) == alg.dim(1) == 2 * N == 6
    assert alg.dim(0) == N**2 + 4 - 1 == 12
    assert all(np.trace(b) == 0 for b in alg.basis)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_grading_exhaustive(n):
    alg = build_graded_algebra(n)
    for i, j in itertools.product(range(alg.size), repeat=2):
        c = bracket(alg.basis[i], alg.basis[j])
        if not any(c.flat):
            continue
        gi, gj = alg.grades[i], alg.grades[j]
        assert abs(gi + gj) <= 1
        assert alg.grade_of(c) == gi + gj


def test_rejects_small_n():
    with pytest.raises(ValueError):
        build_graded_algebra(2)


def test_g1_abelian():
    alg = build_graded_algebra(N)
    for i, j in itertools.product(alg.indices(1), repeat=2):
        assert not any(bracket(alg.basis[i], alg.basis[j]).flat)


@given(st.lists(fracs, min_size=6, max_size=6), st.lists(fracs, min_size=6, max_size=6))
@settings(max_examples=30, deadline=None)
def test_bracket_g1_gminus1(zc, xc):
    alg = build_graded_algebra(N)
    z, x = graded_element(alg, 1, zc), graded_element(alg, -1, xc)
    c = bracket(z, x)
    oracle = as_sympy(z) * as_sympy(x) - as_sympy(x) * as_sympy(z)
    assert as_sympy(c) == oracle
    assert oracle.trace() == 0
    assert all(v == 0 for v in c[:2, 2:].flat) and all(v == 0 for v in c[2:, :2].flat)


def test_jacobi_on_basis_triples():
    alg = build_graded_algebra(N)
    b = alg.basis
    for i, j, k in itertools.combinations(range(alg.size), 3):
        s = bracket(b[i], bracket(b[j], b[k])) + bracket(b[j], bracket(b[k], b[i])) + bracket(b[k], bracket(b[i], b[j]))
        assert not any(s.flat)


def test_act_examples():
    alg = build_graded_algebra(N)
    z = graded_element(alg, 1, [1, 2, 0, -1, 3, 5])
    a = RepVector("standard", [4, -7, 0, 0, 0])
    assert act(z, a).is_zero()
    w = [2, -1, 3]
    v = RepVector("standard", [0, 0] + w)
    expected = [sum(z[r, 2 + c] * w[c] for c in range(N)) for r in range(2)] + [0] * N
    assert act(z, v) == RepVector("standard", expected)
    x = graded_element(alg, -1, [1, 0, 2, 0, -1, 1])
    mu = [3, 1, -2]
    out = act(x, RepVector("dual", [0, 0] + mu))
    # negative transpose: only rows of x^T touching the E* part survive
    expected = [-sum(x[2 + c, r] * mu[c] for c in range(N)) for r in range(2)] + [0] * N
    assert out == RepVector("dual", expected)


def test_act_rejects_mismatch():
    with pytest.raises(ValueError):
        act(np.eye(5, dtype=int), RepVector("standard", [1, 2, 3]))


def random_vec(rng, rep):
    if rep == "adjoint":
        m = np.array([[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(N + 2)] for _ in range(N + 2)], dtype=object)
        m[-1, -1] -= sum(m[i, i] for i in range(N + 2))
        return RepVector(rep, m)
    return RepVector(rep, [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(N + 2)])


@given(st.integers(0, 10**6), st.sampled_from(["standard", "dual", "adjoint"]))
@settings(max_examples=30, deadline=None)
def test_act_respects_brackets(seed, rep):
    rng = random.Random(seed)
    alg = build_graded_algebra(N)
    x = alg.from_coordinates([rng.randint(-3, 3) for _ in range(alg.size)])
    y = alg.from_coordinates([rng.randint(-3, 3) for _ in range(alg.size)])
    v = random_vec(rng, rep)
    assert act(bracket(x, y), v) == act(x, act(y, v)) - act(y, act(x, v))


def test_codifferential_degree_one_examples():
    alg = build_graded_algebra(N)
    zi = 4
    z = upper_basis(N, zi // N, zi % N)
    assert codifferential(1, "standard", {(zi,): RepVector("standard", [5, 2, 0, 0, 0])}, N) == {}
    w = [1, -3, 2]
    out = codifferential(1, "standard", {(zi,): RepVector("standard", [0, 0] + w)}, N)
    zw = as_sympy(np.asarray(z)) * sympy.Matrix([0, 0] + w)
    assert out[()] == RepVector("standard", [-v for v in zw])
    with pytest.raises(ValueError):
        codifferential(3, "standard", {}, N)
    assert alg.dim(1) == 2 * N


def brute_codiff(k, elem):
    """Independent evaluation through a dense coefficient array over p_+ indices."""
    out = {}
    for key, v in elem.items():
        for pos in range(k):
            rest = key[:pos] + key[pos + 1:]
            z = upper_basis(N, key[pos] // N, key[pos] % N)
            term = act(z, v) * (-1) ** (pos + 1)
            out[rest] = out[rest] + term if rest in out else term
    return {r: v for r, v in out.items() if not v.is_zero()}


@given(st.integers(0, 10**6), st.sampled_from(["standard", "dual", "adjoint"]))
@settings(max_examples=30, deadline=None)
def test_codifferential_squares_to_zero(seed, rep):
    rng = random.Random(seed)
    elem = {key: random_vec(rng, rep) for key in wedge_basis(N, 2) if rng.random() < 0.4}
    first = codifferential(2, rep, elem, N)
    assert first == brute_codiff(2, elem)
    assert codifferential(1, rep, first, N) == {}


def random_blocks(rng):
    # a 2-form with traceless values, assembled on frame pairs
    d = 2 * N
    mats = np.empty((d, d), dtype=object)
    for p in range(d):
        mats[p, p] = np.zeros((N + 2, N + 2), dtype=object)
    for p, q in itertools.combinations(range(d), 2):
        m = random_vec(rng, "adjoint").components
        mats[p, q], mats[q, p] = m, -m
    return CurvatureBlocks.from_matrices(N, mats)


def zero_blocks():
    return CurvatureBlocks(*(IndexedTensor.zeros(N, s) for s in (TAU_SLOTS, W_SLOTS, WP_SLOTS, Y_SLOTS)))


def test_block_codifferential_zero():
    rep = check_block_codifferential(zero_blocks(), N)
    assert rep.status == "pass" and rep.details["normal"]


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_block_codifferential_paths_agree(seed):
    rep = check_block_codifferential(random_blocks(random.Random(seed)), N)
    assert rep.status == "pass"


def test_pure_trace_tau_not_normal():
    # tau^A_{A'}^B_{B'}^{C'}_C = delta^{C'}_{B'} s^A_{A'}^B_C - delta^{C'}_{A'} s^B_{B'}^A_C
    rng = random.Random(3)
    s = np.array([[[[rng.randint(-3, 3) for _ in range(2)] for _ in range(2)] for _ in range(N)] for _ in range(2)], dtype=object)
    tau = np.zeros((2, N, 2, N, N, 2), dtype=object)
    for a, ap, b, bp, c in itertools.product(range(2), range(N), range(2), range(N), range(2)):
        tau[a, ap, b, bp, bp, c] += s[a, ap, b, c]
        tau[a, ap, b, bp, ap, c] -= s[b, bp, a, c]
    blocks = zero_blocks()
    blocks = CurvatureBlocks(IndexedTensor(N, TAU_SLOTS, tau), blocks.W, blocks.Wp, blocks.Y)
    rep = check_block_codifferential(blocks, N)
    assert rep.status == "pass"
    assert not rep.details["normal"]
    assert "top-left" in rep.details["offending_blocks"]


def test_block_codifferential_rejects_slots():
    b = zero_blocks()
    with pytest.raises(ValueError):
        check_block_codifferential(CurvatureBlocks(b.W, b.tau, b.Wp, b.Y), N)
