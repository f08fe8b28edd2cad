from fractions import Fraction

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from agtractor.linalg import mat_mul, min_norm_solver, nullspace, rank, rref, solve, span_equal, transpose

entries = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(entries, min_size=c, max_size=c), min_size=r, max_size=r)
        )
    )


def sym(m):
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in m])


@settings(max_examples=60)
@given(matrices())
def test_rank_and_rref_match_sympy(m):
    s = sym(m)
    assert rank(m) == s.rank()
    reduced, pivots = rref(m)
    ref, piv = s.rref()
    assert tuple(pivots) == piv
    for i, row in enumerate(reduced):
        assert [row.get(c, 0) for c in range(len(m[0]))] == [Fraction(int(sympy.numer(v)), int(sympy.denom(v))) for v in ref.row(i)]


@settings(max_examples=60)
@given(matrices())
def test_nullspace_is_kernel_of_right_size(m):
    ncols = len(m[0])
    ker = nullspace(m, ncols)
    assert len(ker) == ncols - rank(m)
    for v in ker:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in m)


@settings(max_examples=60)
@given(matrices(), st.lists(entries, min_size=5, max_size=5))
def test_min_norm_solution_is_orthogonal_to_kernel(m, x0):
    ncols = len(m[0])
    x0 = x0[:ncols]
    b = [sum(a * x for a, x in zip(row, x0)) for row in m]
    ids, k = min_norm_solver(m, ncols)
    x = [sum(kij * b[i] for kij, i in zip(krow, ids)) for krow in k]
    assert [sum(a * xi for a, xi in zip(row, x)) for row in m] == b
    for v in nullspace(m, ncols):
        assert sum(a * c for a, c in zip(v, x)) == 0


def test_solve_reports_inconsistency():
    assert solve([[1, 1], [2, 2]], [1, 3], 2) is None
    assert solve([[1, 1], [2, 2]], [1, 2], 2) == [1, 0]


def test_span_equal_and_products():
    assert span_equal([[1, 1, 0], [0, 1, 1]], [[1, 2, 1], [1, 0, -1]], 3)
    assert not span_equal([[1, 0, 0]], [[0, 1, 0]], 3)
    a = [[Fraction(1), Fraction(2)], [Fraction(0), Fraction(1)]]
    assert mat_mul(a, transpose(a)) == [[5, 2], [2, 1]]
