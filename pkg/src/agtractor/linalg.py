"""Exact linear algebra over the rationals.

Matrices are lists of rows of :class:`~fractions.Fraction`.  Sparse systems
are given as lists of ``{column: coefficient}`` dicts; elimination keeps them
sparse.  Everything here is deterministic: pivots are chosen by lowest column
then earliest row.
"""

from __future__ import annotations

from fractions import Fraction

from .poly import to_fraction

__all__ = [
    "rref",
    "rank",
    "nullspace",
    "solve",
    "min_norm_solver",
    "independent_rows",
    "mat_mul",
    "mat_vec",
    "transpose",
    "span_equal",
]


def _frac_rows(rows):
    return [[to_fraction(v) for v in row] for row in rows]


def rref(rows, ncols: int | None = None):
    """Reduced row echelon form of a sparse or dense matrix.

    Returns ``(reduced_rows, pivots)`` where each reduced row is a dict
    ``{col: value}`` with value 1 at its pivot, and ``pivots`` lists pivot
    columns in increasing order.
    """
    work = []
    for row in rows:
        if isinstance(row, dict):
            r = {c: to_fraction(v) for c, v in row.items() if v}
        else:
            r = {c: to_fraction(v) for c, v in enumerate(row) if v}
        if r:
            work.append(r)

    pivot_rows: dict[int, dict] = {}
    for r in work:
        r = _reduce(r, pivot_rows)
        if not r:
            continue
        col = min(r)
        inv = 1 / r[col]
        r = {c: v * inv for c, v in r.items()}
        pivot_rows[col] = r
    pivots = sorted(pivot_rows)
    # back-substitute so that every pivot column is clear in other rows
    for col in reversed(pivots):
        prow = pivot_rows[col]
        for other in pivots:
            if other == col:
                continue
            orow = pivot_rows[other]
            f = orow.get(col)
            if f:
                for c, v in prow.items():
                    nv = orow.get(c, 0) - f * v
                    if nv:
                        orow[c] = nv
                    else:
                        orow.pop(c, None)
    return [pivot_rows[c] for c in pivots], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows, ncols: int) -> list[list[Fraction]]:
    """Basis of the right kernel, one vector per free column (ascending)."""
    reduced, pivots = rref(rows)
    pivset = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for prow, pc in zip(reduced, pivots):
            c = prow.get(free)
            if c:
                v[pc] = -c
        basis.append(v)
    return basis


def solve(rows, rhs, ncols: int):
    """One exact solution of ``rows @ x = rhs`` (free variables set to 0).

    Returns ``None`` when the system is inconsistent.
    """
    aug = []
    for row, b in zip(rows, rhs):
        r = dict(row) if isinstance(row, dict) else {c: v for c, v in enumerate(row) if v}
        b = to_fraction(b)
        if b:
            r[ncols] = b
        aug.append(r)
    reduced, pivots = rref(aug)
    if pivots and pivots[-1] == ncols:
        return None
    x = [Fraction(0)] * ncols
    for prow, pc in zip(reduced, pivots):
        x[pc] = prow.get(ncols, Fraction(0))
    return x


def _reduce(row: dict, pivot_rows: dict) -> dict:
    r = dict(row)
    while r:
        col = min(r)
        prow = pivot_rows.get(col)
        if prow is None:
            break
        f = r[col]
        for c, v in prow.items():
            nv = r.get(c, 0) - f * v
            if nv:
                r[c] = nv
            else:
                r.pop(c, None)
    return r


def independent_rows(rows) -> list[int]:
    """Indices of a maximal independent subset of rows, earliest first."""
    chosen = []
    pivot_rows: dict[int, dict] = {}
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            row = {c: to_fraction(v) for c, v in enumerate(row) if v}
        r = _reduce(row, pivot_rows)
        if r:
            col = min(r)
            inv = 1 / r[col]
            pivot_rows[col] = {c: v * inv for c, v in r.items()}
            chosen.append(i)
    return chosen


def transpose(m):
    return [list(col) for col in zip(*m)]


def mat_mul(a, b):
    """Dense product that skips zero entries on both sides."""
    ncols = len(b[0]) if b else 0
    b_sparse = [[(j, v) for j, v in enumerate(row) if v] for row in b]
    out = []
    for row in a:
        acc = [Fraction(0)] * ncols
        for k, x in enumerate(row):
            if x:
                for j, v in b_sparse[k]:
                    acc[j] += x * v
        out.append(acc)
    return out


def mat_vec(a, v):
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a]


def _inverse(m):
    k = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(m)]
    reduced, pivots = rref(aug)
    if pivots[:k] != list(range(k)):
        raise ZeroDivisionError("singular matrix")
    return [[r.get(k + j, Fraction(0)) for j in range(k)] for r in reduced]


def min_norm_solver(dense_rows, ncols: int):
    """Precompute the minimum-norm right inverse of a consistent system.

    Returns ``(row_ids, K)``: for any right-hand side ``b`` in the column space,
    ``x = K @ b[row_ids]`` is the solution of least Euclidean norm.
    """
    rows = _frac_rows(dense_rows)
    ids = independent_rows(rows)
    mr = [rows[i] for i in ids]
    gram = mat_mul(mr, transpose(mr))
    k = mat_mul(transpose(mr), _inverse(gram))
    return ids, k


def span_equal(a, b, ncols: int) -> bool:
    """Whether two lists of vectors span the same subspace."""
    ra = rref(a)[0]
    rb = rref(b)[0]
    norm = lambda rows: [sorted(r.items()) for r in rows]
    return norm(ra) == norm(rb)
