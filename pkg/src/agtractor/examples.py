"""Built-in chart examples and seeded random generators."""

from __future__ import annotations

import random
from dataclasses import replace
from fractions import Fraction

import numpy as np

from .poly import Poly, monomials_upto
from .tensor import IndexedTensor, Slot
from .weyl import (
    RHO_SLOTS,
    ChartWeylData,
    apply_upsilon,
    flat_data,
    normalize_rho,
    shear_data,
    weylize,
)

__all__ = [
    "flat_data",
    "flagship_shears",
    "flagship",
    "constant_gamma",
    "constant_rho",
    "random_rational",
    "random_rational_point",
    "random_poly",
    "random_upsilon",
    "random_section",
    "flat_solution",
]


def flagship_shears(n: int) -> list:
    """Two unipotent shears giving harmonic torsion with tr(i_tau tau) != 0.

    Rows and columns are flat pair indices; the entries are coordinates.
    """
    nv = 2 * n
    return [(0, 2, Poly.var(nv, nv - 1)), (nv - 1, nv - 2, Poly.var(nv, n))]


def flagship(n: int = 3) -> ChartWeylData:
    """Sheared soldering, weylized and normalized."""
    data = shear_data(n, flagship_shears(n), label=f"flagship_n{n}")
    return normalize_rho(weylize(data))


def constant_gamma(n: int, seed: int = 0) -> ChartWeylData:
    """Identity frame with a constant torsion-free Gamma pair, normalized.

    The Gamma pair is the change of the flat connection by a constant
    one-form, so the geometry is the flat model in another Weyl structure.
    """
    ups = random_upsilon(n, random.Random(seed), degree=0)
    data, _ = apply_upsilon(flat_data(n), ups)
    data = data.with_rho(IndexedTensor(n, RHO_SLOTS))
    return normalize_rho(replace(data, label=f"constant_gamma_n{n}"))


def constant_rho(n: int, seed: int = 0) -> ChartWeylData:
    """Flat frame and connection with a constant random Rho (not normal)."""
    rng = random.Random(seed)
    nv = 2 * n
    rho = IndexedTensor.from_function(n, RHO_SLOTS, lambda *i: Poly.const(nv, random_rational(rng)))
    return replace(flat_data(n).with_rho(rho), label=f"constant_rho_n{n}")


def random_rational(rng: random.Random, bound: int = 9) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_poly(nvars: int, rng: random.Random, degree: int, density: float = 0.3, bound: int = 9) -> Poly:
    terms = {}
    for m in monomials_upto(nvars, degree):
        if rng.random() < density:
            terms[m] = random_rational(rng, bound)
    return Poly(nvars, terms)


def random_upsilon(n: int, rng: random.Random, degree: int = 2, density: float = 0.3) -> IndexedTensor:
    nv = 2 * n
    comps = np.empty((2, n), dtype=object)
    for idx in np.ndindex(2, n):
        comps[idx] = random_poly(nv, rng, degree, density)
    return IndexedTensor(n, (Slot.EU, Slot.FD), comps)


def random_section(n: int, bundle: str, rng: random.Random, degree: int = 2, density: float = 0.3) -> IndexedTensor:
    from .bgg import BUNDLES

    slots = BUNDLES[bundle]
    nv = 2 * n
    comps = np.empty(slots[0].dim(n), dtype=object)
    for i in range(comps.shape[0]):
        comps[i] = random_poly(nv, rng, degree, density)
    return IndexedTensor(n, slots, comps)


def flat_solution(n: int, bundle: str, a, b) -> IndexedTensor:
    """eta^{B'} = a^{B'} + x^{B'}_B b^B, or phi_B = a_B + x^{I'}_B b_{I'}."""
    nv = 2 * n
    if bundle == "tractor":
        comps = [
            Poly.const(nv, a[bp]) + sum((Poly.var(nv, B * n + bp, b[B]) for B in range(2)), Poly.zero(nv))
            for bp in range(n)
        ]
        return IndexedTensor(n, (Slot.FU,), np.array(comps, dtype=object))
    comps = [
        Poly.const(nv, a[B]) + sum((Poly.var(nv, B * n + ip, b[ip]) for ip in range(n)), Poly.zero(nv))
        for B in range(2)
    ]
    return IndexedTensor(n, (Slot.ED,), np.array(comps, dtype=object))


def random_rational_point(nvars: int, rng: random.Random, bound: int = 9) -> tuple:
    return tuple(random_rational(rng, bound) for _ in range(nvars))
