import cmath
import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bianchi_cf.ring import (
    EUCLIDEAN_D,
    FieldElement,
    RingElement,
    as_disc,
    embed,
    lattice_points_within,
    nearest_lattice_point,
)

ints = st.integers(-10**30, 10**30)
small = st.integers(-50, 50)


def omega_hp(d):
    with mpmath.workdps(40):
        s = mpmath.sqrt(d)
        return mpmath.mpc(0, s) if d in (1, 2) else mpmath.mpc(-0.5, s / 2)


@pytest.mark.parametrize(
    "d, n, m, expected",
    [(1, 2, 3, 2 + 3j), (3, 1, 1, 0.5 + 0.8660254037844386j), (2, 0, 0, 0j), (11, 0, 0, 0j)],
)
def test_embed_examples(d, n, m, expected):
    assert cmath.isclose(embed(RingElement(n, m, as_disc(d))), expected, abs_tol=1e-15)


@pytest.mark.parametrize("d", EUCLIDEAN_D)
def test_embed_matches_high_precision(d):
    x = RingElement(7, -4, as_disc(d))
    ref = complex(7 + (-4) * omega_hp(d))
    assert cmath.isclose(embed(x), ref, rel_tol=1e-15)
    hp = embed(x, prec=200)
    with mpmath.workprec(200):
        assert abs(hp - (7 - 4 * omega_hp(d))) < mpmath.mpf(2) ** -120


@pytest.mark.parametrize("d, n, m, expected", [(1, 2, 3, 13), (3, 1, 1, 1), (11, 0, 1, 3), (2, 1, 1, 3), (7, 1, 1, 2)])
def test_norm_examples(d, n, m, expected):
    assert RingElement(n, m, as_disc(d)).norm() == expected


@pytest.mark.parametrize("d", EUCLIDEAN_D)
@given(n=small, m=small)
def test_norm_is_squared_modulus(d, n, m):
    x = RingElement(n, m, as_disc(d))
    assert x.norm() == round(abs(embed(x)) ** 2)
    assert x * x.conjugate() == RingElement(x.norm(), 0, x.disc)


@pytest.mark.parametrize("d", EUCLIDEAN_D)
@given(a=st.tuples(ints, ints), b=st.tuples(ints, ints))
def test_norm_multiplicative(d, a, b):
    disc = as_disc(d)
    x, y = RingElement(*a, disc), RingElement(*b, disc)
    assert (x * y).norm() == x.norm() * y.norm()


@pytest.mark.parametrize(
    "d, z, expected",
    [(1, 0.7 + 0.6j, (1, 1)), (3, 0.5 + 0.5j, (1, 1)), (1, 1 - 1.5j, (1, -1))],
)
def test_nearest_examples(d, z, expected):
    q = nearest_lattice_point(z, d)
    assert (q.n, q.m) == expected


@pytest.mark.parametrize("d", EUCLIDEAN_D)
def test_nearest_against_exhaustive_search(d):
    rng = random.Random(d)
    disc = as_disc(d)
    for _ in range(300):
        z = complex(rng.uniform(-20, 20), rng.uniform(-20, 20))
        q = nearest_lattice_point(z, disc)
        best = min(abs(z - complex(p)) for p in lattice_points_within(z, 2.0, disc))
        assert abs(z - complex(q)) <= best + 1e-12


@pytest.mark.parametrize("d", EUCLIDEAN_D)
def test_covering_radius_and_area(d):
    disc = as_disc(d)
    # the farthest point of the cell from 0 is at distance covering_radius
    w = complex(disc.omega)
    worst = 0.0
    for i in range(41):
        for j in range(41):
            z = (i / 40 - 0.5) + (j / 40 - 0.5) * w
            q = nearest_lattice_point(z, disc)
            worst = max(worst, abs(z - complex(q)))
    assert worst <= disc.covering_radius + 1e-12
    assert disc.cell_area() == pytest.approx(abs(w.imag))


def test_field_invert_example():
    x = FieldElement.from_coords(Fraction(3, 10), Fraction(1, 5), 1)
    assert x.invert() == FieldElement.from_ints(30, -20, 13, 1)


def test_field_division_by_zero():
    zero = FieldElement.from_coords(0, 0, 1)
    with pytest.raises(ZeroDivisionError):
        zero.invert()
    with pytest.raises(ZeroDivisionError):
        FieldElement.from_ints(1, 0, 0, 2)


fractions = st.fractions(max_denominator=10**12).filter(lambda f: abs(f) < 10**6)


@pytest.mark.parametrize("d", EUCLIDEAN_D)
@given(s=fractions, t=fractions, u=fractions, v=fractions)
def test_field_axioms(d, s, t, u, v):
    x = FieldElement.from_coords(s, t, d)
    y = FieldElement.from_coords(u, v, d)
    assert x.conjugate().conjugate() == x
    assert x + y - y == x
    assert -(-x) == x
    if x:
        assert x * x.invert() == FieldElement.from_coords(1, 0, d)
        assert (y / x) * x == y
    assert (x * y).norm() == x.norm() * y.norm()
    assert x.coords() == (s, t)
    assert complex(x * y) == pytest.approx(complex(x) * complex(y), rel=1e-9, abs=1e-9)


def test_canonical_form_unique():
    a = FieldElement.of(RingElement(6, 4, as_disc(1)), 4)
    b = FieldElement.of(RingElement(3, 2, as_disc(1)), 2)
    c = FieldElement.of(RingElement(-3, -2, as_disc(1)), -2)
    assert a == b == c and hash(a) == hash(b) == hash(c)
    assert (a.num.n, a.num.m, a.den.n) == (3, 2, 2)


def test_invalid_discriminant():
    with pytest.raises(ValueError):
        as_disc(5)


def test_ring_arithmetic_identities():
    disc = as_disc(7)
    w = RingElement(0, 1, disc)
    # w satisfies w^2 + w + (d + 1)/4 = 0
    assert w * w + w + RingElement(2, 0, disc) == RingElement(0, 0, disc)
    assert math.isclose(abs(complex(w)) ** 2, 2.0)
