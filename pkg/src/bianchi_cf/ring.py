"""Exact arithmetic in the Euclidean imaginary quadratic rings Z[w] and their fields.

Elements of Z[w] are stored as integer coordinates (n, m) meaning n + m*w, where
w = sqrt(-d) for d = 1, 2 and w = (-1 + sqrt(-d))/2 for d = 3, 7, 11.
Coordinates may be Python ints or gmpy2.mpz; both behave identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

EUCLIDEAN_D = (1, 2, 3, 7, 11)


@dataclass(frozen=True)
class Discriminant:
    d: int

    def __post_init__(self) -> None:
        if self.d not in EUCLIDEAN_D:
            raise ValueError(f"d must be one of {EUCLIDEAN_D}, got {self.d!r}")

    @property
    def is_3mod4(self) -> bool:
        return self.d % 4 == 3

    @property
    def k(self) -> int:
        """Constant term of the norm form, (d+1)/4 when d = 3 mod 4."""
        return (self.d + 1) // 4

    @property
    def omega(self) -> complex:
        if self.is_3mod4:
            return complex(-0.5, math.sqrt(self.d) / 2)
        return complex(0.0, math.sqrt(self.d))

    @property
    def row_height(self) -> float:
        """Imaginary part of w: vertical spacing between lattice rows."""
        return self.omega.imag

    @property
    def covering_radius(self) -> float:
        """sup |z| over the Dirichlet cell K_d (distance from 0 to a vertex)."""
        if self.is_3mod4:
            return (self.d + 1) / (4 * math.sqrt(self.d))
        return math.sqrt(1 + self.d) / 2

    def cell_area(self) -> float:
        """Area of K_d, equal to the covolume of the lattice."""
        return self.row_height

    def __int__(self) -> int:
        return self.d

    def __repr__(self) -> str:
        return f"Discriminant({self.d})"


@lru_cache(maxsize=None)
def _disc(d: int) -> Discriminant:
    return Discriminant(d)


def as_disc(d: int | Discriminant) -> Discriminant:
    if isinstance(d, Discriminant):
        return d
    return _disc(int(d))


# --- coordinate-level helpers (tuples (n, m)); used by the hot loops ---------


def qnorm(n, m, disc: Discriminant):
    """Norm of n + m*w as an integer."""
    if disc.is_3mod4:
        return n * n - n * m + disc.k * m * m
    return n * n + disc.d * m * m


def qmul(a_n, a_m, b_n, b_m, disc: Discriminant):
    bb = a_m * b_m
    if disc.is_3mod4:
        return a_n * b_n - disc.k * bb, a_n * b_m + a_m * b_n - bb
    return a_n * b_n - disc.d * bb, a_n * b_m + a_m * b_n


def qconj(n, m, disc: Discriminant):
    if disc.is_3mod4:
        return n - m, -m
    return n, -m


def coords_of(z: complex, disc: Discriminant) -> tuple[float, float]:
    """Real coordinates (s, t) with z = s + t*w."""
    t = z.imag / disc.row_height
    if disc.is_3mod4:
        return z.real + t / 2, t
    return z.real, t


def _round_half_up(p, q):
    """round(p/q) for integers, q > 0, halves rounded up."""
    return (2 * p + q) // (2 * q)


@dataclass(frozen=True, slots=True)
class RingElement:
    n: int
    m: int
    disc: Discriminant

    @classmethod
    def of(cls, n, m, d: int | Discriminant) -> RingElement:
        return cls(n, m, as_disc(d))

    def _coerce(self, other) -> RingElement | None:
        if isinstance(other, RingElement):
            if other.disc != self.disc:
                raise ValueError("mixing elements of different rings")
            return other
        if isinstance(other, int):
            return RingElement(other, 0, self.disc)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RingElement(self.n + o.n, self.m + o.m, self.disc)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RingElement(self.n - o.n, self.m - o.m, self.disc)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RingElement(*qmul(self.n, self.m, o.n, o.m, self.disc), self.disc)

    __rmul__ = __mul__

    def __neg__(self) -> RingElement:
        return RingElement(-self.n, -self.m, self.disc)

    def __pow__(self, e: int) -> RingElement:
        if e < 0:
            raise ValueError("negative powers live in the field")
        result = RingElement(1, 0, self.disc)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, RingElement):
            return self.n == other.n and self.m == other.m and self.disc == other.disc
        if isinstance(other, int):
            return self.m == 0 and self.n == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((int(self.n), int(self.m), self.disc.d))

    def __bool__(self) -> bool:
        return bool(self.n) or bool(self.m)

    def conjugate(self) -> RingElement:
        return RingElement(*qconj(self.n, self.m, self.disc), self.disc)

    def norm(self) -> int:
        return qnorm(self.n, self.m, self.disc)

    def is_unit(self) -> bool:
        return self.norm() == 1

    def __complex__(self) -> complex:
        return embed(self)

    def __repr__(self) -> str:
        return f"RingElement({self.n}, {self.m}, d={self.disc.d})"

    def __str__(self) -> str:
        sym = "i" if self.disc.d == 1 else "w"
        if not self.m:
            return str(self.n)
        if not self.n:
            return f"{self.m}{sym}"
        return f"{self.n}{self.m:+}{sym}"


def norm(x: RingElement) -> int:
    return x.norm()


def gcd3(a, b, c):
    return math.gcd(math.gcd(int(a), int(b)), int(c))


@dataclass(frozen=True, slots=True)
class FieldElement:
    """Element of Q(sqrt(-d)) as numerator / denominator.

    Canonical form: the denominator is a positive rational integer and the
    three integers (num.n, num.m, den) are coprime.  The form is unique, so
    equality and hashing compare fields directly.
    """

    num: RingElement
    den: RingElement

    @classmethod
    def of(cls, num: RingElement, den: RingElement | int = 1) -> FieldElement:
        disc = num.disc
        if isinstance(den, int):
            den = RingElement(den, 0, disc)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if den.m:
            num = num * den.conjugate()
            den_int = den.norm()
        else:
            den_int = den.n
        n, m = num.n, num.m
        if den_int < 0:
            n, m, den_int = -n, -m, -den_int
        g = gcd3(n, m, den_int)
        if g > 1:
            n, m, den_int = n // g, m // g, den_int // g
        return cls(RingElement(n, m, disc), RingElement(den_int, 0, disc))

    @classmethod
    def from_ints(cls, n, m, den, d: int | Discriminant) -> FieldElement:
        return cls.of(RingElement(n, m, as_disc(d)), den)

    @classmethod
    def from_coords(cls, s, t, d: int | Discriminant) -> FieldElement:
        """s + t*w for rationals s, t (anything Fraction accepts)."""
        s, t = Fraction(s), Fraction(t)
        den = s.denominator * t.denominator // math.gcd(s.denominator, t.denominator)
        return cls.from_ints(s.numerator * (den // s.denominator), t.numerator * (den // t.denominator), den, d)

    @property
    def disc(self) -> Discriminant:
        return self.num.disc

    def reduce(self) -> FieldElement:
        return FieldElement.of(self.num, self.den)

    def _coerce(self, other) -> FieldElement | None:
        if isinstance(other, FieldElement):
            if other.disc != self.disc:
                raise ValueError("mixing elements of different fields")
            return other
        if isinstance(other, RingElement):
            return FieldElement.of(other, 1)
        if isinstance(other, int):
            return FieldElement.of(RingElement(other, 0, self.disc), 1)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FieldElement.of(self.num * o.den.n + o.num * self.den.n, self.den.n * o.den.n)

    __radd__ = __add__

    def __neg__(self) -> FieldElement:
        return FieldElement(-self.num, self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FieldElement.of(self.num * o.num, self.den.n * o.den.n)

    __rmul__ = __mul__

    def invert(self) -> FieldElement:
        if not self.num:
            raise ZeroDivisionError("inverting zero")
        return FieldElement.of(self.den * self.num.conjugate(), self.num.norm())

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.invert()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.invert()

    def conjugate(self) -> FieldElement:
        return FieldElement(self.num.conjugate(), self.den)

    def norm(self) -> Fraction:
        return Fraction(int(self.num.norm()), int(self.den.n) ** 2)

    def coords(self) -> tuple[Fraction, Fraction]:
        """Exact (s, t) with x = s + t*w."""
        return Fraction(int(self.num.n), int(self.den.n)), Fraction(int(self.num.m), int(self.den.n))

    def is_integral(self) -> bool:
        return self.den.n == 1

    def __bool__(self) -> bool:
        return bool(self.num)

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.num == other.num and self.den == other.den
        o = self._coerce(other) if isinstance(other, (int, RingElement)) else None
        if o is None:
            return NotImplemented
        return self == o

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __complex__(self) -> complex:
        return embed(self)

    def __repr__(self) -> str:
        return f"FieldElement(({self.num}) / {self.den.n}, d={self.disc.d})"


def embed(x: RingElement | FieldElement | int, prec: int | None = None):
    """Map into C: a Python complex, or an mpmath mpc with ``prec`` mantissa bits."""
    if isinstance(x, int):
        return complex(x) if prec is None else mpmath.mpc(x)
    if isinstance(x, RingElement):
        n, m, den = x.n, x.m, 1
    else:
        n, m, den = x.num.n, x.num.m, x.den.n
    disc = x.disc
    if prec is None:
        # int true division is correctly rounded, so huge coordinates are fine
        if disc.is_3mod4:
            re = int(2 * n - m) / int(2 * den)
        else:
            re = int(n) / int(den)
        if m == 0:
            return complex(re, 0.0)
        return complex(re, (int(m) / int(den)) * disc.row_height)
    with mpmath.workprec(prec):
        sq = mpmath.sqrt(disc.d)
        if disc.is_3mod4:
            re = mpmath.mpf(int(2 * n - m)) / (2 * int(den))
            im = mpmath.mpf(int(m)) * sq / (2 * int(den))
        else:
            re = mpmath.mpf(int(n)) / int(den)
            im = mpmath.mpf(int(m)) * sq / int(den)
        return mpmath.mpc(re, im)


def _float_candidates(s: float, t: float, disc: Discriminant):
    m0 = math.floor(t + 0.5)
    for am in (m0 - 1, m0, m0 + 1):
        x = s - (t - am) / 2 if disc.is_3mod4 else s
        n0 = math.floor(x + 0.5)
        for an in (n0 - 1, n0, n0 + 1):
            yield an, am


def _float_dist2(ds: float, dt: float, disc: Discriminant) -> float:
    if disc.is_3mod4:
        return ds * ds - ds * dt + disc.k * dt * dt
    return ds * ds + disc.d * dt * dt


def nearest_lattice_point(z, d: int | Discriminant | None = None) -> RingElement:
    """Closest element of Z[w] to z; ties go to the smallest (norm, n, m).

    ``z`` may be a complex float or a FieldElement (exact search).
    """
    if isinstance(z, FieldElement):
        return _nearest_exact(z.num.n, z.num.m, z.den.n, z.disc)
    disc = as_disc(d)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite point {z!r}")
    s, t = coords_of(z, disc)
    best = None
    for an, am in _float_candidates(s, t, disc):
        key = (_float_dist2(s - an, t - am, disc), qnorm(an, am, disc), an, am)
        if best is None or key < best:
            best = key
    return RingElement(best[2], best[3], disc)


def _exact_candidates(n, m, den, disc: Discriminant):
    m0 = _round_half_up(m, den)
    for am in (m0 - 1, m0, m0 + 1):
        if disc.is_3mod4:
            # real part of (x - am*w) in units of 1/(2 den)
            n0 = _round_half_up(2 * n - m + am * den, 2 * den)
        else:
            n0 = _round_half_up(n, den)
        for an in (n0 - 1, n0, n0 + 1):
            yield an, am


def _nearest_exact(n, m, den, disc: Discriminant) -> RingElement:
    best = None
    for an, am in _exact_candidates(n, m, den, disc):
        key = (qnorm(n - an * den, m - am * den, disc), qnorm(an, am, disc), an, am)
        if best is None or key < best:
            best = key
    return RingElement(int(best[2]), int(best[3]), disc)


def lattice_points_within(z: complex, radius: float, d: int | Discriminant):
    """All a in Z[w] with |z - a| <= radius (brute-force enumeration)."""
    disc = as_disc(d)
    h = disc.row_height
    out = []
    for am in range(math.floor((z.imag - radius) / h) - 1, math.ceil((z.imag + radius) / h) + 2):
        shift = -am / 2 if disc.is_3mod4 else 0.0
        lo = math.floor(z.real - radius - shift) - 1
        hi = math.ceil(z.real + radius - shift) + 1
        for an in range(lo, hi + 1):
            a = RingElement(an, am, disc)
            if abs(z - embed(a)) <= radius:
                out.append(a)
    return out
