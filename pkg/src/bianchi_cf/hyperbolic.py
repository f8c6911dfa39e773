"""Upper half-space model of hyperbolic 3-space and the Bianchi group action.

Points are ``z + r j`` with ``z`` complex and ``r > 0``.  Group elements are
2x2 matrices over Z[w] taken modulo +-I.  Boundary points are complex numbers,
exact FieldElements, or the sentinel :data:`INF`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import mpmath

from .cfrac import Expansion, in_half_cell
from .ring import Discriminant, FieldElement, RingElement, as_disc, embed, nearest_lattice_point


class _Infinity:
    """The point at infinity of the boundary sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

REDUCTION_CAP = 10_000
HEMISPHERE_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class H3Point:
    z: complex
    r: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"height must be positive, got {self.r!r}")

    @property
    def height2(self) -> float:
        """|z|^2 + r^2, the squared Euclidean distance to the origin."""
        return abs(self.z) ** 2 + self.r**2


@dataclass(frozen=True)
class MobiusMap:
    """[[a, b], [c, d_entry]] over Z[w] with unit determinant, modulo +-I."""

    a: RingElement
    b: RingElement
    c: RingElement
    d_entry: RingElement
    d: Discriminant

    def __post_init__(self) -> None:
        det = self.det
        if not (det.m == 0 and det.n in (1, -1)):
            raise ValueError(f"determinant {det} is not +-1")

    @classmethod
    def of(cls, a, b, c, d_entry, d: int | Discriminant) -> MobiusMap:
        disc = as_disc(d)

        def ring(x):
            if isinstance(x, RingElement):
                return x
            return RingElement(int(x), 0, disc)

        return cls(ring(a), ring(b), ring(c), ring(d_entry), disc)

    @classmethod
    def identity(cls, d) -> MobiusMap:
        return cls.of(1, 0, 0, 1, d)

    @classmethod
    def S(cls, d) -> MobiusMap:
        return cls.of(0, 1, -1, 0, d)

    @classmethod
    def T(cls, q, d) -> MobiusMap:
        """Translation z -> z + q."""
        return cls.of(1, q, 0, 1, d)

    @classmethod
    def rotation(cls, d) -> MobiusMap:
        """diag(w, conj w); only in PSL_2 when w is a unit (d = 1, 3)."""
        disc = as_disc(d)
        w = RingElement(0, 1, disc)
        return cls(w, RingElement(0, 0, disc), RingElement(0, 0, disc), w.conjugate(), disc)

    @property
    def det(self) -> RingElement:
        return self.a * self.d_entry - self.b * self.c

    def entries(self) -> tuple[RingElement, RingElement, RingElement, RingElement]:
        return self.a, self.b, self.c, self.d_entry

    def __matmul__(self, other: MobiusMap) -> MobiusMap:
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return MobiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h, self.d)

    def inverse(self) -> MobiusMap:
        a, b, c, d = self.entries()
        s = self.det.n  # +-1, its own inverse
        return MobiusMap(d * s, -b * s, -c * s, a * s, self.d)

    def __neg__(self) -> MobiusMap:
        a, b, c, d = self.entries()
        return MobiusMap(-a, -b, -c, -d, self.d)

    def _canonical(self):
        ent = self.entries()
        first = next(x for x in ent if x)
        sign = 1 if (first.n, first.m) > (0, 0) else -1
        return tuple((x.n * sign, x.m * sign) for x in ent)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MobiusMap):
            return NotImplemented
        return self.d == other.d and self._canonical() == other._canonical()

    def __hash__(self) -> int:
        return hash((self.d.d, self._canonical()))

    def complex_entries(self) -> tuple[complex, complex, complex, complex]:
        return tuple(complex(x) for x in self.entries())

    def __repr__(self) -> str:
        a, b, c, d = self.entries()
        return f"MobiusMap([[{a}, {b}], [{c}, {d}]], d={self.d.d})"


ACT_PREC = 128


def act(g: MobiusMap, p: H3Point) -> H3Point:
    """Action of g on the upper half-space.

    Evaluated with ACT_PREC bits and rounded once: near a pole of g the
    denominator cz + d cancels badly in doubles.
    """
    with mpmath.workprec(ACT_PREC):
        a, b, c, d = (embed(x, ACT_PREC) for x in g.entries())
        z, r = mpmath.mpc(p.z), mpmath.mpf(p.r)
        czd = c * z + d
        r2 = r * r
        den = abs(czd) ** 2 + abs(c) ** 2 * r2
        zz = ((a * z + b) * mpmath.conj(czd) + a * mpmath.conj(c) * r2) / den
        return H3Point(complex(zz), float(r / den))


def act_boundary(g: MobiusMap, x, *, exact: bool = False):
    """Action on the boundary sphere.

    FieldElement input (or ``exact=True``) uses exact field arithmetic; complex
    input uses floats.  INF maps to a/c and a zero denominator gives INF.
    """
    if exact or isinstance(x, FieldElement):
        a, b, c, d = g.entries()
        if x is INF:
            return INF if not c else FieldElement.of(a, c)
        num, den = x * a + b, x * c + d
        if not den:
            return INF
        return num / den
    a, b, c, d = g.complex_entries()
    if x is INF:
        return INF if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return INF
    return (a * x + b) / den


def distance(p: H3Point, q: H3Point) -> float:
    """Hyperbolic distance; cosh(dist) = 1 + (|dz|^2 + dr^2) / (2 r1 r2)."""
    chord = math.sqrt(abs(p.z - q.z) ** 2 + (p.r - q.r) ** 2)
    return 2.0 * math.asinh(chord / (2.0 * math.sqrt(p.r * q.r)))


@dataclass(frozen=True)
class GeodesicLift:
    """Oriented geodesic from ``repelling`` to ``attracting`` (boundary points)."""

    attracting: object
    repelling: object
    d: Discriminant

    def __post_init__(self) -> None:
        if _same_point(self.attracting, self.repelling):
            raise ValueError("geodesic endpoints must differ")

    @property
    def is_vertical(self) -> bool:
        return self.attracting is INF or self.repelling is INF

    def float_endpoints(self) -> tuple:
        return _to_complex(self.attracting), _to_complex(self.repelling)

    def apex(self) -> float:
        """Largest height reached (half the endpoint distance); inf if vertical."""
        if self.is_vertical:
            return math.inf
        att, rep = self.float_endpoints()
        return abs(att - rep) / 2

    def mapped(self, g: MobiusMap) -> GeodesicLift:
        exact = isinstance(self.attracting, FieldElement) or isinstance(self.repelling, FieldElement)
        return GeodesicLift(
            act_boundary(g, self.attracting, exact=exact), act_boundary(g, self.repelling, exact=exact), self.d
        )


def _to_complex(x):
    if x is INF:
        return INF
    if isinstance(x, FieldElement):
        return complex(embed(x))
    return complex(x)


def _same_point(x, y) -> bool:
    if x is INF or y is INF:
        return x is y
    if isinstance(x, FieldElement) and isinstance(y, FieldElement):
        return x == y
    return _to_complex(x) == _to_complex(y)


def hemisphere_intersection(lift: GeodesicLift) -> H3Point:
    """Point where the lift crosses the unit hemisphere |z|^2 + r^2 = 1.

    Needs |attracting| < 1 < |repelling| (repelling may be INF).
    """
    beta, alpha = lift.attracting, lift.repelling
    if beta is INF:
        raise ValueError("attracting endpoint must be finite and inside the unit disk")
    beta = complex(beta)
    b2 = abs(beta) ** 2
    if not b2 < 1:
        raise ValueError(f"|attracting| = {math.sqrt(b2)} is not < 1")
    if alpha is INF:
        return H3Point(beta, math.sqrt(1 - b2))
    alpha = complex(alpha)
    a2 = abs(alpha) ** 2
    if not a2 > 1:
        raise ValueError(f"|repelling| = {math.sqrt(a2)} is not > 1")
    gap = a2 - b2
    r = math.sqrt((1 - b2) * (a2 - 1)) * abs(alpha - beta) / gap
    z = beta + (1 - b2) * (alpha - beta) / gap
    return H3Point(z, r)


# --- P(n, beta) -------------------------------------------------------------


def generator_product(expansion: Expansion, n: int) -> MobiusMap:
    """(T^{(-1)^{n-1} a_n} S) ... (T^{-a_2} S)(T^{a_1} S)."""
    disc = expansion.disc
    g = MobiusMap.identity(disc)
    S = MobiusMap.S(disc)
    for k in range(1, n + 1):
        a = expansion.digits[k - 1]
        step = MobiusMap.T(a if k % 2 else -a, disc) @ S
        g = step @ g
    return g


def p_matrix(expansion: Expansion, n: int) -> MobiusMap:
    """[[q_n, -p_n], [(-1)^{n-1} q_{n-1}, (-1)^n p_{n-1}]], checked against the generator word."""
    if not 0 <= n <= len(expansion):
        raise ValueError(f"n = {n} outside 0..{len(expansion)}")
    p_n, q_n = expansion.convergent(n)
    p_m, q_m = expansion.convergent(n - 1)
    sign = -1 if n % 2 else 1  # (-1)^n
    g = MobiusMap(q_n, -p_n, -sign * q_m, sign * p_m, expansion.disc)
    if g != generator_product(expansion, n):
        raise AssertionError(f"P({n}) differs from its generator product")
    return g


# --- reduction to the fundamental domain -------------------------------------


class Token(NamedTuple):
    """One generator: 'T' (translation by ``q``), 'S', or 'R' (unit rotation)."""

    name: str
    q: RingElement | None = None

    def matrix(self, d) -> MobiusMap:
        if self.name == "T":
            return MobiusMap.T(self.q, d)
        if self.name == "S":
            return MobiusMap.S(d)
        return MobiusMap.rotation(d)


def word_matrix(word, d) -> MobiusMap:
    """Matrix of a word; word[0] acts first."""
    g = MobiusMap.identity(d)
    for tok in word:
        g = tok.matrix(d) @ g
    return g


class Reduction(NamedTuple):
    point: H3Point
    word: tuple
    converged: bool


def in_fundamental_domain(p: H3Point, d, tol: float = 1e-10) -> bool:
    """Closed Bianchi domain: z in K_d (K'_d for d = 1, 3) and |z|^2 + r^2 >= 1."""
    return in_half_cell(p.z, d, tol=tol) and p.height2 >= 1 - tol


def _rotate(z: complex, disc: Discriminant) -> complex:
    # diag(w, conj w) acts by z -> w^2 z on the boundary and fixes heights
    w = disc.omega
    return w * w * z


def reduce_to_domain(p: H3Point, d, cap: int = REDUCTION_CAP) -> Reduction:
    """Move p into the closed fundamental domain by translations, rotation and S.

    Returns the reduced point, the generator word (first token acts first) and
    whether the loop finished before ``cap`` inversions.
    """
    disc = as_disc(d)
    z, r = complex(p.z), float(p.r)
    word = []
    best = (r, z, len(word))
    for _ in range(cap):
        q = nearest_lattice_point(z, disc)
        if q:
            z -= complex(q)
            word.append(Token("T", -q))
        if disc.d == 1 and z.real < 0:
            z = _rotate(z, disc)
            word.append(Token("R"))
        elif disc.d == 3:
            for _ in range(2):
                if z.imag * math.sqrt(3) >= abs(z.real) - 1e-15:
                    break
                z = _rotate(z, disc)
                word.append(Token("R"))
        h2 = abs(z) ** 2 + r * r
        if h2 >= 1 - HEMISPHERE_TOL:
            return Reduction(H3Point(z, r), tuple(word), True)
        # S: z + rj -> (-conj z + rj) / (|z|^2 + r^2)
        z, r = -z.conjugate() / h2, r / h2
        word.append(Token("S"))
        if r > best[0]:
            best = (r, z, len(word))
    r, z, k = best
    return Reduction(H3Point(z, r), tuple(word[:k]), False)


# --- geodesic flow ------------------------------------------------------------


def _position_parameter(lift: GeodesicLift, p: H3Point, tol: float):
    """Unit-speed time coordinate of p on the lift, with an on-geodesic check."""
    att, rep = lift.float_endpoints()
    if rep is INF:  # moving down towards att
        if abs(p.z - att) > tol * max(1.0, p.r):
            raise ValueError("basepoint is not on the geodesic")
        return -math.log(p.r)
    if att is INF:
        if abs(p.z - rep) > tol * max(1.0, p.r):
            raise ValueError("basepoint is not on the geodesic")
        return math.log(p.r)
    span = att - rep
    L = abs(span)
    # z = rep + s span,  r = L sqrt(s (1 - s)); solve s from the two coordinates
    s_lin = ((p.z - rep) / span).real
    dev = abs(p.z - (rep + s_lin * span))
    s = min(max(s_lin, 0.0), 1.0)
    if dev > tol * L or abs(p.r - L * math.sqrt(s * (1 - s))) > tol * L:
        raise ValueError("basepoint is not on the geodesic")
    # s = 1/(1 + e^{-2 tau}) and r = L / (2 cosh tau); near the apex invert s,
    # near the endpoints invert r, whichever is better conditioned
    c = L / (2 * p.r)
    if c < 1.25:
        s = min(max(s_lin, 1e-300), 1 - 1e-16)
        return 0.5 * math.log(s / (1 - s))
    tau = math.acosh(c)
    return tau if s_lin >= 0.5 else -tau


def geodesic_position(lift: GeodesicLift, basepoint: H3Point, t: float, tol: float = 1e-9) -> H3Point:
    """Point at signed distance t from ``basepoint``, moving toward the attracting end.

    Non-vertical lifts use the half-circle parametrization
    z = rep + s (att - rep), r = |att - rep| sqrt(s (1 - s)) with the arclength
    substitution s = 1 / (1 + e^{-2 tau}), which makes tau a unit-speed time:
    then sqrt(s (1 - s)) = 1 / (2 cosh tau).
    """
    tau0 = _position_parameter(lift, basepoint, tol)
    att, rep = lift.float_endpoints()
    tau = tau0 + t
    if rep is INF:
        return H3Point(att, math.exp(-tau))
    if att is INF:
        return H3Point(rep, math.exp(tau))
    span = att - rep
    L = abs(span)
    r = L / (2 * math.cosh(tau))
    if tau <= 0:
        z = rep + span / (1 + math.exp(-2 * tau))
    else:
        z = att - span / (1 + math.exp(2 * tau))
    return H3Point(z, r)


@dataclass(frozen=True)
class FlowRecord:
    max_log_height: float
    steps: int
    reductions: int
    converged: bool


def flow_max_height(beta, T: float, step: float = 0.5) -> FlowRecord:
    """Largest log-height of the reduced point along t -> beta + e^{-t} j, 0 <= t <= T.

    The point is flowed ``step`` at a time along the current lift and then
    reduced into the fundamental domain.  The lift's endpoints are carried
    exactly (FieldElement arithmetic through each reduction word), so the
    geodesic never drifts; only the float position on it is re-projected.
    Within each step the height maximum on the current lift is taken in
    closed form.
    """
    if not isinstance(beta, FieldElement):
        raise TypeError("flow_max_height needs an exact beta")
    disc = beta.disc
    lift = GeodesicLift(beta, INF, disc)
    p = H3Point(complex(embed(beta)), 1.0)
    best = 0.0
    t = 0.0
    steps = reductions = 0
    converged = True
    while t < T:
        dt = min(step, T - t)
        best = max(best, math.log(_segment_max_height(lift, p, dt)))
        p = geodesic_position(lift, p, dt)
        t += dt
        steps += 1
        red = reduce_to_domain(p, disc)
        converged &= red.converged
        if red.word:
            reductions += 1
            lift = lift.mapped(word_matrix(red.word, disc))
            # snap the float point back onto the exactly known lift
            p = geodesic_position(lift, red.point, 0.0, tol=1e-6)
        best = max(best, math.log(p.r))
    return FlowRecord(best, steps, reductions, converged)


def _segment_max_height(lift: GeodesicLift, p: H3Point, dt: float) -> float:
    att, rep = lift.float_endpoints()
    if rep is INF:
        return p.r
    if att is INF:
        return p.r * math.exp(dt)
    tau0 = _position_parameter(lift, p, 1e-6)
    L = abs(att - rep)
    if tau0 <= 0 <= tau0 + dt:
        return L / 2
    return max(L / (2 * math.cosh(tau0)), L / (2 * math.cosh(tau0 + dt)))
