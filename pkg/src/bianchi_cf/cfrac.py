"""Nearest-integer continued fractions over Z[w].

The exact engine never builds FieldElements inside its loop.  The current tail
G^n(beta) is held as a pair of ring elements (u, v) with G^n(beta) = v/u, and a
step is one division of the Euclidean algorithm:

    a = nearest(u/v),   (u, v) <- (v, u - a*v).

Digits are chosen from a float estimate of u/v whenever the estimate sits
safely inside a Voronoi cell; otherwise all candidates are compared with exact
integer norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from ._kernels import EPS, digit_batch
from .ring import (
    Discriminant,
    FieldElement,
    RingElement,
    as_disc,
    coords_of,
    embed,
    nearest_lattice_point,
    qconj,
    qmul,
    qnorm,
    _exact_candidates,
    _float_candidates,
    _float_dist2,
)

mpz = gmpy2.mpz

FLOAT_CELL_TOL = 1e-9


class TerminatedExpansion(ZeroDivisionError):
    """Raised when a Gauss step is asked to invert 0 (rational endpoint reached)."""


class PrecisionLoss(ArithmeticError):
    pass


# --- fundamental cells ------------------------------------------------------


def in_cell(z: complex, d: int | Discriminant, *, closed: bool = False, tol: float = 0.0) -> bool:
    """Membership in K_d (strict inequalities) or its closure widened by ``tol``."""
    disc = as_disc(d)
    z = complex(z)
    x, y = abs(z.real), abs(z.imag)
    sq = math.sqrt(disc.d)
    if disc.is_3mod4:
        bound = (disc.d + 1) / 4
        checks = ((x, 0.5), (x + y * sq, bound))  # |x +- y sqrt d| maximised by x + |y| sqrt d
    else:
        checks = ((x, 0.5), (y, sq / 2))
    if closed:
        return all(v <= b + tol for v, b in checks)
    return all(v < b for v, b in checks)


def in_closed_cell_exact(x: FieldElement) -> bool:
    """Exact test of x in closure(K_d)."""
    return _pair_in_closed_cell(x.num.n, x.num.m, x.den.n, x.disc)


def _pair_in_closed_cell(n, m, den, disc: Discriminant) -> bool:
    # den > 0; point is (n + m w)/den
    if disc.is_3mod4:
        two_x = 2 * n - m  # 2*den*Re
        if abs(two_x) > den:
            return False
        # y*sqrt(d) = m*d/(2 den); need |x| + |y| sqrt(d) <= (d+1)/4
        return abs(two_x) + abs(m) * disc.d <= (disc.d + 1) // 2 * den
    return 2 * abs(n) <= den and 2 * abs(m) <= den


def in_half_cell(z: complex, d: int | Discriminant, *, tol: float = 0.0) -> bool:
    """Closure of the reduced cell K'_d used by the Bianchi domains for d = 1, 3.

    K'_1 = {0 <= x <= 1/2, |y| <= 1/2}; K'_3 = {z in K_3 : arg z in [pi/6, 5pi/6]}.
    For other d this is the closed K_d.
    """
    disc = as_disc(d)
    z = complex(z)
    if not in_cell(z, disc, closed=True, tol=tol):
        return False
    if disc.d == 1:
        return z.real >= -tol
    if disc.d == 3:
        # arg in [pi/6, 5pi/6]  <=>  y >= |x| / sqrt(3)
        return z.imag * math.sqrt(3) >= abs(z.real) - tol
    return True


# --- Gauss map --------------------------------------------------------------


def gauss_step(z, d: int | Discriminant | None = None):
    """One step of the Gauss map: returns (digit, 1/z - digit).

    Exact for FieldElement input, floating for complex input.
    """
    if isinstance(z, FieldElement):
        if not z:
            raise TerminatedExpansion("G(0) is undefined: expansion has terminated")
        w = z.invert()
        a = nearest_lattice_point(w)
        return a, w - a
    disc = as_disc(d)
    z = complex(z)
    if z == 0:
        raise TerminatedExpansion("G(0) is undefined: expansion has terminated")
    w = 1 / z
    a = nearest_lattice_point(w, disc)
    return a, w - embed(a)


def _to_float_pair(un, um, vn, vm):
    """Scale four integers together and return floats with ~60-bit precision."""
    bl = max(abs(vn).bit_length(), abs(vm).bit_length())
    e = bl - 62
    if e > 0:
        un, um, vn, vm = un >> e, um >> e, vn >> e, vm >> e
    return float(un), float(um), float(vn), float(vm)


def _cell_slack(ds: float, dt: float, disc: Discriminant) -> float:
    """Euclidean distance from the offset s + t*w to the boundary of K_d (negative outside)."""
    if disc.is_3mod4:
        x = ds - dt / 2
        ysq = dt * disc.d / 2  # y * sqrt(d)
        b = (disc.d + 1) / 4
        return min(0.5 - abs(x), (b - abs(x) - abs(ysq)) / math.sqrt(1 + disc.d))
    return min(0.5 - abs(ds), (0.5 - abs(dt)) * math.sqrt(disc.d))


def _choose_digit(un, um, vn, vm, disc: Discriminant):
    """Nearest lattice point to u/v; returns (an, am).  Exact."""
    try:
        fun, fum, fvn, fvm = _to_float_pair(un, um, vn, vm)
        uf = complex(fun, 0) + fum * disc.omega
        vf = complex(fvn, 0) + fvm * disc.omega
        w = uf / vf
    except (OverflowError, ZeroDivisionError):
        w = None
    if w is not None and math.isfinite(w.real) and math.isfinite(w.imag):
        s, t = coords_of(w, disc)
        err = abs(w) * 2.0**-45 + 1e-300
        am = math.floor(t + 0.5)
        x = s - (t - am) / 2 if disc.is_3mod4 else s
        an = math.floor(x + 0.5)
        if _cell_slack(s - an, t - am, disc) > err:
            return an, am
        # near a cell wall: rank candidates in floats, confirm exactly if close
        ranked = sorted(
            (math.sqrt(_float_dist2(s - cn, t - cm, disc)), cn, cm) for cn, cm in _float_candidates(s, t, disc)
        )
        if ranked[1][0] - ranked[0][0] > 4 * err:
            return ranked[0][1], ranked[0][2]
        cands = {(cn, cm) for cn, cm in _float_candidates(s, t, disc)}
    else:
        cands = None
    if cands is None:
        # w itself is unrepresentable: fall back to rational rounding of u*conj(v)/N(v)
        cn_, cm_ = qconj(vn, vm, disc)
        sn, sm = qmul(un, um, cn_, cm_, disc)
        cands = set(_exact_candidates(sn, sm, qnorm(vn, vm, disc), disc))
    best = None
    for cn, cm in cands:
        pn, pm = qmul(cn, cm, vn, vm, disc)
        key = (qnorm(un - pn, um - pm, disc), qnorm(cn, cm, disc), cn, cm)
        if best is None or key < best:
            best = key
    return int(best[2]), int(best[3])


# --- expansions -------------------------------------------------------------


@dataclass
class Expansion:
    """Digits a_1..a_N of beta together with convergents p_n/q_n.

    Index conventions: ``digits[n-1]`` is a_n; ``p[n]``, ``q[n]`` for n = 0..N
    (p_0 = 0, q_0 = 1 since a_0 = 0).  In exact mode ``pairs[n] = (u, v)`` with
    G^n(beta) = v/u; in float mode ``tails[n]`` is the float G^n(beta).
    """

    disc: Discriminant
    beta: FieldElement | complex
    digits: list[RingElement] = field(default_factory=list)
    p: list[RingElement] = field(default_factory=list)
    q: list[RingElement] = field(default_factory=list)
    terminated: bool = False
    exact: bool = True
    pairs: list[tuple] = field(default_factory=list, repr=False)
    tails: list[complex] = field(default_factory=list, repr=False)
    precision_warning: int | None = None

    @property
    def d(self) -> int:
        return self.disc.d

    def __len__(self) -> int:
        return len(self.digits)

    def convergent(self, n: int) -> tuple[RingElement, RingElement]:
        if n == -1:
            return RingElement(1, 0, self.disc), RingElement(0, 0, self.disc)
        if n == -2:
            return RingElement(0, 0, self.disc), RingElement(1, 0, self.disc)
        return self.p[n], self.q[n]

    def tail(self, n: int) -> FieldElement:
        """G^n(beta) exactly."""
        if not self.exact:
            raise ValueError("exact tails need an exact expansion")
        (un, um), (vn, vm) = self.pairs[n]
        return FieldElement.of(RingElement(int(vn), int(vm), self.disc), RingElement(int(un), int(um), self.disc))

    def tail_complex(self, n: int) -> complex:
        if not self.exact:
            return self.tails[n]
        (un, um), (vn, vm) = self.pairs[n]
        if not (vn or vm):
            return 0j
        return _pair_ratio_complex(vn, vm, un, um, self.disc)

    def ratio_complex(self, n: int) -> complex:
        """q_n / q_{n-1} as a complex float (accurate even for huge q)."""
        a, b = self.q[n], self.q[n - 1]
        return _pair_ratio_complex(a.n, a.m, b.n, b.m, self.disc)

    def ratio(self, n: int) -> FieldElement:
        return FieldElement.of(self.q[n], self.q[n - 1])

    def log_abs_q(self, n: int) -> float:
        return 0.5 * log_int(self.q[n].norm())

    def digit_abs(self) -> list[float]:
        return [math.sqrt(int(a.norm())) for a in self.digits]


def log_int(x) -> float:
    """Natural log of a positive (possibly huge) integer."""
    x = int(x)
    if x <= 0:
        raise ValueError("log of non-positive integer")
    return math.log(x)


def _pair_ratio_complex(an, am, bn, bm, disc: Discriminant) -> complex:
    """(an + am w)/(bn + bm w) in floats with big-integer safe scaling."""
    bl = max(abs(an).bit_length(), abs(am).bit_length(), abs(bn).bit_length(), abs(bm).bit_length())
    e = bl - 900
    if e > 0:
        an, am, bn, bm = an >> e, am >> e, bn >> e, bm >> e
    # ratio = a * conj(b) / N(b), computed with correctly rounded int division
    cn, cm = qconj(bn, bm, disc)
    sn, sm = qmul(an, am, cn, cm, disc)
    nb = int(qnorm(bn, bm, disc))
    sn, sm = int(sn), int(sm)
    if disc.is_3mod4:
        re = (2 * sn - sm) / (2 * nb)
    else:
        re = sn / nb
    return complex(re, (sm / nb) * disc.row_height)


def _check_in_closure(beta, disc: Discriminant) -> None:
    if isinstance(beta, FieldElement):
        ok = in_closed_cell_exact(beta)
    else:
        ok = in_cell(beta, disc, closed=True, tol=1e-12)
    if not ok:
        raise ValueError(f"beta = {beta!r} is outside the closed fundamental cell K_{disc.d}")


class ExactOrbit:
    """Exact Gauss-map orbit of a FieldElement, advanced in certified batches.

    The state is the Euclid pair (u, v) with G^n(beta) = v/u.  The float kernel
    proposes as many digits as it can certify; they are then applied to (u, v)
    with exact integer arithmetic, so the digit stream is the exact one.
    """

    def __init__(self, beta: FieldElement, batch: int = 64):
        disc = beta.disc
        self.disc = disc
        self.u = (mpz(beta.den.n), mpz(0))
        self.v = (mpz(beta.num.n), mpz(beta.num.m))
        self.n = 0
        self.batch = batch
        self.fallback_steps = 0
        self._omega = complex(disc.omega)
        self._is3 = disc.is_3mod4
        self._kd = disc.k if self._is3 else disc.d

    @property
    def terminated(self) -> bool:
        return not (self.v[0] or self.v[1])

    def tail_complex(self) -> complex:
        """G^n(beta) in floats, absolute error below 64 ulp of 1."""
        if self.terminated:
            return 0j
        (un, um), (vn, vm) = self.u, self.v
        e = max(un.bit_length(), um.bit_length()) - 62
        if e > 0:
            un, um, vn, vm = un >> e, um >> e, vn >> e, vm >> e
        om = self._omega
        return (float(vn) + float(vm) * om) / (float(un) + float(um) * om)

    def tail(self) -> FieldElement:
        disc = self.disc
        return FieldElement.of(RingElement(self.v[0], self.v[1], disc), RingElement(self.u[0], self.u[1], disc))

    def _exact_step(self):
        (un, um), (vn, vm) = self.u, self.v
        an, am = _choose_digit(un, um, vn, vm, self.disc)
        xn, xm = qmul(an, am, vn, vm, self.disc)
        self.u, self.v = (vn, vm), (un - xn, um - xm)
        self.n += 1
        self.fallback_steps += 1
        return an, am

    def _apply(self, An, Am, Bn, Bm, Cn, Cm, Dn, Dm) -> None:
        # (u, v) <- (A u + B v, C u + D v) with the ring products written out
        (un, um), (vn, vm) = self.u, self.v
        kd = self._kd
        t1, t2 = Am * um, Bm * vm
        t3, t4 = Cm * um, Dm * vm
        nu_n = An * un - kd * t1 + Bn * vn - kd * t2
        nv_n = Cn * un - kd * t3 + Dn * vn - kd * t4
        nu_m = An * um + Am * un + Bn * vm + Bm * vn
        nv_m = Cn * um + Cm * un + Dn * vm + Dm * vn
        if self._is3:
            nu_m -= t1 + t2
            nv_m -= t3 + t4
        self.u, self.v = (nu_n, nu_m), (nv_n, nv_m)

    def take(self, count: int, *, max_err: float = math.inf, verify: bool = False):
        """Next ``count`` digits (fewer only if the expansion terminates).

        Returns (digits int64[k, 2], tails complex[k]) with tails[i] the float
        value of G^{n+i+1}(beta), accurate to about ``max_err`` (absolute).
        A finite ``max_err`` shortens the certified batches.
        """
        digits = np.empty((count, 2), dtype=np.int64)
        tails = np.empty(count, dtype=np.complex128)
        got = 0
        d = self.disc.d
        err0 = 64 * EPS
        while got < count and not self.terminated:
            z = self.tail_complex()
            k, *mat = digit_batch(
                z.real, z.imag, err0, d, min(self.batch, count - got), max_err, digits[got:], tails[got:]
            )
            if k == 0:
                digits[got] = self._exact_step()
                tails[got] = self.tail_complex()
                got += 1
                continue
            self._apply(*map(int, mat))  # plain ints: int64 * mpz overflows
            self.n += k
            got += k
            if verify and not _pair_tail_in_closure(*self.u, *self.v, self.disc):
                raise AssertionError("certified digit batch left the fundamental cell")
        return digits[:got], tails[:got]

    def advance(self, record_pairs: bool = False):
        """Advance by one certified batch (>= 1 digit unless terminated).

        Returns (digits int64[k, 2], pairs) where pairs lists the exact (u, v)
        after each digit when ``record_pairs`` is set.
        """
        if self.terminated:
            return np.zeros((0, 2), dtype=np.int64), []
        if not record_pairs:
            digits, _ = self.take(self.batch)
            return digits, []
        z = self.tail_complex()
        buf = np.empty((self.batch, 2), dtype=np.int64)
        tails = np.empty(self.batch, dtype=np.complex128)
        k, *_ = digit_batch(z.real, z.imag, 64 * EPS, self.disc.d, self.batch, math.inf, buf, tails)
        if k == 0:
            return np.array([self._exact_step()], dtype=np.int64), [(self.u, self.v)]
        disc = self.disc
        (un, um), (vn, vm) = self.u, self.v
        pairs = []
        for an, am in buf[:k].tolist():
            xn, xm = qmul(an, am, vn, vm, disc)
            un, um, vn, vm = vn, vm, un - xn, um - xm
            pairs.append(((un, um), (vn, vm)))
        self.u, self.v = (un, um), (vn, vm)
        self.n += k
        return buf[:k].copy(), pairs


def _pair_tail_in_closure(un, um, vn, vm, disc: Discriminant) -> bool:
    if not (un or um):
        return False
    cn, cm = qconj(un, um, disc)
    sn, sm = qmul(vn, vm, cn, cm, disc)
    return _pair_in_closed_cell(sn, sm, qnorm(un, um, disc), disc)


def expand(beta, d: int | Discriminant | None = None, N: int | None = None, *, keep_tails: bool = True) -> Expansion:
    """Nearest-integer expansion of ``beta`` in closure(K_d), up to N digits.

    ``beta`` is a FieldElement (exact mode) or a complex number (float mode).
    Stops early when the expansion terminates.
    """
    if isinstance(beta, FieldElement):
        disc = beta.disc
        if d is not None and as_disc(d) != disc:
            raise ValueError("d does not match the field of beta")
    else:
        disc = as_disc(d)
        beta = complex(beta)
    _check_in_closure(beta, disc)
    limit = math.inf if N is None else N
    if isinstance(beta, FieldElement):
        return _expand_exact(beta, disc, limit, keep_tails)
    return _expand_float(beta, disc, limit)


def _expand_exact(beta: FieldElement, disc: Discriminant, limit, keep_tails: bool) -> Expansion:
    exp = Expansion(disc, beta)
    orbit = ExactOrbit(beta)
    if keep_tails:
        exp.pairs.append((orbit.u, orbit.v))
    pp, p = (1, 0), (0, 0)
    qp, q = (0, 0), (1, 0)
    exp.p.append(RingElement(0, 0, disc))
    exp.q.append(RingElement(1, 0, disc))
    digits = exp.digits
    while len(digits) < limit and not orbit.terminated:
        batch, pairs = orbit.advance(record_pairs=keep_tails)
        for i, (an, am) in enumerate(batch.tolist()):
            if len(digits) >= limit:
                break
            xn, xm = qmul(an, am, p[0], p[1], disc)
            pp, p = p, (xn + pp[0], xm + pp[1])
            xn, xm = qmul(an, am, q[0], q[1], disc)
            qp, q = q, (xn + qp[0], xm + qp[1])
            digits.append(RingElement(an, am, disc))
            exp.p.append(RingElement(p[0], p[1], disc))
            exp.q.append(RingElement(q[0], q[1], disc))
            if keep_tails:
                exp.pairs.append(pairs[i])
    if len(digits) < len(exp.pairs) - 1:
        del exp.pairs[len(digits) + 1 :]
    # the orbit may have run past the limit inside its last batch
    if keep_tails:
        (un, um), (vn, vm) = exp.pairs[-1]
        exp.terminated = not (vn or vm)
    else:
        exp.terminated = orbit.terminated and orbit.n == len(digits)
    return exp


def _expand_float(beta: complex, disc: Discriminant, limit, tol: float = FLOAT_CELL_TOL) -> Expansion:
    exp = Expansion(disc, beta, exact=False)
    exp.tails.append(beta)
    p_prev, p = RingElement(1, 0, disc), RingElement(0, 0, disc)
    q_prev, q = RingElement(0, 0, disc), RingElement(1, 0, disc)
    exp.p.append(p)
    exp.q.append(q)
    z = beta
    n = 0
    while n < limit:
        if z == 0:
            exp.terminated = True
            break
        a, z = gauss_step(z, disc)
        n += 1
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        exp.digits.append(a)
        exp.p.append(p)
        exp.q.append(q)
        exp.tails.append(z)
        if exp.precision_warning is None and not in_cell(z, disc, closed=True, tol=tol):
            exp.precision_warning = n
    return exp


def digit_norms_exact(beta: FieldElement, N: int, *, verify: bool = False) -> tuple[np.ndarray, bool]:
    """Norms of the first N digits of an exact beta; the lean loop used by Monte Carlo.

    Returns (norms as int64 array, terminated before N digits).  With ``verify``
    every batch is followed by an exact check that the new tail lies in the
    closed cell.
    """
    digits, _ = ExactOrbit(beta).take(N, verify=verify)
    return digit_norms(digits, beta.disc), len(digits) < N


def digit_norms(digits: np.ndarray, d) -> np.ndarray:
    """Norms of an int64[k, 2] digit array."""
    disc = as_disc(d)
    an, am = digits[:, 0], digits[:, 1]
    if disc.is_3mod4:
        return an * an - an * am + disc.k * am * am
    return an * an + disc.d * am * am


# --- evaluation and identities ----------------------------------------------


def evaluate(digits, d: int | Discriminant | None = None, *, a0=0, check_admissible: bool = True) -> FieldElement:
    """Exact value of [a0; a1, ..., an] by backward recurrence.

    With ``check_admissible`` every tail [0; a_k, ..., a_n] must lie in closure(K_d).
    """
    digits = list(digits)
    if d is None:
        if not digits and not isinstance(a0, RingElement):
            raise ValueError("need d when no digits are given")
        d = (digits[0] if digits else a0).disc
    disc = as_disc(d)
    x = FieldElement.from_ints(0, 0, 1, disc)
    for a in reversed(digits):
        y = x + a
        if not y:
            raise ZeroDivisionError("zero intermediate denominator in evaluation")
        x = y.invert()
        if check_admissible and not in_closed_cell_exact(x):
            raise ValueError(f"inadmissible digit string: tail {x!r} leaves closure(K_{disc.d})")
    return x + a0


def reversed_quotient(exp: Expansion, n: int) -> FieldElement:
    """[a_n; a_{n-1}, ..., a_1], which equals q_n/q_{n-1}."""
    ds = exp.digits[:n]
    return evaluate(list(reversed(ds[:-1])), exp.disc, a0=ds[-1], check_admissible=False)


def determinant_identity(exp: Expansion, n: int) -> RingElement:
    """p_{n-1} q_n - p_n q_{n-1}; equals (-1)^n."""
    p1, q1 = exp.convergent(n - 1)
    return p1 * exp.q[n] - exp.p[n] * q1


def approximation_defect(exp: Expansion, n: int) -> Fraction:
    """norm(q_n) norm(beta q_n - p_n) norm(G^{n+1}(beta) + q_{n+1}/q_n), exactly; equals 1."""
    if not exp.exact:
        raise ValueError("approximation_defect needs an exact expansion")
    if n + 1 >= len(exp.pairs) or n < 0:
        raise ValueError(f"need digit a_{n + 1}, have {len(exp.digits)} digits (terminal convergent reached)")
    disc = exp.disc
    (u0n, u0m), (v0n, v0m) = exp.pairs[0]
    (u1n, u1m), (v1n, v1m) = exp.pairs[n + 1]
    qn, pn, qn1 = exp.q[n], exp.p[n], exp.q[n + 1]
    # beta q_n - p_n = (v0 q_n - u0 p_n)/u0
    an, am = qmul(v0n, v0m, qn.n, qn.m, disc)
    bn, bm = qmul(u0n, u0m, pn.n, pn.m, disc)
    err = qnorm(an - bn, am - bm, disc)
    # G^{n+1} + q_{n+1}/q_n = (v1 q_n + u1 q_{n+1}) / (u1 q_n)
    cn, cm = qmul(v1n, v1m, qn.n, qn.m, disc)
    dn, dm = qmul(u1n, u1m, qn1.n, qn1.m, disc)
    lead = qnorm(cn + dn, cm + dm, disc)
    num = int(err) * int(lead)
    den = int(qnorm(u0n, u0m, disc)) * int(qnorm(u1n, u1m, disc))
    return Fraction(num, den)


def approximation_error_norm(exp: Expansion, n: int) -> Fraction:
    """norm(q_n beta - p_n) as an exact rational."""
    beta = exp.beta
    x = beta * exp.q[n] - exp.p[n]
    return x.norm()


def tail_norm_product(exp: Expansion, n: int) -> Fraction:
    """prod_{k=0}^{n} norm(G^k(beta))."""
    out = Fraction(1)
    for k in range(n + 1):
        out *= exp.tail(k).norm()
    return out


def float_agreement_depth(beta: FieldElement, N: int, prec: int | None = None) -> int:
    """Number of leading digits on which float-mode and exact-mode expansions agree.

    ``prec`` None uses doubles; otherwise an mpmath float orbit with that many bits.
    """
    exact = expand(beta, N=N, keep_tails=False)
    disc = beta.disc
    if prec is None:
        approx = expand(embed(beta), disc, N)
        fdigits = approx.digits
    else:
        fdigits = _mp_digits(beta, N, prec)
    k = 0
    for a, b in zip(exact.digits, fdigits):
        if a != b:
            break
        k += 1
    return k


def _mp_digits(beta: FieldElement, N: int, prec: int) -> list[RingElement]:
    import mpmath

    disc = beta.disc
    out = []
    with mpmath.workprec(prec):
        z = embed(beta, prec)
        sq = mpmath.sqrt(disc.d)
        omega = mpmath.mpc(-0.5, sq / 2) if disc.is_3mod4 else mpmath.mpc(0, sq)
        for _ in range(N):
            if z == 0:
                break
            w = 1 / z
            a = nearest_lattice_point(complex(w), disc)
            # refine with the high-precision value on the candidate set
            best = None
            for cand in _neighbours(a):
                dist = abs(w - (cand.n + cand.m * omega))
                key = (dist, cand.norm(), cand.n, cand.m)
                if best is None or key < best:
                    best = key
                    pick = cand
            out.append(pick)
            z = w - (pick.n + pick.m * omega)
    return out


def _neighbours(a: RingElement):
    for dn in (-1, 0, 1):
        for dm in (-1, 0, 1):
            yield RingElement(a.n + dn, a.m + dm, a.disc)
