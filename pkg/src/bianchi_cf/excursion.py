"""Cusp excursions of the model geodesics (beta, inf).

The geodesic t -> beta + e^{-t} j is pushed forward by P(n, beta); its image
has endpoints (-1)^n G^n(beta) and (-1)^{n+1} q_n/q_{n-1}.  The time t_n at
which the original geodesic meets P(n, beta)^{-1} of the unit hemisphere, its
running maximum t*_n and the apex heights of the images are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import excursion_arrays
from .cfrac import Expansion, ExactOrbit, digit_norms, expand, log_int
from .hyperbolic import GeodesicLift, hemisphere_intersection
from .ring import FieldElement, as_disc

# Convergence of the estimators needs long traces; shorter ones are refused.
N_MIN = 1000

# Coefficient of log(1 - |q_{n-1}/q_n|^2) in the intersection-time estimate.
# With 3/2 the defect grows without bound when |q_n/q_{n-1}| -> 1 (the crossing
# height then behaves like (|q_n/q_{n-1}|^2 - 1)^{1/2}); 1/2 keeps it bounded.
DEFECT_COEFFICIENT = 1.5
BOUNDED_DEFECT_COEFFICIENT = 0.5


@dataclass
class ExcursionTrace:
    """Per-index records for one beta, n = 1..N (array index n - 1)."""

    beta: FieldElement | complex
    d: int
    t: np.ndarray
    apex_height: np.ndarray
    log_norm_q: np.ndarray  # log N(q_n) = 2 log|q_n|
    ratio: np.ndarray  # |q_{n-1} / q_n|
    log_abs_tail: np.ndarray  # log|G^n(beta)|
    digit_abs: np.ndarray
    t_star: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.t_star is None:
            self.t_star = np.maximum.accumulate(self.t) if len(self.t) else self.t.copy()

    def __len__(self) -> int:
        return len(self.t)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, len(self.t) + 1)

    def truncated(self, N: int) -> ExcursionTrace:
        return ExcursionTrace(
            self.beta, self.d, self.t[:N], self.apex_height[:N], self.log_norm_q[:N], self.ratio[:N],
            self.log_abs_tail[:N], self.digit_abs[:N], self.t_star[:N],
        )

    def defects(self, coefficient: float = DEFECT_COEFFICIENT) -> np.ndarray:
        """|t_n - 2 log|q_n| - coefficient * log(1 - |q_{n-1}/q_n|^2)| for every n."""
        return np.abs(self.t - self.log_norm_q - coefficient * np.log1p(-self.ratio**2))


def _signed_lift(expansion: Expansion, n: int) -> GeodesicLift:
    sign = -1 if n % 2 else 1
    g = expansion.tail_complex(n)
    Q = expansion.ratio_complex(n)
    return GeodesicLift(sign * g, -sign * Q, expansion.disc)


def intersection_time(expansion: Expansion, n: int) -> float:
    """t_n: when beta + e^{-t} j meets P(n, beta)^{-1} of the unit hemisphere.

    With z_n + r_n j the crossing of the image geodesic with the unit
    hemisphere, the preimage has height
    r' = 1 / (r_n^{-1} |(-1)^n q_{n-1} z_n + q_n|^2 + r_n |q_{n-1}|^2)
    and t_n = -log r'.  |q_{n-1}|^2 is factored out so huge q_n do not overflow.
    """
    if not 1 <= n <= len(expansion):
        raise ValueError(f"n = {n} outside 1..{len(expansion)}")
    lift = _signed_lift(expansion, n)
    Q = expansion.ratio_complex(n)
    assert abs(Q) > 1, "|q_n / q_{n-1}| must exceed 1"
    x = hemisphere_intersection(lift)
    sign = -1 if n % 2 else 1
    _, q_prev = expansion.convergent(n - 1)
    return log_int(q_prev.norm()) + math.log(abs(sign * x.z + Q) ** 2 / x.r + x.r)


def apex_height(expansion: Expansion, n: int) -> float:
    """Half the Euclidean distance between the endpoints of the n-th image geodesic."""
    if not 1 <= n <= len(expansion):
        raise ValueError(f"n = {n} outside 1..{len(expansion)}")
    return abs(expansion.tail_complex(n) + expansion.ratio_complex(n)) / 2


def excursion_times(trace: ExcursionTrace) -> ExcursionTrace:
    """Fill t_star with the running maximum of t (idempotent)."""
    trace.t_star = np.maximum.accumulate(trace.t) if len(trace.t) else trace.t.copy()
    return trace


def lemma51_defect(trace: ExcursionTrace, n: int, coefficient: float = DEFECT_COEFFICIENT) -> float:
    """|t_n - 2 log|q_n| - coefficient * log(1 - |q_{n-1}/q_n|^2)|.

    Only the coefficient 1/2 gives a bound uniform in n; see DEFECT_COEFFICIENT.
    """
    i = n - 1
    return abs(trace.t[i] - trace.log_norm_q[i] - coefficient * math.log1p(-trace.ratio[i] ** 2))


def default_growth_threshold(d) -> float:
    """Midpoint of (1, 1/A_d) with A_d the covering radius of the cell."""
    return 0.5 * (1.0 + 1.0 / as_disc(d).covering_radius)


def growth_subsequence(trace: ExcursionTrace, r_d: float | None = None) -> np.ndarray:
    """All n with |q_n / q_{n-1}| >= r_d."""
    if r_d is None:
        r_d = default_growth_threshold(trace.d)
    with np.errstate(divide="ignore"):
        growth = 1.0 / trace.ratio
    return np.flatnonzero(growth >= r_d) + 1


# --- trace construction -------------------------------------------------------


def trace_from_expansion(expansion: Expansion, N: int | None = None) -> ExcursionTrace:
    """Trace computed from exact convergents and exact tails."""
    if not expansion.exact:
        raise ValueError("traces need an exact expansion")
    N = len(expansion) if N is None else min(N, len(expansion))
    t = np.empty(N)
    apex = np.empty(N)
    lognq = np.empty(N)
    ratio = np.empty(N)
    logg = np.empty(N)
    for n in range(1, N + 1):
        g = expansion.tail_complex(n)
        Q = expansion.ratio_complex(n)
        # the crossing point for endpoints (G^n, -Q) is (-1)^n times the one
        # for the signed lift, which cancels the (-1)^n in the height formula
        lift = GeodesicLift(g, -Q, expansion.disc)
        x = hemisphere_intersection(lift)
        _, q_prev = expansion.convergent(n - 1)
        t[n - 1] = log_int(q_prev.norm()) + math.log(abs(x.z + Q) ** 2 / x.r + x.r)
        apex[n - 1] = abs(g + Q) / 2
        lognq[n - 1] = log_int(expansion.q[n].norm())
        ratio[n - 1] = 1 / abs(Q)
        logg[n - 1] = math.log(abs(g)) if g else -math.inf
    digit_abs = np.array(expansion.digit_abs()[:N], dtype=float)
    return ExcursionTrace(expansion.beta, expansion.d, t, apex, lognq, ratio, logg, digit_abs)


def exact_trace(beta: FieldElement, N: int) -> ExcursionTrace:
    return trace_from_expansion(expand(beta, N=N), N)


class TraceBuilder:
    """Incremental fast trace along an exact orbit.

    Digits are exact (certified batches); tails G^n are floats with absolute
    error below ``tail_err``, which bounds the error of t_n and apex heights.
    """

    def __init__(self, beta: FieldElement, tail_err: float = 1e-6):
        disc = beta.disc
        self.beta = beta
        self.disc = disc
        self.orbit = ExactOrbit(beta)
        self.tail_err = tail_err
        om = complex(disc.omega)
        self._om = (om.real, om.imag)
        self._state = np.zeros(4)
        self._parts: list[tuple] = []
        self.n = 0
        self.last: ExcursionTrace | None = None

    def extend(self, count: int) -> int:
        """Add up to ``count`` records; returns how many were added.

        The new records alone are available as ``last`` (its t_star restarts
        from the block, so callers needing the running maximum carry it).
        """
        digits, tails = self.orbit.take(count, max_err=self.tail_err)
        k = len(digits)
        if k == 0:
            return 0
        out = [np.empty(k) for _ in range(5)]
        excursion_arrays(digits, tails, self._om[0], self._om[1], self._state, *out)
        da = np.sqrt(digit_norms(digits, self.disc).astype(float))
        self._parts.append((*out, da))
        self.last = ExcursionTrace(self.beta, self.disc.d, *out, da)
        self.n += k
        return k

    @property
    def terminated(self) -> bool:
        return self.orbit.terminated

    def trace(self) -> ExcursionTrace:
        if not self._parts:
            empty = np.zeros(0)
            return ExcursionTrace(self.beta, self.disc.d, *(empty,) * 6)
        cols = [np.concatenate(c) for c in zip(*self._parts)]
        t, apex, lognq, ratio, logg, da = cols
        return ExcursionTrace(self.beta, self.disc.d, t, apex, lognq, ratio, logg, da)


def fast_trace(beta: FieldElement, N: int, tail_err: float = 1e-6) -> ExcursionTrace:
    b = TraceBuilder(beta, tail_err)
    b.extend(N)
    return b.trace()


# --- growth-rate estimators ---------------------------------------------------


@dataclass(frozen=True)
class CStarEstimate:
    c_star: float
    stderr: float
    cross_estimator: float
    cross_stderr: float
    birkhoff: float
    birkhoff_stderr: float
    n: int
    count: int

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.stderr, self.cross_stderr)

    @property
    def agreement_flag(self) -> bool:
        return abs(self.c_star - self.cross_estimator) < 3 * self.combined_stderr

    @property
    def birkhoff_flag(self) -> bool:
        return abs(self.c_star - self.birkhoff) < 3 * math.hypot(self.stderr, self.birkhoff_stderr)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf
    return m, se


def cstar_estimate(traces, n: int | None = None, n_min: int = N_MIN) -> CStarEstimate:
    """Growth constant of t*_n / n, with the 2 log|q_n| / n and Birkhoff cross-estimators.

    Every trace is read at the same index n (default: the shortest length).
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces")
    if n is None:
        n = min(len(tr) for tr in traces)
    if n < n_min:
        raise ValueError(f"traces of length {n} are shorter than the minimum {n_min}")
    tstar = np.array([tr.t_star[n - 1] / n for tr in traces])
    cross = np.array([tr.log_norm_q[n - 1] / n for tr in traces])
    birk = np.array([-2.0 * np.sum(tr.log_abs_tail[:n]) / n for tr in traces])
    c, se = _mean_se(tstar)
    x, xse = _mean_se(cross)
    b, bse = _mean_se(birk)
    return CStarEstimate(c, se, x, xse, b, bse, n, len(traces))
