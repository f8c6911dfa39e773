"""Monte Carlo drivers and extreme-value statistics for continued-fraction digits.

Every random draw is keyed by (seed, stream, sample_id, attempt), so results
do not depend on how samples are split across worker processes.
"""

from __future__ import annotations

import math
import random
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._kernels import real_gauss_maxima
from .cfrac import _pair_in_closed_cell, digit_norms_exact
from .excursion import TraceBuilder, cstar_estimate, fast_trace
from .hyperbolic import flow_max_height
from .ring import Discriminant, FieldElement, as_disc

STREAMS = {"maxdigit": 1, "tail": 2, "galambos": 3, "theorem2": 4, "cstar": 5, "lebesgue": 6, "cell": 7}

DEFAULT_THRESHOLDS = tuple(float(t) for t in np.geomspace(10.0, 100.0, 11))
PLATEAU_WARN = 0.25


# --- seeding and workers --------------------------------------------------------


def sample_seed(seed: int, stream: str, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[stream], *key))


def sample_random(seed: int, stream: str, *key: int) -> random.Random:
    """Python RNG for one sample; used for exact big-integer coordinates."""
    state = sample_seed(seed, stream, *key).generate_state(4, dtype=np.uint64)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def sample_generator(seed: int, stream: str, *key: int) -> np.random.Generator:
    return np.random.default_rng(sample_seed(seed, stream, *key))


def run_chunks(fn, jobs: list, threads: int = 1) -> list:
    """fn over jobs in order; with threads > 1 the jobs go to worker processes."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _split(n: int, parts: int) -> list[range]:
    step = max(1, math.ceil(n / parts))
    return [range(i, min(n, i + step)) for i in range(0, n, step)]


def _job_count(n: int, threads: int) -> int:
    return 1 if threads <= 1 else min(n, 8 * threads)


# --- sampling --------------------------------------------------------------------


def _cell_box(disc: Discriminant) -> tuple[float, float]:
    """Half-widths (x, y) of the axis-parallel box around K_d."""
    if disc.is_3mod4:
        return 0.5, (disc.d + 1) / (4 * math.sqrt(disc.d))
    return 0.5, math.sqrt(disc.d) / 2


def sample_uniform_cell(d, rng: np.random.Generator, size: int | None = None, *, return_ratio: bool = False):
    """Lebesgue-uniform point(s) of K_d by rejection from the bounding box.

    With ``return_ratio`` also returns the empirical acceptance ratio.
    """
    disc = as_disc(d)
    hx, hy = _cell_box(disc)
    want = 1 if size is None else size
    kept = []
    got = drawn = 0
    while got < want:
        k = max(16, int(1.5 * (want - got)))
        z = rng.uniform(-hx, hx, k) + 1j * rng.uniform(-hy, hy, k)
        drawn += k
        z = z[_in_cell_array(z, disc)]
        kept.append(z)
        got += len(z)
    out = np.concatenate(kept)
    ratio = len(out) / drawn
    res = out[0] if size is None else out[:want]
    return (res, ratio) if return_ratio else res


def _in_cell_array(z: np.ndarray, disc: Discriminant) -> np.ndarray:
    x, y = np.abs(z.real), np.abs(z.imag)
    if disc.is_3mod4:
        return (x <= 0.5) & (x + y * math.sqrt(disc.d) <= (disc.d + 1) / 4)
    return (x <= 0.5) & (y <= math.sqrt(disc.d) / 2)


def auto_bits(n_digits: int) -> int:
    """Coordinate size that keeps a random exact beta from terminating before n_digits.

    Every field needs fewer than 2 bits per digit (about 1.7 at worst).
    """
    return 2 * n_digits + 256


def exact_beta(d, bits: int, rng: random.Random) -> FieldElement:
    """Uniform point of the 2^-bits grid in closure(K_d), in lattice coordinates (s, t)."""
    disc = as_disc(d)
    den = 1 << bits
    if disc.is_3mod4:
        # |t| <= (d+1)/(2d), |s| <= (1 + |t|)/2 on the closed cell
        t_max = (disc.d + 1) * den // (2 * disc.d)
        s_max = (den + t_max) // 2 + 1
    else:
        t_max = s_max = den // 2
    while True:
        s = rng.randint(-s_max, s_max)
        t = rng.randint(-t_max, t_max)
        if _pair_in_closed_cell(s, t, den, disc):
            return FieldElement.from_ints(s, t, den, disc)


# --- KS distances -----------------------------------------------------------------


def ks_distance(x, cdf) -> float:
    """sup |F_n - F| for the right-continuous empirical CDF of x."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_sample(x, y) -> float:
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / len(x)
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def frechet_cdf(y):
    """y -> exp(-1/y^2), zero for y <= 0."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0) ** 2), 0.0)


def frechet_real_cdf(y):
    """y -> exp(-1/y), the limit law of the largest regular continued-fraction digit."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)


def poisson_k_cdf(k: int):
    """CDF of the k-th largest value: exp(-tau) sum_{j<k} tau^j / j! with tau = 1/y^2."""

    def cdf(y):
        y = np.asarray(y, dtype=float)
        pos = y > 0
        tau = np.where(pos, 1.0 / np.where(pos, y, 1.0) ** 2, 0.0)
        total = np.zeros_like(tau)
        term = np.ones_like(tau)
        for j in range(k):
            if j:
                term = term * tau / j
            total += term
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(-tau) * total
        return np.where(pos, np.nan_to_num(val, nan=0.0), 0.0)

    return cdf


def fit_scale(x, cdf, lo: float = 1e-3, hi: float = 1e3) -> tuple[float, float]:
    """Scale c minimizing the KS distance of x / c to ``cdf``; returns (c, distance).

    KS is piecewise smooth in c, so a log grid locates the basin before a
    bounded scalar refinement.
    """
    x = np.asarray(x, dtype=float)
    med = float(np.median(x))
    if med > 0:
        lo, hi = max(lo, med / 50), min(hi, med * 50)
    grid = np.geomspace(lo, hi, 400)
    vals = [ks_distance(x / c, cdf) for c in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda lc: ks_distance(x / math.exp(lc), cdf), bounds=(math.log(a), math.log(b)), method="bounded",
        options={"xatol": 1e-7},
    )
    c = math.exp(res.x)
    best = ks_distance(x / c, cdf)
    if vals[i] < best:
        return float(grid[i]), float(vals[i])
    return c, best


# --- maximal digits --------------------------------------------------------------


@dataclass
class MaxDigitSample:
    d: int
    N: int
    M: int
    seed: int
    bits: int
    maxima: np.ndarray
    k_maxima: dict = field(default_factory=dict)
    checkpoints: dict = field(default_factory=dict)
    resampled: int = 0


@dataclass(frozen=True)
class FitReport:
    fitted_scale: float
    ks_distance: float
    reference_cdf: str
    scale_used: float


def _maxdigit_job(job):
    d, N, seed, bits, ks, checkpoints, ids = job
    n_total = max((N, *checkpoints))
    rows = []
    for i in ids:
        attempt = 0
        while True:
            beta = exact_beta(d, bits, sample_random(seed, "maxdigit", i, attempt))
            norms, early = digit_norms_exact(beta, n_total)
            if not early:
                break
            attempt += 1
        head = norms[:N]
        kth = {k: int(np.partition(head, -k)[-k]) for k in ks}
        cps = {n: int(norms[:n].max()) for n in checkpoints}
        rows.append((int(head.max()), kth, cps, attempt))
    return rows


def max_digit_experiment(
    d, N: int, M: int, seed: int, *, k: int | tuple = 2, bits: int | None = None,
    checkpoints: tuple = (), threads: int = 1,
) -> MaxDigitSample:
    """max_{n<=N} |a_n| for M uniform exact betas (plus k-th maxima and checkpoint maxima).

    A beta whose expansion terminates before the longest horizon is redrawn;
    the number of redraws is reported.
    """
    disc = as_disc(d)
    ks = tuple(k) if isinstance(k, tuple) else ((k,) if k and k > 1 else ())
    checkpoints = tuple(sorted(set(checkpoints)))
    n_total = max((N, *checkpoints))
    bits = max(bits or 0, auto_bits(n_total))
    jobs = [(disc.d, N, seed, bits, ks, checkpoints, r) for r in _split(M, _job_count(M, threads))]
    rows = [row for part in run_chunks(_maxdigit_job, jobs, threads) for row in part]
    maxima = np.sqrt(np.array([r[0] for r in rows], dtype=float))
    kmax = {kk: np.sqrt(np.array([r[1][kk] for r in rows], dtype=float)) for kk in ks}
    cps = {n: np.sqrt(np.array([r[2][n] for r in rows], dtype=float)) for n in checkpoints}
    return MaxDigitSample(disc.d, N, M, seed, bits, maxima, kmax, cps, sum(r[3] for r in rows))


def scale_from_tail(H: float) -> float:
    """Fréchet scale C implied by P(|a_1| > t) ~ H / t^2.

    For N roughly independent digits P(max <= C y sqrt N) ~ exp(-N H / (C y sqrt N)^2),
    which is exp(-1/y^2) exactly when C = sqrt(H).
    """
    return math.sqrt(H)


def frechet_fit(sample: MaxDigitSample, C: float | None = None) -> FitReport:
    """KS distance of maxima / (C sqrt N) to exp(-1/y^2); C defaults to the KS-optimal scale."""
    x = sample.maxima / math.sqrt(sample.N)
    c_fit, ks_fit = fit_scale(x, frechet_cdf)
    if C is None:
        return FitReport(c_fit, ks_fit, "frechet_sq", c_fit)
    return FitReport(c_fit, ks_distance(x / C, frechet_cdf), "frechet_sq", C)


def poisson_k_fit(sample: MaxDigitSample, k: int, C: float | None = None) -> FitReport:
    """KS distance of the k-th maxima against the Poisson-corrected Fréchet law."""
    x = (sample.maxima if k == 1 else sample.k_maxima[k]) / math.sqrt(sample.N)
    cdf = poisson_k_cdf(k)
    c_fit, ks_fit = fit_scale(x, cdf)
    if C is None:
        return FitReport(c_fit, ks_fit, "poisson_k", c_fit)
    return FitReport(c_fit, ks_distance(x / C, cdf), "poisson_k", C)


# --- tail constant ------------------------------------------------------------------


@dataclass
class TailEstimate:
    d: int
    L: int
    thresholds: np.ndarray
    tail_freq: np.ndarray
    H_hat: float
    H_stderr: float
    spread: float
    chunk_H: np.ndarray = field(repr=False)
    warning: str | None = None

    @property
    def plateau(self) -> np.ndarray:
        return self.thresholds**2 * self.tail_freq


def _tail_job(job):
    d, seed, chunk, burn_in, thresholds, ids = job
    t2 = np.asarray(thresholds) ** 2
    bits = auto_bits(chunk + burn_in)
    out = []
    for i in ids:
        attempt = 0
        while True:
            beta = exact_beta(d, bits, sample_random(seed, "tail", i, attempt))
            norms, early = digit_norms_exact(beta, chunk + burn_in)
            if not early:
                break
            attempt += 1
        body = np.sort(norms[burn_in:])
        out.append(len(body) - np.searchsorted(body, t2, side="right"))
    return out


def estimate_tail_constant(
    d, L: int, thresholds=DEFAULT_THRESHOLDS, *, seed: int = 0, chunk: int = 10_000, burn_in: int = 64,
    threads: int = 1,
) -> TailEstimate:
    """Birkhoff estimate of H in P(|a_1| > t) ~ H / t^2.

    The orbit is cut into independent exact chunks of ``chunk`` digits (after
    ``burn_in`` discarded digits each) so big-integer sizes stay bounded; the
    chunk-to-chunk scatter gives the standard error.
    """
    disc = as_disc(d)
    thresholds = np.asarray(thresholds, dtype=float)
    n_chunks = max(1, math.ceil(L / chunk))
    jobs = [(disc.d, seed, chunk, burn_in, tuple(thresholds), r) for r in _split(n_chunks, _job_count(n_chunks, threads))]
    counts = np.array([c for part in run_chunks(_tail_job, jobs, threads) for c in part], dtype=float)
    total = n_chunks * chunk
    freq = counts.sum(axis=0) / total
    plateau = thresholds**2 * freq
    chunk_H = (thresholds**2 * counts / chunk).mean(axis=1)
    H = float(plateau.mean())
    se = float(chunk_H.std(ddof=1) / math.sqrt(n_chunks)) if n_chunks > 1 else math.inf
    spread = float((plateau.max() - plateau.min()) / plateau.mean()) if H > 0 else math.inf
    warn = None
    if spread > PLATEAU_WARN:
        warn = f"t^2 tail frequency is not flat: relative spread {spread:.3f}"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return TailEstimate(disc.d, total, thresholds, freq, H, se, spread, chunk_H, warn)


def nearest_lattice_array(w: np.ndarray, d) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized float nearest lattice point: (n, m) arrays with w ~ n + m w_d."""
    disc = as_disc(d)
    om = complex(disc.omega)
    r0 = np.floor(w.imag / om.imag + 0.5)
    best = np.full(w.shape, np.inf)
    bn = np.zeros(w.shape)
    bm = np.zeros(w.shape)
    for dr in (-1.0, 0.0, 1.0):
        r = r0 + dr
        n = np.floor(w.real - r * om.real + 0.5)
        dist = np.abs(w - (n + r * om))
        better = dist < best
        best = np.where(better, dist, best)
        bn = np.where(better, n, bn)
        bm = np.where(better, r, bm)
    return bn, bm


def lebesgue_tail_constant(d, t: float, samples: int, seed: int = 0) -> tuple[float, float]:
    """t^2 * Leb{z in K_d : |a_1(z)| > t} / Leb(K_d), with its standard error.

    The event forces |z| < 1 / (t - A_d) (A_d the covering radius), so points
    are drawn uniformly from that disk only and the hit fraction is rescaled.
    """
    disc = as_disc(d)
    rho = 1.0 / (t - disc.covering_radius)
    rng = sample_generator(seed, "lebesgue", int(round(t * 1000)))
    rad = rho * np.sqrt(rng.uniform(0.0, 1.0, samples))
    ang = rng.uniform(0.0, 2 * math.pi, samples)
    z = rad * np.exp(1j * ang)
    z = z[z != 0]
    n, m = nearest_lattice_array(1.0 / z, disc)
    a = n + m * complex(disc.omega)
    p = float(np.mean(np.abs(a) > t))
    scale = t * t * math.pi * rho * rho / disc.cell_area()
    return scale * p, scale * math.sqrt(p * (1 - p) / len(z))


# --- real continued fractions ------------------------------------------------------------


@dataclass(frozen=True)
class GalambosReport:
    N: int
    M: int
    seed: int
    ks_distance: float
    fitted_scale: float
    p_first_digit_one: float
    restarts: int
    reference_cdf: str = "frechet_real"


def gauss_measure_sample(rng: np.random.Generator, size: int) -> np.ndarray:
    """Inverse-CDF sampling of the Gauss measure: x = 2^U - 1."""
    return np.exp2(rng.uniform(0.0, 1.0, size)) - 1.0


def galambos_maxima(N: int, M: int, seed: int, threads: int = 1):
    rng = sample_generator(seed, "galambos")
    x = gauss_measure_sample(rng, M)
    backup = gauss_measure_sample(rng, M)
    jobs = [(x[r.start : r.stop], backup[r.start : r.stop], N) for r in _split(M, _job_count(M, threads))]
    parts = run_chunks(_galambos_job, jobs, threads)
    mx = np.concatenate([p[0] for p in parts])
    hits = int(sum(p[1] for p in parts))
    return x, mx, hits


def _galambos_job(job):
    x, backup, N = job
    mx, _, hits = real_gauss_maxima(np.ascontiguousarray(x), np.ascontiguousarray(backup).copy(), N)
    return mx, int(hits.sum())


def galambos_baseline(N: int, M: int, seed: int, threads: int = 1) -> GalambosReport:
    """Largest regular continued-fraction digit under the Gauss measure.

    KS distance of max_{n<=N} a_n * log 2 / N against exp(-1/y).  Orbits are
    run in double precision; an orbit that hits 0 exactly is restarted from a
    fresh Gauss-distributed point (counted in ``restarts``).
    """
    x, mx, hits = galambos_maxima(N, M, seed, threads)
    y = mx * math.log(2) / N
    p1 = float(np.mean(x > 0.5))
    scale, _ = fit_scale(y, frechet_real_cdf)
    return GalambosReport(N, M, seed, ks_distance(y, frechet_real_cdf), scale, p1, hits)


# --- cusp excursions -------------------------------------------------------------------


@dataclass
class Theorem2Report:
    d: int
    T: float
    M: int
    seed: int
    c_d: float
    c_star: float
    alpha_hat: float
    alpha_fit: float
    ks_distance: float
    ks_fit: float
    statistic: np.ndarray = field(repr=False)
    horizon: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    resampled: int = 0

    @property
    def gap_p95(self) -> float:
        return float(np.percentile(np.abs(self.gaps), 95)) if len(self.gaps) else math.nan


def theorem2_bits(T: float) -> int:
    """Coordinate size so that the crossing time T comes well before termination.

    With a 2^-B grid, log N(q_n) <= 2 B log 2 bounds the reachable times.
    """
    return int(math.ceil(T)) + 256


def excursion_statistic(beta: FieldElement, T: float, chunk: int = 256):
    """(X, N) with N the first n where t*_n > T and X = log max_{n<=N} apex - log(T)/2.

    Returns None if the expansion terminates first.
    """
    b = TraceBuilder(beta)
    tstar = -math.inf
    best = 0.0
    while True:
        start = b.n
        if b.extend(chunk) == 0:
            return None
        tr_t, apex = b.last.t, b.last.apex_height
        run = np.maximum.accumulate(np.maximum(tr_t, tstar))
        hit = np.flatnonzero(run > T)
        if len(hit):
            j = int(hit[0])
            best = max(best, float(apex[: j + 1].max()))
            return math.log(best) - 0.5 * math.log(T), start + j + 1
        best = max(best, float(apex.max()))
        tstar = float(run[-1])


def _theorem2_job(job):
    d, T, seed, bits, direct_ids, ids = job
    out = []
    for i in ids:
        attempt = 0
        while True:
            beta = exact_beta(d, bits, sample_random(seed, "theorem2", i, attempt))
            res = excursion_statistic(beta, T)
            if res is not None:
                break
            attempt += 1
        X, N = res
        gap = math.nan
        if i in direct_ids:
            direct = flow_max_height(beta, T).max_log_height
            gap = direct - (X + 0.5 * math.log(T))
        out.append((X, N, gap, attempt))
    return out


def theorem2_experiment(
    d, T: float, M: int, seed: int, *, c_d: float, c_star: float, direct: int = 100, threads: int = 1,
) -> Theorem2Report:
    """Excursion statistic X = log max apex height - (1/2) log T over M uniform betas.

    alpha_hat = log(c_d / (2 sqrt(c_star))) is compared with the shift that
    makes exp(X - alpha) closest to exp(-1/y^2).  The first ``direct`` betas
    are also followed by the reduced geodesic flow for the same time T; the
    differences of the two log max heights are returned as ``gaps``.
    """
    disc = as_disc(d)
    bits = theorem2_bits(T)
    direct_ids = frozenset(range(min(direct, M)))
    jobs = [(disc.d, T, seed, bits, direct_ids, r) for r in _split(M, _job_count(M, threads))]
    rows = [row for part in run_chunks(_theorem2_job, jobs, threads) for row in part]
    X = np.array([r[0] for r in rows])
    horizon = np.array([r[1] for r in rows], dtype=np.int64)
    gaps = np.array([r[2] for r in rows if not math.isnan(r[2])])
    alpha_hat = math.log(c_d / (2 * math.sqrt(c_star)))
    scale, ks_fit = fit_scale(np.exp(X), frechet_cdf)
    ks = ks_distance(np.exp(X - alpha_hat), frechet_cdf)
    return Theorem2Report(
        disc.d, T, M, seed, c_d, c_star, alpha_hat, math.log(scale), ks, ks_fit, X, horizon, gaps,
        sum(r[3] for r in rows),
    )


def _cstar_job(job):
    d, n, seed, ids = job
    bits = auto_bits(n)
    out = []
    for i in ids:
        attempt = 0
        while True:
            beta = exact_beta(d, bits, sample_random(seed, "cstar", i, attempt))
            tr = fast_trace(beta, n)
            if len(tr) == n:
                break
            attempt += 1
        out.append(tr)
    return out


def cstar_experiment(d, n: int, M: int, seed: int, threads: int = 1):
    """Traces of length n for M uniform betas and their growth-constant estimate."""
    disc = as_disc(d)
    jobs = [(disc.d, n, seed, r) for r in _split(M, _job_count(M, threads))]
    traces = [tr for part in run_chunks(_cstar_job, jobs, threads) for tr in part]
    return traces, cstar_estimate(traces, n)
