import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from bianchi_cf._kernels import real_gauss_maxima
from bianchi_cf.cfrac import expand, in_closed_cell_exact
from bianchi_cf.evt import (
    MaxDigitSample,
    estimate_tail_constant,
    exact_beta,
    fit_scale,
    frechet_cdf,
    frechet_fit,
    frechet_real_cdf,
    gauss_measure_sample,
    ks_distance,
    ks_two_sample,
    lebesgue_tail_constant,
    max_digit_experiment,
    nearest_lattice_array,
    poisson_k_cdf,
    sample_random,
    sample_uniform_cell,
    scale_from_tail,
)
from bianchi_cf.ring import EUCLIDEAN_D, as_disc, nearest_lattice_point
from oracles import ks_brute, ks_two_brute, real_cf_maxima


def hex_cell_area_over_box(d):
    """Polygon area of the cell from its vertices, divided by the bounding-box area."""
    sq = math.sqrt(d)
    ymax = (d + 1) / (4 * sq)
    yside = (d + 1) / (4 * sq) - 0.5 / sq  # height where the slanted edge meets x = 1/2
    verts = [(0.5, yside), (0, ymax), (-0.5, yside), (-0.5, -yside), (0, -ymax), (0.5, -yside)]
    area = 0.5 * abs(sum(x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in zip(verts, verts[1:] + verts[:1])))
    return area, area / (1.0 * 2 * ymax)


@pytest.mark.parametrize("d", [3, 7, 11])
def test_hex_cell_polygon_area(d):
    area, _ = hex_cell_area_over_box(d)
    assert area == pytest.approx(as_disc(d).cell_area(), rel=1e-12)


def test_uniform_cell_acceptance():
    rng = np.random.default_rng(0)
    z, ratio = sample_uniform_cell(1, rng, 10_000, return_ratio=True)
    assert ratio == 1.0 and len(z) == 10_000
    _, expected = hex_cell_area_over_box(3)
    _, ratio = sample_uniform_cell(3, rng, 10**6, return_ratio=True)
    assert abs(ratio / expected - 1) < 0.02


@pytest.mark.parametrize("d", EUCLIDEAN_D)
def test_exact_beta_in_cell_and_roughly_uniform(d):
    rng = random.Random(d)
    pts = [exact_beta(d, 64, rng) for _ in range(2000)]
    assert all(in_closed_cell_exact(b) for b in pts)
    z = np.array([complex(b) for b in pts])
    # the cell is symmetric under z -> -z and z -> conj(z)
    assert abs(np.mean(z.real)) < 0.03 and abs(np.mean(z.imag)) < 0.03


def test_seed_streams_are_distinct_and_stable():
    a = sample_random(1, "maxdigit", 3).random()
    assert a == sample_random(1, "maxdigit", 3).random()
    assert a != sample_random(1, "maxdigit", 4).random()
    assert a != sample_random(1, "tail", 3).random()
    assert a != sample_random(2, "maxdigit", 3).random()


def test_ks_against_brute_force_and_scipy():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.2, 3, 400)
    assert ks_distance(x, frechet_cdf) == pytest.approx(ks_brute(x, frechet_cdf), abs=1e-14)
    u = rng.uniform(size=500)
    assert ks_distance(u, lambda v: np.clip(v, 0, 1)) == pytest.approx(stats.kstest(u, "uniform").statistic)
    y = rng.normal(size=120)
    x2 = rng.normal(size=90)
    assert ks_two_sample(x2, y) == pytest.approx(ks_two_brute(x2, y))
    assert ks_two_sample(x2, y) == pytest.approx(stats.ks_2samp(x2, y).statistic)


@pytest.mark.parametrize("M", [1000, 10_000])
def test_ks_on_ideal_frechet_sample(M):
    rng = np.random.default_rng(M)
    # inverse CDF of exp(-1/y^2)
    y = 1 / np.sqrt(-np.log(rng.uniform(size=M)))
    assert ks_distance(y, frechet_cdf) < 2 / math.sqrt(M)
    c, ks = fit_scale(2.5 * y, frechet_cdf)
    assert c == pytest.approx(2.5, rel=0.05) and ks < 2 / math.sqrt(M)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_poisson_k_cdf_properties(k):
    cdf = poisson_k_cdf(k)
    y = np.geomspace(1e-3, 1e4, 2000)
    v = cdf(y)
    assert np.all(np.diff(v) >= -1e-15)
    assert v[-1] == pytest.approx(1.0, abs=1e-7) and v[0] < 1e-100
    if k == 1:
        assert np.allclose(v, frechet_cdf(y))
    # the k-th largest of n uniform-tail samples: compare with Poisson counts directly
    tau = 1 / y[1000] ** 2
    assert v[1000] == pytest.approx(stats.poisson.cdf(k - 1, tau))


def test_scale_from_tail_matches_ideal_samples():
    # iid |a| with P(|a| > t) = H / t^2 for t >= sqrt(H): maxima of N follow C sqrt N Frechet
    rng = np.random.default_rng(7)
    H, N, M = 3.0, 2000, 2000
    a = math.sqrt(H) / np.sqrt(rng.uniform(size=(M, N)))
    sample = MaxDigitSample(1, N, M, 0, 0, a.max(axis=1))
    C = scale_from_tail(H)
    rep = frechet_fit(sample, C)
    assert rep.ks_distance < 0.04
    assert rep.fitted_scale == pytest.approx(C, rel=0.05)


def test_max_digit_experiment_reproducible_and_scaled():
    s1 = max_digit_experiment(1, 200, 60, seed=3, k=2, checkpoints=(400,))
    s2 = max_digit_experiment(1, 200, 60, seed=3, k=2, checkpoints=(400,), threads=2)
    assert np.array_equal(s1.maxima, s2.maxima) and np.array_equal(s1.k_maxima[2], s2.k_maxima[2])
    assert np.all(s1.k_maxima[2] <= s1.maxima) and np.all(s1.checkpoints[400] >= s1.maxima)
    assert s1.bits >= 2 * 400


def test_max_digit_matches_direct_expansion():
    s = max_digit_experiment(2, 100, 3, seed=11, bits=300)
    for i in range(3):
        beta = exact_beta(2, s.bits, sample_random(11, "maxdigit", i, 0))
        e = expand(beta, N=100)
        assert s.maxima[i] == pytest.approx(max(e.digit_abs()))


def test_tail_constant_small_run():
    est = estimate_tail_constant(1, 200_000, seed=0, chunk=20_000)
    assert 2.5 < est.H_hat < 4.5 and est.H_stderr < 0.5
    assert est.L == 200_000 and len(est.chunk_H) == 10
    assert np.allclose(est.plateau, est.thresholds**2 * est.tail_freq)


def test_lebesgue_tail_constant_d1_near_pi():
    val, se = lebesgue_tail_constant(1, 50.0, 400_000, seed=1)
    assert abs(val - math.pi) < max(4 * se, 0.05 * math.pi)


@pytest.mark.parametrize("d", EUCLIDEAN_D)
def test_nearest_lattice_array_matches_scalar(d):
    rng = np.random.default_rng(d)
    w = rng.uniform(-40, 40, 500) + 1j * rng.uniform(-40, 40, 500)
    n, m = nearest_lattice_array(w, d)
    for k in range(0, 500, 7):
        q = nearest_lattice_point(w[k], d)
        ref = abs(w[k] - complex(q))
        assert abs(w[k] - (n[k] + m[k] * complex(as_disc(d).omega))) == pytest.approx(ref, abs=1e-12)


def test_gauss_measure_first_digit():
    x = gauss_measure_sample(np.random.default_rng(0), 10**6)
    p1 = float(np.mean(x > 0.5))
    assert abs(p1 / (2 - math.log2(3)) - 1) < 0.01


def test_real_gauss_kernel_matches_exact_fractions():
    rng = random.Random(0)
    xs = [Fraction(rng.randrange(1, 2**50), 2**50) for _ in range(200)]
    x = np.array([float(v) for v in xs])
    # doubles follow the exact orbit only for the first few digits
    mx, second, hits = real_gauss_maxima(x.copy(), np.full(200, 0.3), 6)
    for i, v in enumerate(xs):
        ref_max, ref_second = real_cf_maxima(v, 6)
        assert mx[i] == ref_max and second[i] == ref_second


def test_frechet_real_cdf():
    assert frechet_real_cdf(np.array([1.0]))[0] == pytest.approx(math.exp(-1))
    assert frechet_real_cdf(np.array([0.0, -1.0])).tolist() == [0.0, 0.0]
