"""Acceptance suite: one test per criterion, each reporting a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.  Single-threaded it takes roughly half an
hour; the expensive samples are computed once and shared between criteria.
"""

from __future__ import annotations

import functools
import math
import random
import subprocess
import sys
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from bianchi_cf.cfrac import expand
from bianchi_cf.evt import (
    cstar_experiment,
    estimate_tail_constant,
    fit_scale,
    frechet_cdf,
    frechet_fit,
    galambos_baseline,
    ks_distance,
    ks_two_sample,
    lebesgue_tail_constant,
    max_digit_experiment,
    theorem2_experiment,
)
from bianchi_cf.excursion import (
    BOUNDED_DEFECT_COEFFICIENT,
    DEFECT_COEFFICIENT,
    fast_trace,
    intersection_time,
)
from bianchi_cf.hyperbolic import (
    GeodesicLift,
    H3Point,
    MobiusMap,
    act,
    distance,
    hemisphere_intersection,
    reduce_to_domain,
)
from bianchi_cf.ring import EUCLIDEAN_D, RingElement, as_disc

import conftest
from oracles import bisection_time, identity_failures, rand_beta, rand_cell_complex

SEED = 2026
DS = EUCLIDEAN_D


def report(k: int, ok: bool, title: str, detail: str) -> None:
    line = f"criterion {k} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
    conftest.ACCEPTANCE_LINES[k] = line
    print(line)


# --- shared samples ----------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def tail_estimate(d):
    return estimate_tail_constant(d, 10**7, seed=SEED)


@functools.lru_cache(maxsize=None)
def maxdigit_sample(d):
    return max_digit_experiment(d, 1000, 10_000, SEED, k=1, checkpoints=(4000,))


@functools.lru_cache(maxsize=None)
def cstar_run(d):
    return cstar_experiment(d, 1000, 1000, SEED)


# --- 1. exact identities ---------------------------------------------------------------


def test_criterion_1_exact_identities():
    rng = random.Random(SEED)
    fails = Counter()
    checked = 0
    tops = []
    for d in DS:
        for _ in range(1000):
            f, top = identity_failures(rand_beta(d, 256, rng), 200)
            fails += f
            checked += top
            tops.append(top)
    ok = not fails
    report(
        1, ok, "exact identity suite",
        f"{checked} (beta, n) checks over 5000 betas, n <= {max(tops)} (median {int(np.median(tops))}), "
        f"failures {dict(fails) or 0}",
    )
    assert ok, dict(fails)


# --- 2. geometry -------------------------------------------------------------------------


def _rand_map(d, rng):
    g = MobiusMap.identity(d)
    for _ in range(rng.randint(1, 4)):
        q = RingElement(rng.randint(-3, 3), rng.randint(-3, 3), as_disc(d))
        g = MobiusMap.T(q, d) @ MobiusMap.S(d) @ g
    return g


def _rand_point(rng):
    return H3Point(complex(rng.uniform(-3, 3), rng.uniform(-3, 3)), math.exp(rng.uniform(-3, 2)))


def test_criterion_2_geometry():
    rng = random.Random(SEED)
    worst = Counter()
    for i in range(10_000):
        d = DS[i % len(DS)]
        disc = as_disc(d)
        beta = rand_cell_complex(d, rng)
        # repelling end -q_n/q_{n-1}: modulus above 1, arbitrary direction
        alpha = -cmath_rect(1 + rng.expovariate(0.5), rng.uniform(0, 2 * math.pi))
        x = hemisphere_intersection(GeodesicLift(beta, alpha, disc))
        worst["hemisphere"] = max(worst["hemisphere"], abs(x.height2 - 1))
        g, h = _rand_map(d, rng), _rand_map(d, rng)
        p, q = _rand_point(rng), _rand_point(rng)
        lhs, rhs = act(g @ h, p), act(g, act(h, p))
        scale = max(1.0, abs(lhs.z), lhs.r)
        worst["action"] = max(worst["action"], (abs(lhs.z - rhs.z) + abs(lhs.r - rhs.r)) / scale)
        worst["invariance"] = max(worst["invariance"], abs(distance(act(g, p), act(g, q)) - distance(p, q)))
        red = reduce_to_domain(x if rng.random() < 0.5 else p, disc)
        worst["domain"] = max(worst["domain"], _domain_violation(red.point, d))
    ok = (
        worst["hemisphere"] <= 1e-12 and worst["action"] <= 1e-10 and worst["invariance"] <= 1e-10
        and worst["domain"] <= 1e-10
    )
    report(
        2, ok, "geometry suite (10^4 lifts)",
        ", ".join(f"max {k} error {v:.2e}" for k, v in sorted(worst.items())),
    )
    assert ok, dict(worst)


def cmath_rect(r, phi):
    return complex(r * math.cos(phi), r * math.sin(phi))


def _domain_violation(p: H3Point, d: int) -> float:
    """How far p is outside the closed fundamental-domain inequalities (0 inside)."""
    x, y = p.z.real, p.z.imag
    sq = math.sqrt(d)
    v = [abs(x) - 0.5, 1 - p.height2]
    if d in (1, 2):
        v.append(abs(y) - sq / 2)
    else:
        v.append(abs(x) + abs(y) * sq - (d + 1) / 4)
    if d == 1:
        v.append(-x)
    if d == 3:
        v.append(abs(x) - y * sq)
    return max(0.0, *v)


# --- 3. intersection-time oracle ------------------------------------------------------


def test_criterion_3_intersection_time():
    rng = random.Random(SEED)
    worst = 0.0
    pairs = 0
    for d in DS:
        for _ in range(20):
            beta = rand_beta(d, 800, rng)
            n = rng.randint(1, 120)
            e = expand(beta, N=n)
            ref = bisection_time(e, n, prec=300 + 8 * n)
            fast = fast_trace(beta, n).t[n - 1]
            worst = max(worst, abs(intersection_time(e, n) - ref), abs(fast - ref))
            pairs += 1
    # defect suprema over the same betas for n <= 500 and n <= 1000
    ratios, sups, bounded = {}, {}, {}
    for d in DS:
        traces, _ = cstar_run(d)
        for coef, out in ((DEFECT_COEFFICIENT, ratios), (BOUNDED_DEFECT_COEFFICIENT, bounded)):
            sup_half = max(float(tr.defects(coef)[:500].max()) for tr in traces)
            sup_full = max(float(tr.defects(coef).max()) for tr in traces)
            out[d] = sup_full / sup_half
            if coef == DEFECT_COEFFICIENT:
                sups[d] = sup_full
    stable = all(abs(r - 1) <= 0.10 for r in ratios.values())
    ok = worst <= 1e-8 and stable
    report(
        3, ok, "intersection time vs bisection oracle",
        f"{pairs} pairs, max |t_closed - t_oracle| = {worst:.2e}; 3/2-defect sup ratio (n<=1000 / n<=500) "
        + ", ".join(f"d={d}: {ratios[d]:.4f} (sup {sups[d]:.2f})" for d in DS)
        + "; with coefficient 1/2: " + ", ".join(f"d={d}: {r:.4f}" for d, r in bounded.items()),
    )
    assert ok


# --- 4. real continued-fraction baseline ---------------------------------------------


def test_criterion_4_galambos():
    rep = galambos_baseline(10_000, 10_000, SEED)
    ok = rep.ks_distance < 0.05
    report(
        4, ok, "real CF maxima vs exp(-1/y)",
        f"N=M=10^4, KS {rep.ks_distance:.4f}, fitted scale {rep.fitted_scale:.4f}, "
        f"P(a_1 = 1) {rep.p_first_digit_one:.4f}, restarts {rep.restarts}",
    )
    assert ok


# --- 5. Frechet law ------------------------------------------------------------------------


def test_criterion_5_frechet():
    parts = []
    ok = True
    for d in DS:
        H = tail_estimate(d).H_hat
        C = H**-0.5
        sample = maxdigit_sample(d)
        x = sample.maxima / math.sqrt(sample.N)
        ks = ks_distance(x / C, frechet_cdf)
        fitted, ks_fit = fit_scale(x, frechet_cdf)
        ratio = float(np.median(sample.checkpoints[4000]) / np.median(sample.maxima))
        scale_err = abs(fitted / C - 1)
        d_ok = ks < 0.05 and abs(ratio / 2 - 1) <= 0.15 and scale_err <= 0.10
        ok &= d_ok
        parts.append(
            f"d={d}: H={H:.3f} KS(C=H^-1/2)={ks:.3f} median ratio {ratio:.3f} fitted C {fitted:.3f} "
            f"(KS {ks_fit:.3f}) vs H^-1/2={C:.3f} vs sqrt(H)={math.sqrt(H):.3f}"
        )
    report(5, ok, "Frechet law of maximal digits (C = H^-1/2)", "; ".join(parts))
    assert ok


# --- 6. tail plateau ---------------------------------------------------------------------


def test_criterion_6_tail_plateau():
    parts = []
    ok = True
    for d in DS:
        est = tail_estimate(d)
        ok &= est.spread < 0.10
        parts.append(f"d={d}: H={est.H_hat:.3f}+-{est.H_stderr:.3f} spread {est.spread:.3f}")
    leb, se = lebesgue_tail_constant(1, 100.0, 2_000_000, seed=SEED)
    leb_ok = abs(leb / math.pi - 1) < 0.05
    ok &= leb_ok
    parts.append(f"Lebesgue d=1 t=100: {leb:.4f}+-{se:.4f} vs pi")
    report(6, ok, "t^2 tail plateau at L=10^7", "; ".join(parts))
    assert ok


# --- 7. growth constant --------------------------------------------------------------------


def test_criterion_7_growth_constant():
    parts = []
    ok = True
    for d in DS:
        _, est = cstar_run(d)
        ok &= est.agreement_flag
        z = abs(est.c_star - est.cross_estimator) / est.combined_stderr
        parts.append(f"d={d}: C*={est.c_star:.4f}+-{est.stderr:.4f} vs {est.cross_estimator:.4f} ({z:.2f} se)")
    report(7, ok, "t*_n/n vs 2 log|q_n|/n, 10^3 betas, n=10^3", "; ".join(parts))
    assert ok


# --- 8. cusp excursions ---------------------------------------------------------------------


def test_criterion_8_excursions():
    parts = []
    ok = True
    T = 500.0
    for d in DS:
        c_d = frechet_fit(maxdigit_sample(d)).fitted_scale
        c_star = cstar_run(d)[1].c_star
        rep = theorem2_experiment(d, T, 10_000, SEED, c_d=c_d, c_star=c_star, direct=100)
        rep4 = theorem2_experiment(d, 4 * T, 10_000, SEED + 1, c_d=c_d, c_star=c_star, direct=0)
        ks_T = ks_two_sample(rep.statistic, rep4.statistic)
        d_ok = abs(rep.alpha_hat - rep.alpha_fit) < 0.1 and ks_T < 0.05 and rep.gap_p95 < 2.0
        ok &= d_ok
        parts.append(
            f"d={d}: alpha_hat {rep.alpha_hat:.3f} vs fit {rep.alpha_fit:.3f}, KS(T,4T) {ks_T:.3f}, "
            f"gap p95 {rep.gap_p95:.2e} ({len(rep.gaps)} geodesics)"
        )
    report(8, ok, "cusp-excursion statistic at T=500", "; ".join(parts))
    assert ok


# --- 9. reproducibility ---------------------------------------------------------------------

CLI_RUNS = [
    ["expand", "--d", "7", "--z", "1/3-1/5w", "--format", "json"],
    ["frechet", "--d", "2", "--N", "150", "--M", "40", "--L", "30000"],
    ["excursions", "--d", "11", "--M", "4"],
    ["theorem2", "--d", "3", "--T", "60", "--M", "30", "--N", "100"],
    ["galambos", "--N", "2000", "--M", "500"],
    ["tail", "--d", "1", "--L", "30000"],
]


def _run_cli(args, out: Path, threads: int):
    out.mkdir(parents=True, exist_ok=True)
    res = subprocess.run(
        [sys.executable, "-m", "bianchi_cf.cli", *args, "--seed", "99", "--out", str(out), "--threads", str(threads)],
        capture_output=True, check=False,
    )
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    files["<stdout>"] = res.stdout
    return res.returncode, files


def test_criterion_9_reproducibility(tmp_path):
    mismatches = []
    n_files = 0
    for i, args in enumerate(CLI_RUNS):
        outs = [_run_cli(args, tmp_path / f"{i}-{tag}", th) for tag, th in (("a", 1), ("b", 1), ("c", 2))]
        codes = {o[0] for o in outs}
        ref = outs[0][1]
        n_files += len(ref) - 1
        if len(codes) != 1 or codes & {1, 2, 3}:
            mismatches.append(f"{args[0]} exit codes {sorted(codes)}")
        for _, files in outs[1:]:
            if files != ref:
                mismatches.append(args[0])
    ok = not mismatches
    report(
        9, ok, "byte-identical outputs across reruns and thread counts",
        f"{len(CLI_RUNS)} commands x 3 runs (threads 1, 1, 2), {n_files} files; mismatches: {mismatches or 'none'}",
    )
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
