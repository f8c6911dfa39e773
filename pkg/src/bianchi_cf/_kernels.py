"""Float kernels for the digit engine (numba-compiled when available).

``digit_batch`` runs the Gauss map in double precision while carrying a
rigorous bound on the distance between the float iterate and the true one.
A digit is accepted only when the float point sits deeper inside its Voronoi
cell than that bound, so every accepted digit is the exact digit.
"""

from __future__ import annotations

import math

import numpy as np

try:
    import numba as nb

    njit = nb.njit(cache=True, nogil=True)
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(f):
        return f


EPS = 2.0**-53
# composed transfer-matrix entries must stay exactly representable in int64
ENTRY_LIMIT = 2.0**50


@njit
def digit_batch(zr, zi, err, d, max_k, max_err, digits, tails):
    """Advance the float orbit z -> 1/z - a for up to ``max_k`` certified digits.

    digits: int64[max_k, 2] receives (n, m); tails: complex128[max_k] receives
    the float iterates.  The batch stops early once the error bound would
    exceed ``max_err``.  Returns (k, A, B, C, D) where the ring elements
    A..D (each as (n, m) int64) compose the k Euclid steps
    (u, v) -> (v, u - a v):  u_k = A u + B v,  v_k = C u + D v.
    """
    is3 = d % 4 == 3
    kk = (d + 1) // 4
    if is3:
        omr = -0.5
        omi = math.sqrt(d) / 2.0
    else:
        omr = 0.0
        omi = math.sqrt(d)
    root1 = math.sqrt(1.0 + d)
    An, Am, Bn, Bm = 1, 0, 0, 0
    Cn, Cm, Dn, Dm = 0, 0, 1, 0
    k = 0
    while k < max_k:
        az = math.hypot(zr, zi)
        if az <= 8.0 * err or az == 0.0:
            break
        den = zr * zr + zi * zi
        wr = zr / den
        wi = -zi / den
        aw = 1.0 / az
        err_w = err / (az * (az - err)) + 8.0 * EPS * aw
        # nearest lattice point: best of the rounded points on three rows
        t = wi / omi
        r0 = float(math.floor(t + 0.5))
        best = math.inf
        an = 0.0
        am = 0.0
        for j in range(3):
            r = r0 + (j - 1.0)
            n = float(math.floor(wr - r * omr + 0.5))
            ex = wr - n - r * omr
            ey = wi - r * omi
            dd = ex * ex + ey * ey
            if dd < best:
                best = dd
                an = n
                am = r
        dt = t - am
        ds = wr - t * omr - an
        if is3:
            xx = ds - dt / 2.0
            ysq = dt * d / 2.0
            slack = min(0.5 - abs(xx), ((d + 1) / 4.0 - abs(xx) - abs(ysq)) / root1)
        else:
            slack = min(0.5 - abs(ds), (0.5 - abs(dt)) * math.sqrt(d))
        if slack <= 4.0 * err_w + 32.0 * EPS * (aw + 1.0) or err_w > max_err:
            break
        cmax = max(abs(Cn), abs(Cm), abs(Dn), abs(Dm), abs(An), abs(Am), abs(Bn), abs(Bm))
        if (abs(an) + abs(am) + 1.0) * (float(cmax) + 1.0) * (kk + d + 2) > ENTRY_LIMIT:
            break
        ian = np.int64(an)
        iam = np.int64(am)
        # C' = A - a C,  D' = B - a D  (ring products)
        if is3:
            nCn = An - (ian * Cn - kk * iam * Cm)
            nCm = Am - (ian * Cm + iam * Cn - iam * Cm)
            nDn = Bn - (ian * Dn - kk * iam * Dm)
            nDm = Bm - (ian * Dm + iam * Dn - iam * Dm)
        else:
            nCn = An - (ian * Cn - d * iam * Cm)
            nCm = Am - (ian * Cm + iam * Cn)
            nDn = Bn - (ian * Dn - d * iam * Dm)
            nDm = Bm - (ian * Dm + iam * Dn)
        An, Am, Bn, Bm = Cn, Cm, Dn, Dm
        Cn, Cm, Dn, Dm = nCn, nCm, nDn, nDm
        zr = wr - (an + am * omr)
        zi = wi - am * omi
        err = err_w + 4.0 * EPS * (aw + 1.0)
        digits[k, 0] = ian
        digits[k, 1] = iam
        tails[k] = complex(zr, zi)
        k += 1
    return k, An, Am, Bn, Bm, Cn, Cm, Dn, Dm


@njit
def real_gauss_maxima(x, backup, N):
    """Regular continued fraction digits of each x[i] in (0, 1) for N steps.

    Returns (max digit, second largest digit, restarts) per sample.  A float
    orbit that lands exactly on 0 is restarted from backup[i] (counted).
    """
    M = x.shape[0]
    mx = np.zeros(M, dtype=np.float64)
    second = np.zeros(M, dtype=np.float64)
    hits = np.zeros(M, dtype=np.int64)
    for i in range(M):
        z = x[i]
        best = 0.0
        nxt = 0.0
        for _ in range(N):
            if z <= 0.0:
                hits[i] += 1
                z = backup[i]
                backup[i] = (backup[i] + 0.6180339887498949) % 1.0
            w = 1.0 / z
            a = math.floor(w)
            z = w - a
            if a > best:
                nxt = best
                best = a
            elif a > nxt:
                nxt = a
        mx[i] = best
        second[i] = nxt
    return mx, second, hits


@njit
def excursion_arrays(digits, tails, omr, omi, state, t_out, apex_out, lognq_out, ratio_out, logg_out):
    """Intersection times and apex heights from digits and float tails G^n.

    ``state`` = [Re Q, Im Q, log N(q_{n-1}), started] carries Q = q_n/q_{n-1}
    across calls.  For each digit it writes t_n, the apex height
    |G^n + Q_n|/2, log N(q_n), |q_{n-1}/q_n| and log|G^n|.
    """
    Qr, Qi, lognq, started = state[0], state[1], state[2], state[3]
    for i in range(digits.shape[0]):
        ar = digits[i, 0] + digits[i, 1] * omr
        ai = digits[i, 1] * omi
        if started == 0.0:
            Qr, Qi = ar, ai
            started = 1.0
        else:
            den = Qr * Qr + Qi * Qi
            Qr, Qi = ar + Qr / den, ai - Qi / den
        q2 = Qr * Qr + Qi * Qi
        g = tails[i]
        gr, gi = g.real, g.imag
        g2 = gr * gr + gi * gi
        # crossing of the unit hemisphere by the geodesic from -Q to G^n
        gap = q2 - g2
        dr, di = -Qr - gr, -Qi - gi
        r = math.sqrt((1.0 - g2) * (q2 - 1.0)) * math.sqrt(dr * dr + di * di) / gap
        zr = gr + (1.0 - g2) * dr / gap
        zi = gi + (1.0 - g2) * di / gap
        wr, wi = zr + Qr, zi + Qi
        t_out[i] = lognq + math.log((wr * wr + wi * wi) / r + r)
        sr, si = gr + Qr, gi + Qi
        apex_out[i] = 0.5 * math.sqrt(sr * sr + si * si)
        lognq += math.log(q2)
        lognq_out[i] = lognq
        ratio_out[i] = 1.0 / math.sqrt(q2)
        logg_out[i] = 0.5 * math.log(g2) if g2 > 0.0 else -math.inf
    state[0], state[1], state[2], state[3] = Qr, Qi, lognq, started
