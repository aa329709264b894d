"""Compiled per-replication simulation kernel.

The generation loop (claim drawing, merged-list service, reproduction)
is the hot path; this module holds the numba version. A pure-numpy
implementation of the same semantics lives in ``simulator`` and is used
when the python backend is selected.

Binomial-type draws are done per individual (Bernoulli counting for
integration, inverse-CDF table lookup for offspring): numba's bulk
binomial sampler is measurably biased in the large-mean regime, so the
kernel avoids it entirely.

Claim-kind codes: 0 = beta(a, b), 1 = uniform(lo, hi), 2 = empirical.
Immigration modes: 0 = none, 1 = proportional to home, 2 = constant.
"""

from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA

if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover - exercised only without numba installed

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True, nogil=True)
def _offspring_total(n, cum_pmf, klen):
    """Total offspring of n individuals, one inverse-CDF draw each."""
    total = 0
    for _ in range(n):
        u = np.random.random()
        k = np.searchsorted(cum_pmf[:klen], u, side="right")
        if k >= klen:
            k = klen - 1
        total += k
    return total


@njit(cache=True, nogil=True)
def _bernoulli_count(n, p):
    """Exact Binomial(n, p) as a count of Bernoulli successes."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    c = 0
    for _ in range(n):
        if np.random.random() < p:
            c += 1
    return c


@njit(cache=True, nogil=True)
def _fill_claims(buf, start, n, kind, pa, pb, emp_vals, emp_lo, emp_hi):
    if kind == 0:
        for j in range(n):
            buf[start + j] = np.random.beta(pa, pb)
    elif kind == 1:
        for j in range(n):
            buf[start + j] = np.random.uniform(pa, pb)
    else:
        m = emp_hi - emp_lo
        for j in range(n):
            buf[start + j] = emp_vals[emp_lo + np.random.randint(0, m)]


@njit(cache=True, nogil=True)
def simulate_block(
    kinds,
    pa,
    pb,
    emp_vals,
    emp_off,
    pmf,
    pmf_len,
    r,
    phi,
    imm_mode,
    imm_val,
    g0,
    s0,
    generations,
    cap,
    seeds,
    out,
    status,
    rep_lo,
    rep_hi,
):
    """Run replications [rep_lo, rep_hi) writing one row per generation.

    Row layout: g_h, g_i, g_ni, immigrants, served_h, served_i,
    served_ni, resource_space, threshold. Counts are the claimant
    effectives of the generation (after integration and arrivals).
    """
    for rep in range(rep_lo, rep_hi):
        np.random.seed(seeds[rep])
        h = g0[0]
        i_ = g0[1]
        carry_ni = g0[2]
        s = s0
        for t in range(generations):
            integ = _bernoulli_count(i_, phi)
            x = h + integ
            y = i_ - integ
            if imm_mode == 1:
                it = int(np.rint(imm_val * x))
            elif imm_mode == 2:
                it = int(np.rint(imm_val))
            else:
                it = 0
            z = carry_ni + it
            carry_ni = 0
            total = x + y + z
            if total > cap:
                status[rep] = 1
                break
            out[rep, t, 0] = x
            out[rep, t, 1] = y
            out[rep, t, 2] = z
            out[rep, t, 3] = it
            out[rep, t, 7] = s
            if total == 0:
                out[rep, t, 4] = 0
                out[rep, t, 5] = 0
                out[rep, t, 6] = 0
                out[rep, t, 8] = np.nan
                h = 0
                i_ = 0
                s = 0.0
                continue
            ch = np.empty(x)
            ci = np.empty(y)
            cni = np.empty(z)
            _fill_claims(ch, 0, x, kinds[0], pa[0], pb[0], emp_vals, emp_off[0], emp_off[1])
            _fill_claims(ci, 0, y, kinds[1], pa[1], pb[1], emp_vals, emp_off[1], emp_off[2])
            _fill_claims(cni, 0, z, kinds[2], pa[2], pb[2], emp_vals, emp_off[2], emp_off[3])
            ch.sort()
            ci.sort()
            cni.sort()
            # serve the merged order statistics smallest-first against s,
            # ties resolved in class order (home, immigrant, new immigrant)
            spent = 0.0
            sh = 0
            si = 0
            sni = 0
            thr = np.nan
            while True:
                vh = ch[sh] if sh < x else np.inf
                vi = ci[si] if si < y else np.inf
                vni = cni[sni] if sni < z else np.inf
                if vh <= vi and vh <= vni:
                    v = vh
                    cls = 0
                elif vi <= vni:
                    v = vi
                    cls = 1
                else:
                    v = vni
                    cls = 2
                if v == np.inf or spent + v > s:
                    break
                spent += v
                thr = v
                if cls == 0:
                    sh += 1
                elif cls == 1:
                    si += 1
                else:
                    sni += 1
            out[rep, t, 4] = sh
            out[rep, t, 5] = si
            out[rep, t, 6] = sni
            out[rep, t, 8] = thr
            h = _offspring_total(sh, pmf[0], pmf_len[0])
            i_ = _offspring_total(si, pmf[1], pmf_len[1]) + _offspring_total(
                sni, pmf[2], pmf_len[2]
            )
            s = r[0] * h + r[1] * i_ + r[2] * z
