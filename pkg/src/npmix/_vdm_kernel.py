"""Jitted inner loop for the vertex-direction solver (built-in kernels only).

The loop maintains the model PMF ``mu`` on the observed support
incrementally, so one iteration costs O(grid + refine + line-search)
scalar operations.  Atoms are kept in sorted order with a bounded
capacity: when the buffer fills, the closest adjacent pairs (which carry
the tiniest perturbation when merged at their weighted mean) are
consolidated.  Divergence and kernel dispatch is by integer code; the
codes mirror ``divergences.DIV_CODE`` and ``kernels.KERNEL_CODE_*``.
"""

import numpy as np
from numba import njit

STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1

_INVPHI = 0.6180339887498949


@njit(cache=True, nogil=True)
def _pmf_fill(kcode, lam, values, lgam, out):
    q = values.shape[0]
    if lam == 0.0:
        for t in range(q):
            out[t] = 1.0 if values[t] == 0.0 else 0.0
        return
    logl = np.log(lam)
    if kcode == 0:  # poisson
        for t in range(q):
            out[t] = np.exp(-lam + values[t] * logl - lgam[t])
    else:  # geometric
        log1m = np.log1p(-lam)
        for t in range(q):
            out[t] = np.exp(log1m + values[t] * logl)


@njit(cache=True, nogil=True)
def _phi_total(dcode, alphas, mu):
    s = 0.0
    for t in range(alphas.shape[0]):
        a = alphas[t]
        m = mu[t]
        if dcode == 0:  # hellinger2
            if m < 0.0:
                return np.inf
            s += -np.sqrt(a * m)
        elif dcode == 1:  # lecam
            if m < 0.0:
                return np.inf
            s += -2.0 * a * m / (a + m)
        elif dcode == 2:  # js
            if m < 0.0:
                return np.inf
            s += -a * np.log1p(m / a)
            if m > 0.0:
                s += -m * np.log1p(a / m)
        elif dcode == 3:  # kl
            if m <= 0.0:
                return np.inf
            s += a * np.log(a / m)
        else:  # chi2
            if m < 1e-300:
                return np.inf
            s += a * a / m
    return s


@njit(cache=True, nogil=True)
def _dphi(dcode, a, m):
    if dcode == 0:
        return -0.5 * np.sqrt(a / m)
    elif dcode == 1:
        r = a / (a + m)
        return -2.0 * r * r
    elif dcode == 2:
        return -np.log1p(a / m)
    elif dcode == 3:
        return -a / m
    else:
        r = a / m
        return -r * r


@njit(cache=True, nogil=True)
def _dir_at(kcode, lam, values, lgam, c, base, buf):
    _pmf_fill(kcode, lam, values, lgam, buf)
    s = -base
    for t in range(values.shape[0]):
        s += buf[t] * c[t]
    return s


@njit(cache=True, nogil=True)
def _consolidate(locs, wts, na, target):
    while na > target:
        bi = 0
        bg = 1.8e308
        for i in range(na - 1):
            gp = locs[i + 1] - locs[i]
            if gp < bg:
                bg = gp
                bi = i
        tot = wts[bi] + wts[bi + 1]
        locs[bi] = (wts[bi] * locs[bi] + wts[bi + 1] * locs[bi + 1]) / tot
        wts[bi] = tot
        for i in range(bi + 1, na - 1):
            locs[i] = locs[i + 1]
            wts[i] = wts[i + 1]
        na -= 1
    return na


@njit(cache=True, nogil=True)
def vdm_loop(kcode, dcode, values, lgam, alphas, grid, P_grid,
             locs0, wts0, tau, max_iter, refine_iters, eps_iters,
             merge_radius, prune_eps, cap, trace_every):
    """Run vertex-direction iterations from a warm start.

    Returns (locs, wts, status, n_iters, trace_obj, trace_mindd,
    trace_atoms, trace_newloc) with trace rows at every ``trace_every``-th
    iteration plus the exit iteration.
    """
    q = values.shape[0]
    M = grid.shape[0]

    locs = np.empty(cap)
    wts = np.empty(cap)
    na = locs0.shape[0]
    for i in range(na):
        locs[i] = locs0[i]
        wts[i] = wts0[i]

    mu = np.zeros(q)
    fbuf = np.empty(q)
    mbuf = np.empty(q)
    for i in range(na):
        _pmf_fill(kcode, locs[i], values, lgam, fbuf)
        for t in range(q):
            mu[t] += wts[i] * fbuf[t]

    c = np.empty(q)
    n_slots = max_iter // trace_every + 2
    trace_obj = np.empty(n_slots)
    trace_mindd = np.empty(n_slots)
    trace_atoms = np.empty(n_slots, dtype=np.int64)
    trace_newloc = np.empty(n_slots)
    n_tr = 0

    status = STATUS_MAX_ITERS
    it = 0
    for it in range(max_iter):
        for t in range(q):
            c[t] = _dphi(dcode, alphas[t], mu[t])
        base = 0.0
        for t in range(q):
            base += c[t] * mu[t]

        # coarse scan; ties resolve to the smallest grid location
        jbest = 0
        sbest = 1.8e308
        for m_ in range(M):
            s = 0.0
            for t in range(q):
                s += P_grid[m_, t] * c[t]
            if s < sbest:
                sbest = s
                jbest = m_
        dgrid = sbest - base

        # golden-section refinement inside the bracketing cell
        a = grid[jbest - 1] if jbest > 0 else grid[0]
        b = grid[jbest + 1] if jbest < M - 1 else grid[M - 1]
        x1 = b - _INVPHI * (b - a)
        x2 = a + _INVPHI * (b - a)
        f1 = _dir_at(kcode, x1, values, lgam, c, base, fbuf)
        f2 = _dir_at(kcode, x2, values, lgam, c, base, fbuf)
        for _ in range(refine_iters):
            if f1 <= f2:
                b = x2
                x2 = x1
                f2 = f1
                x1 = b - _INVPHI * (b - a)
                f1 = _dir_at(kcode, x1, values, lgam, c, base, fbuf)
            else:
                a = x1
                x1 = x2
                f1 = f2
                x2 = a + _INVPHI * (b - a)
                f2 = _dir_at(kcode, x2, values, lgam, c, base, fbuf)
        if f1 <= f2:
            lam = x1
            dref = f1
        else:
            lam = x2
            dref = f2
        if dgrid < dref:
            lam = grid[jbest]
            dmin = dgrid
        else:
            dmin = dref

        record = (it % trace_every == 0) or dmin >= -tau
        if record:
            trace_obj[n_tr] = _phi_total(dcode, alphas, mu)
            trace_mindd[n_tr] = dmin
            trace_atoms[n_tr] = na
            trace_newloc[n_tr] = lam if dmin < -tau else np.nan
            n_tr += 1

        if dmin >= -tau:
            status = STATUS_CONVERGED
            break

        _pmf_fill(kcode, lam, values, lgam, fbuf)

        # exact-ish line search for the mixing coefficient on [0, 1]
        a = 0.0
        b = 1.0
        x1 = b - _INVPHI * (b - a)
        x2 = a + _INVPHI * (b - a)
        for t in range(q):
            mbuf[t] = mu[t] + x1 * (fbuf[t] - mu[t])
        f1 = _phi_total(dcode, alphas, mbuf)
        for t in range(q):
            mbuf[t] = mu[t] + x2 * (fbuf[t] - mu[t])
        f2 = _phi_total(dcode, alphas, mbuf)
        for _ in range(eps_iters):
            if f1 <= f2:
                b = x2
                x2 = x1
                f2 = f1
                x1 = b - _INVPHI * (b - a)
                for t in range(q):
                    mbuf[t] = mu[t] + x1 * (fbuf[t] - mu[t])
                f1 = _phi_total(dcode, alphas, mbuf)
            else:
                a = x1
                x1 = x2
                f1 = f2
                x2 = a + _INVPHI * (b - a)
                for t in range(q):
                    mbuf[t] = mu[t] + x2 * (fbuf[t] - mu[t])
                f2 = _phi_total(dcode, alphas, mbuf)
        eps = 0.5 * (a + b)

        for t in range(q):
            mu[t] = mu[t] + eps * (fbuf[t] - mu[t])

        # atom bookkeeping: scale, insert-or-merge, prune, renormalize
        for i in range(na):
            wts[i] *= (1.0 - eps)
        pos = np.searchsorted(locs[:na], lam)
        merged = False
        if pos > 0 and lam - locs[pos - 1] <= merge_radius:
            w0 = wts[pos - 1]
            locs[pos - 1] = (w0 * locs[pos - 1] + eps * lam) / (w0 + eps)
            wts[pos - 1] = w0 + eps
            merged = True
        elif pos < na and locs[pos] - lam <= merge_radius:
            w0 = wts[pos]
            locs[pos] = (w0 * locs[pos] + eps * lam) / (w0 + eps)
            wts[pos] = w0 + eps
            merged = True
        if not merged:
            if na >= cap:
                na = _consolidate(locs, wts, na, cap // 2)
                pos = np.searchsorted(locs[:na], lam)
            for i in range(na, pos, -1):
                locs[i] = locs[i - 1]
                wts[i] = wts[i - 1]
            locs[pos] = lam
            wts[pos] = eps
            na += 1
        k = 0
        for i in range(na):
            if wts[i] >= prune_eps:
                locs[k] = locs[i]
                wts[k] = wts[i]
                k += 1
        if k > 0:
            na = k
        s = 0.0
        for i in range(na):
            s += wts[i]
        for i in range(na):
            wts[i] /= s

    n_iters = it + 1 if max_iter > 0 else 0
    return (locs[:na].copy(), wts[:na].copy(), status, n_iters,
            trace_obj[:n_tr].copy(), trace_mindd[:n_tr].copy(),
            trace_atoms[:n_tr].copy(), trace_newloc[:n_tr].copy())
