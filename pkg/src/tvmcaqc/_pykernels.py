"""Numpy fallback for the compiled kernels; vectorized across chains.

Same signatures and the same pre-drawn randomness as ``_ckernels``, so both
backends produce the same chains.
"""

import numpy as np

BACKEND = "python"


def _dense(n, nbr_ptr, nbr_idx, values):
    m = np.zeros((n, n), dtype=np.result_type(values, np.float64))
    rows = np.repeat(np.arange(n), np.diff(nbr_ptr))
    m[rows, nbr_idx] = values
    return m


def metropolis_chains(cfgs, j1_re, j1_im, nbr_ptr, nbr_idx, nbr_w_re, nbr_w_im, nbr_v,
                      gamma, uniforms, n_burn, record_every, n_rec):
    n_chains, n = cfgs.shape
    w = _dense(n, nbr_ptr, nbr_idx, np.asarray(nbr_w_re) + 1j * np.asarray(nbr_w_im))
    v = _dense(n, nbr_ptr, nbr_idx, np.asarray(nbr_v))
    s = cfgs.astype(np.float64)
    f = (np.asarray(j1_re) + 1j * np.asarray(j1_im)) + s @ w
    g = s @ v
    ecl = 0.5 * np.einsum("ci,ci->c", g, s)
    rows = np.arange(n_chains)

    records = np.empty((n_chains, n_rec, n), dtype=np.int8)
    eloc = np.empty((n_chains, n_rec), dtype=np.complex128)
    ecl_out = np.empty((n_chains, n_rec))
    accepted = np.zeros(n_chains, dtype=np.int64)

    step = 0
    for r in range(-1, n_rec):
        for _ in range(n_burn if r < 0 else record_every):
            x = uniforms[:, step] * n
            i = x.astype(np.intp)
            x -= i
            si = s[rows, i]
            delta = -4.0 * si * f[rows, i].real
            acc = (delta >= 0.0) | (x < np.exp(np.minimum(delta, 0.0)))
            if acc.any():
                c, ic, sc = rows[acc], i[acc], si[acc]
                ecl[c] -= 2.0 * sc * g[c, ic]
                f[c] -= 2.0 * sc[:, None] * w[ic]
                g[c] -= 2.0 * sc[:, None] * v[ic]
                s[c, ic] = -sc
                accepted[c] += 1
            step += 1
        if r >= 0:
            records[:, r] = s
            flips = np.exp(-2.0 * s * f).sum(axis=1)
            eloc[:, r] = (1.0 - gamma) * ecl - gamma * flips
            ecl_out[:, r] = ecl
    cfgs[...] = s.astype(np.int8)
    return records, eloc, ecl_out, accepted


def anneal_chains(cfgs, nbr_ptr, nbr_idx, nbr_v, betas, uniforms):
    n_chains, n = cfgs.shape
    v = _dense(n, nbr_ptr, nbr_idx, np.asarray(nbr_v))
    s = cfgs.astype(np.float64)
    g = s @ v
    e = 0.5 * np.einsum("ci,ci->c", g, s)
    step = 0
    for beta in betas:
        for i in range(n):
            de = -2.0 * s[:, i] * g[:, i]
            with np.errstate(over="ignore"):
                acc = (de <= 0.0) | (uniforms[:, step] < np.exp(-beta * np.maximum(de, 0.0)))
            if acc.any():
                sc = s[acc, i]
                e[acc] += de[acc]
                g[acc] -= 2.0 * sc[:, None] * v[i]
                s[acc, i] = -sc
            step += 1
    cfgs[...] = s.astype(np.int8)
    return e
