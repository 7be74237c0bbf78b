# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Metropolis sampling of |Psi|^2 and classical annealing sweeps.

Randomness is supplied by the caller as pre-drawn uniforms so the compiled and
the numpy kernels walk identical chains. A Metropolis proposal consumes one
uniform ``u``: the site is ``floor(u * n)`` and the acceptance draw is the
fractional part of ``u * n``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin

cnp.import_array()

BACKEND = "cython"


def metropolis_chains(
    signed char[:, ::1] cfgs,
    double[::1] j1_re,
    double[::1] j1_im,
    long[::1] nbr_ptr,
    long[::1] nbr_idx,
    double[::1] nbr_w_re,
    double[::1] nbr_w_im,
    double[::1] nbr_v,
    double gamma,
    double[:, ::1] uniforms,
    long n_burn,
    long record_every,
    long n_rec,
):
    cdef Py_ssize_t n_chains = cfgs.shape[0]
    cdef Py_ssize_t n = cfgs.shape[1]
    cdef Py_ssize_t c, i, j, q, t, r, step
    cdef double s, delta, ecl, er, ei, lr_re, lr_im, amp, x
    cdef long long acc

    records_np = np.empty((n_chains, n_rec, n), dtype=np.int8)
    eloc_np = np.empty((n_chains, n_rec), dtype=np.complex128)
    ecl_np = np.empty((n_chains, n_rec), dtype=np.float64)
    accepted_np = np.zeros(n_chains, dtype=np.int64)
    cdef signed char[:, :, ::1] records = records_np
    cdef double complex[:, ::1] eloc = eloc_np
    cdef double[:, ::1] ecl_out = ecl_np
    cdef long long[::1] accepted = accepted_np

    # per-site Jastrow field J1_i + sum_j W_ij s_j and classical field sum_j V_ij s_j
    cdef double[::1] f_re = np.empty(n)
    cdef double[::1] f_im = np.empty(n)
    cdef double[::1] g = np.empty(n)

    for c in range(n_chains):
        ecl = 0.0
        for i in range(n):
            f_re[i] = j1_re[i]
            f_im[i] = j1_im[i]
            g[i] = 0.0
            for q in range(nbr_ptr[i], nbr_ptr[i + 1]):
                j = nbr_idx[q]
                f_re[i] += nbr_w_re[q] * cfgs[c, j]
                f_im[i] += nbr_w_im[q] * cfgs[c, j]
                g[i] += nbr_v[q] * cfgs[c, j]
            ecl += 0.5 * g[i] * cfgs[c, i]
        acc = 0
        step = 0
        for r in range(-1, n_rec):
            if r < 0:
                t = n_burn
            else:
                t = record_every
            while t > 0:
                x = uniforms[c, step] * n
                i = <Py_ssize_t>x
                x -= i
                s = cfgs[c, i]
                delta = -4.0 * s * f_re[i]
                if delta >= 0.0 or x < exp(delta):
                    acc += 1
                    ecl -= 2.0 * s * g[i]
                    for q in range(nbr_ptr[i], nbr_ptr[i + 1]):
                        j = nbr_idx[q]
                        f_re[j] -= 2.0 * s * nbr_w_re[q]
                        f_im[j] -= 2.0 * s * nbr_w_im[q]
                        g[j] -= 2.0 * s * nbr_v[q]
                    cfgs[c, i] = <signed char>(-s)
                step += 1
                t -= 1
            if r >= 0:
                er = 0.0
                ei = 0.0
                for i in range(n):
                    s = cfgs[c, i]
                    records[c, r, i] = cfgs[c, i]
                    lr_re = -2.0 * s * f_re[i]
                    lr_im = -2.0 * s * f_im[i]
                    amp = exp(lr_re)
                    er += amp * cos(lr_im)
                    ei += amp * sin(lr_im)
                eloc[c, r] = (1.0 - gamma) * ecl - gamma * er - 1j * gamma * ei
                ecl_out[c, r] = ecl
        accepted[c] = acc
    return records_np, eloc_np, ecl_np, accepted_np


def anneal_chains(
    signed char[:, ::1] cfgs,
    long[::1] nbr_ptr,
    long[::1] nbr_idx,
    double[::1] nbr_v,
    double[::1] betas,
    double[:, ::1] uniforms,
):
    """Sequential-order Metropolis sweeps on exp(-beta E), one beta per sweep."""
    cdef Py_ssize_t n_chains = cfgs.shape[0]
    cdef Py_ssize_t n = cfgs.shape[1]
    cdef Py_ssize_t n_sweeps = betas.shape[0]
    cdef Py_ssize_t c, i, j, q, k, step
    cdef double s, de, e, beta
    energies_np = np.empty(n_chains)
    cdef double[::1] energies = energies_np
    cdef double[::1] g = np.empty(n)

    for c in range(n_chains):
        e = 0.0
        for i in range(n):
            g[i] = 0.0
            for q in range(nbr_ptr[i], nbr_ptr[i + 1]):
                g[i] += nbr_v[q] * cfgs[c, nbr_idx[q]]
            e += 0.5 * g[i] * cfgs[c, i]
        step = 0
        for k in range(n_sweeps):
            beta = betas[k]
            for i in range(n):
                s = cfgs[c, i]
                de = -2.0 * s * g[i]
                if de <= 0.0 or uniforms[c, step] < exp(-beta * de):
                    e += de
                    for q in range(nbr_ptr[i], nbr_ptr[i + 1]):
                        g[nbr_idx[q]] -= 2.0 * s * nbr_v[q]
                    cfgs[c, i] = <signed char>(-s)
                step += 1
        energies[c] = e
    return energies_np
