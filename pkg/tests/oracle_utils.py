"""Redundant brute-force constructions used only as test oracles."""

import itertools
from functools import reduce

import numpy as np

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def basis_configs(n):
    """Row b has sigma_i = 1 - 2 * bit_i(b), matching the package convention."""
    return np.array([[1 - 2 * ((b >> i) & 1) for i in range(n)] for b in range(2**n)], dtype=float)


def pauli_on(op, site, n):
    # bit i is the i-th kron factor from the right
    mats = [op if k == site else I2 for k in reversed(range(n))]
    return reduce(np.kron, mats)


def dense_hamiltonian(inst, gamma):
    n = inst.n_sites
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        h -= gamma * pauli_on(X, i, n)
    for i, j, v in inst.edges:
        h += (1 - gamma) * v * pauli_on(Z, i, n) @ pauli_on(Z, j, n)
    return h


def amplitude_table(p):
    n = p.n_sites
    out = np.empty(2**n, dtype=complex)
    for b, s in enumerate(basis_configs(n)):
        e = sum(p.j1[i] * s[i] for i in range(n))
        e += sum(z * s[i] * s[j] for z, i, j in zip(p.j2, p.pair_i, p.pair_j))
        out[b] = np.exp(e)
    return out


def exact_moments(p, inst, gamma):
    """Exact <O>, S, f, <E_loc> from the dense Hamiltonian and the amplitude table."""
    psi = amplitude_table(p)
    prob = np.abs(psi) ** 2
    prob /= prob.sum()
    cfgs = basis_configs(p.n_sites)
    o = np.hstack([cfgs, cfgs[:, p.pair_i] * cfgs[:, p.pair_j]])
    eloc = (dense_hamiltonian(inst, gamma) @ psi) / psi
    mo = prob @ o
    s = (o * prob[:, None]).T @ o - np.outer(mo, mo)
    el = prob @ eloc
    f = (prob * eloc) @ o - el * mo
    return mo, s, f, el, prob


def ising_brute_ground(inst):
    best, configs = np.inf, []
    for s in itertools.product((1, -1), repeat=inst.n_sites):
        e = sum(v * s[i] * s[j] for i, j, v in inst.edges)
        if e < best - 1e-9:
            best, configs = e, [s]
        elif abs(e - best) <= 1e-9:
            configs.append(s)
    return best, configs
