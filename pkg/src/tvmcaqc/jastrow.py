"""Complex two-body Jastrow states.

``log Psi(s) = sum_i J1_i s_i + sum_(i,j) J2_ij s_i s_j``. The ansatz is linear in
its parameters, so the log-derivatives ``O_k`` are the spin products themselves
and do not depend on the parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .instances import ProblemInstance, as_spins, classical_energy


class Support(str, Enum):
    GRAPH_EDGES = "GRAPH_EDGES"
    ALL_PAIRS = "ALL_PAIRS"


class ParamIndex(NamedTuple):
    kind: str  # "one" or "two"
    sites: tuple[int, ...]
    flat_index: int


@dataclass(frozen=True)
class JastrowParams:
    j1: np.ndarray
    j2: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    support: Support = Support.GRAPH_EDGES

    def __post_init__(self):
        n = len(self.j1)
        if not (len(self.j2) == len(self.pair_i) == len(self.pair_j)):
            raise ValueError("j2 and pair index arrays must have equal length")
        if len(self.pair_i) and (self.pair_i.min() < 0 or self.pair_j.max() >= n):
            raise ValueError("pair index out of range")

    @property
    def n_sites(self) -> int:
        return len(self.j1)

    @property
    def n_params(self) -> int:
        return len(self.j1) + len(self.j2)

    @classmethod
    def zeros(cls, inst: ProblemInstance, support: Support | str = Support.GRAPH_EDGES):
        support = Support(support)
        if support is Support.ALL_PAIRS:
            pi, pj = np.triu_indices(inst.n_sites, k=1)
        else:
            nz = [(i, j) for i, j, v in inst.edges if v != 0.0]
            pi = np.array([p[0] for p in nz], dtype=np.intp)
            pj = np.array([p[1] for p in nz], dtype=np.intp)
        return cls(
            np.zeros(inst.n_sites, complex),
            np.zeros(len(pi), complex),
            pi.astype(np.intp),
            pj.astype(np.intp),
            support,
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([self.j1, self.j2])

    def with_flat(self, alpha) -> "JastrowParams":
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {alpha.shape}")
        n = self.n_sites
        return JastrowParams(alpha[:n].copy(), alpha[n:].copy(), self.pair_i, self.pair_j, self.support)

    def index(self, k: int) -> ParamIndex:
        if not 0 <= k < self.n_params:
            raise IndexError(k)
        n = self.n_sites
        if k < n:
            return ParamIndex("one", (k,), k)
        return ParamIndex("two", (int(self.pair_i[k - n]), int(self.pair_j[k - n])), k)

    def pair_matrix(self) -> np.ndarray:
        """Symmetric complex matrix with ``W[i, j] = J2_ij`` on parameterized pairs."""
        w = np.zeros((self.n_sites, self.n_sites), complex)
        w[self.pair_i, self.pair_j] = self.j2
        w[self.pair_j, self.pair_i] = self.j2
        return w

    def pair_lookup(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): k for k, (i, j) in enumerate(zip(self.pair_i, self.pair_j))}

    def incidence(self) -> np.ndarray:
        """``(K, n)`` 0/1 matrix: parameter ``k`` touches site ``i``."""
        n, m = self.n_sites, len(self.j2)
        inc = np.zeros((self.n_params, n))
        inc[np.arange(n), np.arange(n)] = 1.0
        inc[n + np.arange(m), self.pair_i] = 1.0
        inc[n + np.arange(m), self.pair_j] = 1.0
        return inc

    def to_pairs(self) -> list[list[float]]:
        """Snapshot format: ``[re, im]`` per parameter in flat order."""
        return [[float(z.real), float(z.imag)] for z in self.flat()]


def _check(p: JastrowParams, cfg) -> np.ndarray:
    return as_spins(cfg, p.n_sites)


def log_psi(p: JastrowParams, cfg) -> complex:
    s = _check(p, cfg).astype(np.float64)
    return complex(p.j1 @ s + p.j2 @ (s[p.pair_i] * s[p.pair_j]))


def log_ratio_flip(p: JastrowParams, cfg, site: int) -> complex:
    """``log Psi(cfg with s_site negated) - log Psi(cfg)`` at cost O(degree)."""
    s = _check(p, cfg)
    if not 0 <= site < p.n_sites:
        raise IndexError(f"site {site} out of range for {p.n_sites} sites")
    field = p.j1[site]
    on_i = p.pair_i == site
    on_j = p.pair_j == site
    field = field + p.j2[on_i] @ s[p.pair_j[on_i]] + p.j2[on_j] @ s[p.pair_i[on_j]]
    return complex(-2.0 * s[site] * field)


def local_energy(p: JastrowParams, cfg, inst: ProblemInstance, gamma: float) -> complex:
    """``<s|H(gamma)|Psi> / <s|Psi>`` for ``H = -gamma sum X + (1 - gamma) H_p``."""
    s = _check(p, cfg)
    ratios = sum(np.exp(log_ratio_flip(p, s, i)) for i in range(p.n_sites))
    return complex((1.0 - gamma) * classical_energy(inst, s) - gamma * ratios)


def o_vector(p: JastrowParams, cfg) -> np.ndarray:
    s = _check(p, cfg).astype(np.float64)
    return np.concatenate([s, s[p.pair_i] * s[p.pair_j]])


# Batched forms used by exact summation and post-processing of sampled configs.

def o_matrix(p: JastrowParams, cfgs: np.ndarray) -> np.ndarray:
    s = np.asarray(cfgs, dtype=np.float64)
    return np.concatenate([s, s[:, p.pair_i] * s[:, p.pair_j]], axis=1)


def log_psi_batch(p: JastrowParams, cfgs: np.ndarray, o: np.ndarray | None = None) -> np.ndarray:
    if o is None:
        o = o_matrix(p, cfgs)
    return o @ p.flat()


def log_ratios_batch(p: JastrowParams, cfgs: np.ndarray) -> np.ndarray:
    """``(n_cfg, n_sites)`` single-flip log ratios."""
    s = np.asarray(cfgs, dtype=np.float64)
    return -2.0 * s * (p.j1 + s @ p.pair_matrix())


def local_energy_batch(p: JastrowParams, cfgs: np.ndarray, inst: ProblemInstance, gamma: float) -> np.ndarray:
    flips = np.exp(log_ratios_batch(p, cfgs)).sum(axis=1)
    return (1.0 - gamma) * classical_energy(inst, cfgs) - gamma * flips


def boltzmann_params(inst: ProblemInstance, beta: float, support=Support.GRAPH_EDGES) -> JastrowParams:
    """Parameters whose ``|Psi|^2`` is the classical Gibbs weight at inverse temperature ``beta``."""
    p = JastrowParams.zeros(inst, support)
    lookup = p.pair_lookup()
    j2 = p.j2.copy()
    for i, j, v in inst.edges:
        if (i, j) in lookup:
            j2[lookup[(i, j)]] = -beta * v / 2.0
    return JastrowParams(p.j1, j2, p.pair_i, p.pair_j, p.support)
