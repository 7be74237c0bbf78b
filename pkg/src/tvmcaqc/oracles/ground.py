"""Exhaustive classical ground states.

Enumeration conditions on a set of sites whose complement splits into small
connected components; each component is then minimized independently for a
whole batch of conditioning configurations. For Chimera graphs the vertical
shore is conditioned on and the horizontal shore falls apart into row paths,
so ``N = 32`` costs ``2**16`` instead of ``2**32`` evaluations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..instances import Family, ProblemInstance, classical_energy

MAX_SITES = 30
MAX_CONDITIONED = 26
MAX_COMPONENT = 12
BATCH = 1 << 15


class OracleError(RuntimeError):
    pass


@dataclass
class GroundSolution:
    e_min: float
    ground_set: list[np.ndarray]
    degeneracy: int

    def tolerance(self) -> float:
        return 1e-9 * max(1.0, abs(self.e_min))


def _spins(idx: np.ndarray, n: int) -> np.ndarray:
    return (1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)).astype(np.float64)


def _chain_ground(inst: ProblemInstance) -> GroundSolution:
    v = inst.edge_v
    e_min = -float(np.abs(v).sum())
    free = np.flatnonzero(v == 0.0)
    configs = []
    for start in (1, -1):
        for choice in itertools.product((1, -1), repeat=len(free)):
            s = np.empty(inst.n_sites, dtype=np.int8)
            s[0] = start
            flips = dict(zip(free, choice))
            for k, c in enumerate(v):
                s[k + 1] = s[k] * (flips[k] if k in flips else (1 if c < 0 else -1))
            configs.append(s)
    return GroundSolution(e_min, configs, len(configs))


def _conditioning_sites(inst: ProblemInstance) -> np.ndarray:
    if inst.family is Family.CHIMERA and "m" in inst.params:
        return np.array([i for i in range(inst.n_sites) if i % 8 < 4], dtype=np.intp)
    return np.arange(max(inst.n_sites - 1, 0), dtype=np.intp)


def _components(n_sites: int, sites: np.ndarray, edges) -> list[np.ndarray]:
    parent = {int(s): int(s) for s in sites}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in edges:
        if i in parent and j in parent:
            parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for s in parent:
        groups.setdefault(find(s), []).append(s)
    return [np.array(sorted(g), dtype=np.intp) for g in groups.values()]


def brute_force_ground(inst: ProblemInstance, max_sites: int = MAX_SITES,
                       max_ground: int = 100_000, cond_sites=None) -> GroundSolution:
    """Exact minimum of the classical energy with its degenerate set.

    Chains are solved analytically at any size. Other instances are enumerated
    when ``n_sites <= max_sites`` or when the conditioning set is small enough
    (Chimera graphs up to 24 conditioned sites).
    """
    n = inst.n_sites
    if inst.is_chain():
        return _chain_ground(inst)
    a = _conditioning_sites(inst) if cond_sites is None else np.asarray(cond_sites, dtype=np.intp)
    if n > max_sites and not (inst.family is Family.CHIMERA and len(a) <= 24):
        raise OracleError(f"exhaustive ground search capped at {max_sites} sites, got {n}")
    if len(a) > MAX_CONDITIONED:
        raise OracleError(f"too many conditioned sites ({len(a)})")
    rest = np.setdiff1d(np.arange(n), a)
    comps = _components(n, rest, inst.edges)
    if any(len(c) > MAX_COMPONENT for c in comps):
        raise OracleError("unconditioned components too large to enumerate")

    v = inst.coupling_matrix()
    v_aa = np.triu(v[np.ix_(a, a)], 1)
    comp_data = []
    for c in comps:
        x = _spins(np.arange(2 ** len(c)), len(c))
        e_cc = ((x @ np.triu(v[np.ix_(c, c)], 1)) * x).sum(axis=1)
        comp_data.append((c, x, e_cc, v[np.ix_(a, c)]))

    def batch_costs(sa):
        total = ((sa @ v_aa) * sa).sum(axis=1)
        per_comp = []
        for c, x, e_cc, v_ac in comp_data:
            cost = (sa @ v_ac) @ x.T + e_cc[None, :]
            per_comp.append(cost)
            total = total + cost.min(axis=1)
        return total, per_comp

    n_a = len(a)
    best = np.inf
    cands: list[tuple[np.ndarray, np.ndarray]] = []
    for start in range(0, 2**n_a, BATCH):
        idx = np.arange(start, min(start + BATCH, 2**n_a), dtype=np.int64)
        sa = _spins(idx, n_a)
        total, _ = batch_costs(sa)
        best = min(best, float(total.min()))
        keep = total <= best + 1e-9 * max(1.0, abs(best))
        cands.append((idx[keep], total[keep]))

    tol = 1e-9 * max(1.0, abs(best))
    a_idx = np.concatenate([i[t <= best + tol] for i, t in cands]) if cands else np.array([], np.int64)
    sa = _spins(a_idx, n_a)
    _, per_comp = batch_costs(sa)
    ground, degeneracy = [], 0
    for r in range(len(a_idx)):
        options = []
        for (c, x, _, _), cost in zip(comp_data, per_comp):
            row = cost[r]
            options.append(x[row <= row.min() + tol])
        degeneracy += int(np.prod([len(o) for o in options]))
        for combo in itertools.product(*options):
            if len(ground) >= max_ground:
                break
            s = np.empty(n, dtype=np.int8)
            s[a] = sa[r]
            for (c, *_), xc in zip(comp_data, combo):
                s[c] = xc
            ground.append(s)
    e_min = float(classical_energy(inst, ground[0])) if ground else float(best)
    return GroundSolution(e_min, ground, degeneracy)
