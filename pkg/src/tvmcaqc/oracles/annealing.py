"""Classical simulated annealing baseline (single-spin Metropolis on ``exp(-beta E)``)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..instances import ProblemInstance, classical_energy
from ..jastrow import JastrowParams
from ..sampler import Topology

DEFAULT_BETA = (0.1, 3.0)


@dataclass
class SAResult:
    configs: np.ndarray   # (n_runs, n_sites) final configurations
    energies: np.ndarray
    hits: np.ndarray | None

    @property
    def success_frequency(self) -> float:
        if self.hits is None:
            raise ValueError("ground-state energy not supplied")
        return float(self.hits.mean())


def linear_betas(n_sweeps: int, beta_range=DEFAULT_BETA) -> np.ndarray:
    if n_sweeps == 1:
        return np.array([float(beta_range[1])])
    return np.linspace(beta_range[0], beta_range[1], n_sweeps)


def simulated_annealing(inst: ProblemInstance, n_sweeps: int = 1000, beta_schedule=None,
                        seed=None, e_min: float | None = None, n_runs: int = 1,
                        backend=None) -> SAResult:
    """Independent annealing runs from uniform random starts.

    ``beta_schedule`` is a ``(beta_start, beta_end)`` tuple swept linearly over
    the sweeps, or an explicit per-sweep array. ``n_sweeps=0`` returns the random
    starting configurations untouched.
    """
    if n_sweeps < 0 or n_runs < 1:
        raise ValueError("n_sweeps must be >= 0 and n_runs >= 1")
    if beta_schedule is None or isinstance(beta_schedule, tuple):
        betas = linear_betas(n_sweeps, beta_schedule or DEFAULT_BETA) if n_sweeps else np.empty(0)
    else:
        betas = np.asarray(beta_schedule, dtype=np.float64)
        if len(betas) != n_sweeps:
            raise ValueError(f"beta schedule has {len(betas)} entries for {n_sweeps} sweeps")
    rng = np.random.default_rng(seed)
    n = inst.n_sites
    cfgs = np.where(rng.random((n_runs, n)) < 0.5, -1, 1).astype(np.int8)
    if n_sweeps:
        topo = Topology(JastrowParams.zeros(inst), inst)
        uniforms = rng.random((n_runs, n_sweeps * n))
        (backend or kernels).anneal_chains(
            cfgs, topo.nbr_ptr, topo.nbr_idx, topo.nbr_v, np.ascontiguousarray(betas), uniforms
        )
    energies = classical_energy(inst, cfgs)
    hits = None
    if e_min is not None:
        hits = np.abs(energies - e_min) <= 1e-9 * max(1.0, abs(e_min))
    return SAResult(cfgs, np.asarray(energies, dtype=np.float64), hits)


def sa_success_frequency(inst: ProblemInstance, e_min: float, n_runs: int = 100,
                         n_sweeps: int = 1000, beta_schedule=None, seed=None) -> float:
    return simulated_annealing(inst, n_sweeps, beta_schedule, seed, e_min, n_runs).success_frequency
