"""Quantities reported from an anneal: energies, kinks, success probability,
repetition counts, effective inverse temperatures and kernel density curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instances import ProblemInstance, all_configs, as_spins, classical_energy
from .jastrow import JastrowParams
from .sampler import SampleStats, SamplingPlan, Sampler, ground_hits, kink_values

EXACT_SUM_MAX_SITES = 20
_CHUNK = 1 << 15


class UnsupportedTopologyError(ValueError):
    pass


class OracleMissingError(ValueError):
    pass


@dataclass
class AnnealResult:
    T: float
    final_params: JastrowParams | None
    e_final: float
    e_residual_final: float | None
    p_success: float | None
    p_success_err: float | None
    n_rep: float | None
    kink_density_final: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(x):
            if x is None:
                return None
            x = float(x)
            return "inf" if math.isinf(x) else x

        return {
            "T": self.T,
            "e_final": clean(self.e_final),
            "e_residual_final": clean(self.e_residual_final),
            "p_success": clean(self.p_success),
            "p_success_err": clean(self.p_success_err),
            "n_rep": clean(self.n_rep),
            "kink_density_final": clean(self.kink_density_final),
            **self.extra,
        }


def energy_density(stats: SampleStats, n_sites: int) -> tuple[float, float]:
    """``Re <E_loc> / N`` with a binning error bar (zero for exact summation)."""
    if stats.n_samples == 0:
        raise ValueError("empty statistics")
    return stats.mean_eloc.real / n_sites, stats.error("eloc") / n_sites


def kink_density(source, inst: ProblemInstance) -> float:
    """``sum_i <1 - s_i s_{i+1}> / (2N)`` from statistics or an array of configurations."""
    if not inst.is_chain():
        raise UnsupportedTopologyError("kink density is defined for open chains only")
    if isinstance(source, SampleStats):
        return source.mean_kink
    cfgs = as_spins(source, inst.n_sites)
    return float(np.mean(kink_values(np.atleast_2d(cfgs))))


def residual_energy(stats: SampleStats, e0: float, n_sites: int) -> float:
    """``<H_p>/N - e0`` where ``e0`` is the ground-state energy per site."""
    return stats.mean_ecl / n_sites - e0


def success_probability(params: JastrowParams, inst: ProblemInstance, ground_set=None,
                        mode: str = "EXACT_SUM", e_min: float | None = None,
                        plan: SamplingPlan | None = None, seed=None) -> tuple[float, float]:
    """Weight of the final state on the classical ground manifold, with its error.

    ``EXACT_SUM`` sums ``|Psi|^2`` over the ground set against all ``2**N``
    configurations; ``SAMPLED`` counts Metropolis samples attaining ``E_min``.
    """
    if ground_set is not None and len(ground_set) == 0:
        raise OracleMissingError("empty ground set")
    if ground_set is None and e_min is None:
        raise OracleMissingError("a ground set or E_min is required")
    if e_min is None:
        e_min = float(classical_energy(inst, ground_set[0]))
    if mode == "EXACT_SUM":
        if inst.n_sites > EXACT_SUM_MAX_SITES:
            raise ValueError(f"EXACT_SUM limited to {EXACT_SUM_MAX_SITES} sites")
        cfgs = all_configs(inst.n_sites)
        logw = np.empty(len(cfgs))
        for a in range(0, len(cfgs), _CHUNK):
            s = cfgs[a:a + _CHUNK].astype(np.float64)
            logw[a:a + _CHUNK] = 2.0 * (s @ params.j1.real
                                        + (s[:, params.pair_i] * s[:, params.pair_j]) @ params.j2.real)
        w = np.exp(logw - logw.max())
        if ground_set is not None:
            weights = 1 << np.arange(inst.n_sites)
            idx = [int(((1 - np.asarray(g)) // 2) @ weights) for g in ground_set]
            hit = np.zeros(len(cfgs), bool)
            hit[idx] = True
        else:
            hit = ground_hits(classical_energy(inst, cfgs), e_min).astype(bool)
        return float(w[hit].sum() / w.sum()), 0.0
    if mode == "SAMPLED":
        plan = plan or SamplingPlan()
        stats = Sampler(inst, params, plan, np.random.default_rng(seed), e_min).sample(params, 0.0)
        return stats.mean_hit, stats.error("hit")
    raise ValueError(f"unknown mode {mode!r}")


def n_repetitions(p_s: float, p0: float = 0.99) -> float:
    """Runs needed to see the ground state at least once with confidence ``p0``."""
    if not 0.0 <= p_s <= 1.0:
        raise ValueError(f"p_s must lie in [0, 1], got {p_s}")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie in (0, 1), got {p0}")
    if p_s == 0.0:
        return math.inf
    if p_s >= p0:
        return 1.0 if p_s == 1.0 else max(1.0, math.log1p(-p0) / math.log1p(-p_s))
    return math.log1p(-p0) / math.log1p(-p_s)


@dataclass
class BetaEff:
    t: float
    pairs: list[tuple[int, int]]
    values: np.ndarray
    excluded: list[tuple[int, int]] = field(default_factory=list)

    def percentiles(self, q=(5, 95)) -> np.ndarray:
        return np.percentile(self.values, q)

    def spread(self) -> float:
        lo, hi = self.percentiles()
        return float(hi - lo)


def effective_inverse_temperatures(params: JastrowParams, inst: ProblemInstance, t: float = math.nan) -> BetaEff:
    """``beta_ij = -2 Re J2_ij / V_ij`` on coupled pairs; uncoupled parameterized pairs are excluded."""
    v = inst.coupling_matrix()
    pairs, values, excluded = [], [], []
    for (i, j), z in zip(zip(params.pair_i, params.pair_j), params.j2):
        i, j = int(i), int(j)
        if v[i, j] == 0.0:
            excluded.append((i, j))
            continue
        pairs.append((i, j))
        values.append(-2.0 * z.real / v[i, j])
    return BetaEff(t, pairs, np.array(values), excluded)


def silverman_bandwidth(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    sd = x.std(ddof=1) if n > 1 else 0.0
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    scale = min(sd, iqr / 1.349) if iqr > 0 else sd
    if scale <= 0:
        scale = 1e-3 * max(1.0, abs(float(x.mean())))
    return 0.9 * scale * n ** (-0.2)


def kde(values, bandwidth: float | None = None, grid=None, n_grid: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density estimate; grid spans the data plus six bandwidths."""
    x = np.asarray(values, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("kernel density estimate needs at least 2 values")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if grid is None:
        grid = np.linspace(x.min() - 6 * h, x.max() + 6 * h, n_grid)
    grid = np.asarray(grid, dtype=np.float64)
    z = (grid[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * z**2).sum(axis=1) / (len(x) * h * math.sqrt(2 * math.pi))
    return grid, dens


def kde_log_density(values, bandwidth: float | None = None, n_grid: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Density of ``log(values)``; non-positive inputs are rejected, report them separately."""
    x = np.asarray(values, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("log-density requires strictly positive values")
    return kde(np.log(x), bandwidth, n_grid=n_grid)
