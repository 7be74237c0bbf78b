"""Metropolis sampling of ``|Psi|^2`` and accumulation of t-VMC statistics.

Two producers of :class:`SampleStats` live here: :class:`Sampler` runs
single-flip Metropolis chains through the kernel backend, and
:class:`ExactSummer` weights every configuration exactly (small systems only).
Both feed the same downstream estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .instances import ProblemInstance, all_configs, classical_energy
from .jastrow import JastrowParams, o_matrix, log_ratios_batch

EXACT_MAX_SITES = 14


@dataclass(frozen=True)
class SamplingPlan:
    n_chains: int = 1
    burn_in_sweeps: int | None = None  # None -> 10 * n_sites
    n_samples: int = 10_000
    thin_sweeps: int = 1

    def __post_init__(self):
        if self.n_chains < 1 or self.n_samples < 1 or self.thin_sweeps < 1:
            raise ValueError(f"sampling plan values must be positive: {self}")
        if self.burn_in_sweeps is not None and self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")

    def burn_in(self, n_sites: int) -> int:
        return 10 * n_sites if self.burn_in_sweeps is None else self.burn_in_sweeps


@dataclass
class SampleStats:
    """Weighted sums of the connected-correlator ingredients.

    Monte Carlo samples carry unit weight; exact summation carries ``|Psi|^2/Z``.
    The per-sample scalar series are kept (MC only) for binning error bars.
    """

    n_params: int
    n_samples: int = 0
    weight: float = 0.0
    sum_o: np.ndarray = None
    sum_oo: np.ndarray = None
    sum_eloc: complex = 0j
    sum_eloc_o: np.ndarray = None
    sum_eloc_abs2: float = 0.0
    sum_ecl: float = 0.0
    sum_kink: float = 0.0
    sum_hit: float = 0.0
    n_accepted: int = 0
    n_proposed: int = 0
    exact: bool = False
    series: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.n_params
        if self.sum_o is None:
            self.sum_o = np.zeros(k)
        if self.sum_oo is None:
            self.sum_oo = np.zeros((k, k))
        if self.sum_eloc_o is None:
            self.sum_eloc_o = np.zeros(k, complex)

    @classmethod
    def from_samples(cls, o, eloc, ecl, kink=None, hit=None, weights=None,
                     n_accepted=0, n_proposed=0, transposed=False) -> "SampleStats":
        """Accumulate from per-sample arrays; ``o`` is ``(n, K)`` or ``(K, n)`` if ``transposed``."""
        ot = np.asarray(o, dtype=np.float64)
        if not transposed:
            ot = ot.T
        eloc = np.asarray(eloc, dtype=complex)
        ecl = np.asarray(ecl, dtype=np.float64)
        exact = weights is not None
        if exact:
            w = np.asarray(weights, dtype=np.float64)
            otw = ot * w
            total = float(w.sum())
        else:
            w = None
            otw = ot
            total = float(len(eloc))

        def wsum(x):
            return float(x.sum()) if w is None else float(w @ x)

        st = cls(
            n_params=ot.shape[0],
            n_samples=len(eloc),
            weight=total,
            sum_o=otw.sum(axis=1),
            sum_oo=otw @ ot.T,
            sum_eloc=complex(wsum(eloc.real), wsum(eloc.imag)),
            sum_eloc_o=otw @ eloc.real + 1j * (otw @ eloc.imag),
            sum_eloc_abs2=wsum(eloc.real**2 + eloc.imag**2),
            sum_ecl=wsum(ecl),
            sum_kink=wsum(np.asarray(kink, dtype=np.float64)) if kink is not None else math.nan,
            sum_hit=wsum(np.asarray(hit, dtype=np.float64)) if hit is not None else math.nan,
            n_accepted=int(n_accepted),
            n_proposed=int(n_proposed),
            exact=exact,
        )
        if not exact:
            st.series = {"eloc": eloc, "ecl": ecl}
            if kink is not None:
                st.series["kink"] = np.asarray(kink, dtype=np.float64)
            if hit is not None:
                st.series["hit"] = np.asarray(hit, dtype=np.float64)
        return st

    def merge(self, other: "SampleStats") -> "SampleStats":
        if other.n_params != self.n_params:
            raise ValueError("cannot merge statistics with different parameter counts")
        if other.exact != self.exact:
            raise ValueError("cannot merge exact and sampled statistics")
        series = {}
        for key in self.series.keys() & other.series.keys():
            series[key] = np.concatenate([self.series[key], other.series[key]])
        return replace(
            self,
            n_samples=self.n_samples + other.n_samples,
            weight=self.weight + other.weight,
            sum_o=self.sum_o + other.sum_o,
            sum_oo=self.sum_oo + other.sum_oo,
            sum_eloc=self.sum_eloc + other.sum_eloc,
            sum_eloc_o=self.sum_eloc_o + other.sum_eloc_o,
            sum_eloc_abs2=self.sum_eloc_abs2 + other.sum_eloc_abs2,
            sum_ecl=self.sum_ecl + other.sum_ecl,
            sum_kink=self.sum_kink + other.sum_kink,
            sum_hit=self.sum_hit + other.sum_hit,
            n_accepted=self.n_accepted + other.n_accepted,
            n_proposed=self.n_proposed + other.n_proposed,
            series=series,
        )

    __add__ = merge

    @property
    def mean_o(self) -> np.ndarray:
        return self.sum_o / self.weight

    @property
    def mean_oo(self) -> np.ndarray:
        return self.sum_oo / self.weight

    @property
    def mean_eloc(self) -> complex:
        return self.sum_eloc / self.weight

    @property
    def mean_eloc_o(self) -> np.ndarray:
        return self.sum_eloc_o / self.weight

    @property
    def mean_eloc_sq(self) -> float:
        return self.sum_eloc_abs2 / self.weight

    @property
    def mean_ecl(self) -> float:
        return self.sum_ecl / self.weight

    @property
    def mean_kink(self) -> float:
        return self.sum_kink / self.weight

    @property
    def mean_hit(self) -> float:
        return self.sum_hit / self.weight

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed if self.n_proposed else math.nan

    def error(self, key: str, n_bins: int = 32) -> float:
        """Binning estimate of the standard error of the mean of a scalar series."""
        if self.exact:
            return 0.0
        x = self.series.get(key)
        if x is None:
            return math.nan
        x = np.real(x) if key != "eloc" else x.real
        return binned_error(x, n_bins)


def binned_error(x: np.ndarray, n_bins: int = 32) -> float:
    x = np.asarray(x, dtype=np.float64)
    n_bins = min(n_bins, len(x))
    if n_bins < 2:
        return math.nan
    size = len(x) // n_bins
    means = x[: size * n_bins].reshape(n_bins, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_bins))


def autocorrelation_time(x: np.ndarray, max_lag: int | None = None) -> float:
    """Integrated autocorrelation time with a self-consistent window (c=5)."""
    x = np.asarray(np.real(x), dtype=np.float64)
    x = x - x.mean()
    var = x @ x / len(x)
    if len(x) < 4 or var == 0.0:
        return 1.0
    max_lag = max_lag or len(x) // 4
    nfft = 1 << (2 * len(x) - 1).bit_length()
    acf = np.fft.irfft(np.abs(np.fft.rfft(x, nfft)) ** 2)[: max_lag + 1] / (len(x) * var)
    tau = 1.0
    for lag in range(1, max_lag + 1):
        tau += 2.0 * acf[lag]
        if lag >= 5 * tau:
            break
    return max(float(tau), 1.0)


def kink_values(cfgs: np.ndarray) -> np.ndarray:
    """Per-configuration ``sum_i (1 - s_i s_{i+1}) / (2N)`` over the open chain."""
    s = np.asarray(cfgs)
    n = s.shape[-1]
    aligned = (s[..., :-1] * s[..., 1:]).sum(axis=-1, dtype=np.int64)
    return ((n - 1) - aligned) / (2.0 * n)


def o_matrix_t(p: JastrowParams, cfgs: np.ndarray) -> np.ndarray:
    """Transposed ``(K, n_samples)`` log-derivative matrix built from int8 spins."""
    ct = np.ascontiguousarray(np.asarray(cfgs, dtype=np.int8).T)
    n = ct.shape[0]
    o = np.empty((p.n_params, ct.shape[1]))
    o[:n] = ct
    np.multiply(ct[p.pair_i], ct[p.pair_j], out=o[n:], casting="unsafe")
    return o


def ground_hits(ecl: np.ndarray, e_min: float) -> np.ndarray:
    return (np.abs(np.asarray(ecl) - e_min) <= 1e-9 * max(1.0, abs(e_min))).astype(np.float64)


class Topology:
    """CSR adjacency over the union of parameterized pairs and coupled edges."""

    def __init__(self, p: JastrowParams, inst: ProblemInstance):
        n = inst.n_sites
        if p.n_sites != n:
            raise ValueError(f"parameters for {p.n_sites} sites, instance has {n}")
        pairs = {}
        for k, (i, j) in enumerate(zip(p.pair_i, p.pair_j)):
            pairs.setdefault((int(i), int(j)), [None, 0.0])[0] = k
        for i, j, v in inst.edges:
            pairs.setdefault((i, j), [None, 0.0])[1] = v
        adj = [[] for _ in range(n)]
        for (i, j), (k, v) in pairs.items():
            adj[i].append((j, k, v))
            adj[j].append((i, k, v))
        ptr = np.zeros(n + 1, dtype=np.int_)
        idx, pidx, vals = [], [], []
        for i in range(n):
            for j, k, v in sorted(adj[i]):
                idx.append(j)
                pidx.append(-1 if k is None else k)
                vals.append(v)
            ptr[i + 1] = len(idx)
        self.n_sites = n
        self.nbr_ptr = ptr
        self.nbr_idx = np.array(idx, dtype=np.int_)
        self.nbr_v = np.array(vals, dtype=np.float64)
        self._pidx = np.array(pidx, dtype=np.intp)
        self._has_param = self._pidx >= 0

    def weights(self, p: JastrowParams) -> tuple[np.ndarray, np.ndarray]:
        w = np.zeros(len(self.nbr_idx), complex)
        w[self._has_param] = p.j2[self._pidx[self._has_param]]
        return np.ascontiguousarray(w.real), np.ascontiguousarray(w.imag)


@dataclass
class ChainState:
    cfgs: np.ndarray  # (n_chains, n_sites) int8
    rng: np.random.Generator
    log_weight: np.ndarray | None = None

    @classmethod
    def random(cls, n_chains: int, n_sites: int, rng: np.random.Generator) -> "ChainState":
        cfgs = np.where(rng.random((n_chains, n_sites)) < 0.5, -1, 1).astype(np.int8)
        return cls(cfgs, rng)

    def refresh_log_weight(self, p: JastrowParams) -> np.ndarray:
        self.log_weight = 2.0 * (o_matrix(p, self.cfgs) @ p.flat()).real
        return self.log_weight


def _run_kernel(backend, chains, topo, p, gamma, n_burn_sweeps, n_rec, thin):
    n_chains, n = chains.cfgs.shape
    n_prop = (n_burn_sweeps + n_rec * thin) * n
    uniforms = chains.rng.random((n_chains, n_prop))
    w_re, w_im = topo.weights(p)
    return backend.metropolis_chains(
        chains.cfgs,
        np.ascontiguousarray(p.j1.real),
        np.ascontiguousarray(p.j1.imag),
        topo.nbr_ptr, topo.nbr_idx, w_re, w_im, topo.nbr_v,
        float(gamma), uniforms,
        n_burn_sweeps * n, thin * n, n_rec,
    )


def metropolis_sweep(chain: ChainState, p: JastrowParams, inst: ProblemInstance | None = None,
                     backend=None) -> ChainState:
    """One sweep (``n_sites`` random single-flip proposals) per chain, in place."""
    if inst is None:
        inst = ProblemInstance(p.n_sites, ())
    backend = backend or kernels
    _run_kernel(backend, chain, Topology(p, inst), p, 0.0, 1, 0, 1)
    chain.refresh_log_weight(p)
    return chain


class Sampler:
    """Metropolis sampler bound to one instance and parameter structure.

    Chains persist between calls so each integration stage starts from the
    previous stage's configurations.
    """

    def __init__(self, inst: ProblemInstance, p: JastrowParams, plan: SamplingPlan,
                 rng: np.random.Generator | int | None = None, e_min: float | None = None,
                 backend=None):
        self.inst = inst
        self.plan = plan
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.e_min = e_min
        self.backend = backend or kernels
        self.topo = Topology(p, inst)
        self.chains = ChainState.random(plan.n_chains, inst.n_sites, self.rng)
        self.is_chain = inst.is_chain()
        self.last_cfgs: np.ndarray | None = None

    def sample(self, p: JastrowParams, gamma: float) -> SampleStats:
        plan, n = self.plan, self.inst.n_sites
        n_rec = -(-plan.n_samples // plan.n_chains)
        records, eloc, ecl, acc = _run_kernel(
            self.backend, self.chains, self.topo, p, gamma,
            plan.burn_in(n), n_rec, plan.thin_sweeps,
        )
        cfgs = records.reshape(-1, n)
        eloc = eloc.reshape(-1)
        ecl = ecl.reshape(-1)
        self.last_cfgs = cfgs
        n_prop = plan.n_chains * (plan.burn_in(n) + n_rec * plan.thin_sweeps) * n
        return SampleStats.from_samples(
            o_matrix_t(p, cfgs), eloc, ecl,
            kink=kink_values(cfgs) if self.is_chain else None,
            hit=ground_hits(ecl, self.e_min) if self.e_min is not None else None,
            n_accepted=int(acc.sum()), n_proposed=n_prop, transposed=True,
        )


class ExactSummer:
    """Exact ``|Psi|^2``-weighted moments by enumerating all ``2**n`` configurations."""

    def __init__(self, inst: ProblemInstance, p: JastrowParams, e_min: float | None = None,
                 max_sites: int = EXACT_MAX_SITES):
        if inst.n_sites > max_sites:
            raise ValueError(f"exact summation limited to {max_sites} sites, got {inst.n_sites}")
        self.inst = inst
        self.cfgs = all_configs(inst.n_sites)
        self.o = o_matrix(p, self.cfgs)
        self.ecl = classical_energy(inst, self.cfgs)
        self.kink = kink_values(self.cfgs) if inst.is_chain() else None
        self.hit = ground_hits(self.ecl, e_min) if e_min is not None else None

    def probabilities(self, p: JastrowParams) -> np.ndarray:
        logw = 2.0 * (self.o @ p.flat()).real
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def sample(self, p: JastrowParams, gamma: float) -> SampleStats:
        prob = self.probabilities(p)
        flips = np.exp(log_ratios_batch(p, self.cfgs)).sum(axis=1)
        eloc = (1.0 - gamma) * self.ecl - gamma * flips
        return SampleStats.from_samples(self.o, eloc, self.ecl, self.kink, self.hit, weights=prob)


def sample_batch(p: JastrowParams, inst: ProblemInstance, gamma: float, plan: SamplingPlan,
                 seed=None, e_min: float | None = None, backend=None) -> SampleStats:
    """Independent chains from random starts; burn-in, thinning, merged statistics."""
    return Sampler(inst, p, plan, np.random.default_rng(seed), e_min, backend).sample(p, gamma)
