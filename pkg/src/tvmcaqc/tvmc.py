"""Time-dependent VMC: linear system assembly, regularized solve, Heun integration."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .instances import ProblemInstance
from .jastrow import JastrowParams, Support
from .sampler import ExactSummer, SampleStats, Sampler, SamplingPlan, autocorrelation_time

log = logging.getLogger(__name__)

PSD_TOL = 1e-8


class NoSamplesError(ValueError):
    pass


class DegenerateMetricError(ArithmeticError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t


class IntegrationError(RuntimeError):
    """Non-finite parameters during integration; carries a diagnostic dump."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass(frozen=True)
class Schedule:
    total_time: float
    form: str = "LINEAR"

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total annealing time must be positive, got {self.total_time}")
        if self.form != "LINEAR":
            raise ValueError(f"unsupported schedule form {self.form!r}")

    def gamma(self, t: float) -> float:
        return min(1.0, max(0.0, 1.0 - t / self.total_time))


class RegMode(str, Enum):
    SVD_CUTOFF = "SVD_CUTOFF"
    DIAGONAL_SHIFT = "DIAGONAL_SHIFT"


@dataclass(frozen=True)
class Regularization:
    mode: RegMode = RegMode.SVD_CUTOFF
    value: float = 1e-3  # relative to the largest eigenvalue of S

    def __post_init__(self):
        object.__setattr__(self, "mode", RegMode(self.mode))
        if self.value < 0 or (self.mode is RegMode.DIAGONAL_SHIFT and self.value == 0):
            raise ValueError(f"invalid regularization value {self.value} for {self.mode.value}")


@dataclass
class TvmcLinearSystem:
    s_matrix: np.ndarray
    force: np.ndarray
    mc_error_scale: float = 0.0
    eigvals: np.ndarray | None = None
    eigvecs: np.ndarray | None = None

    @property
    def n_params(self) -> int:
        return len(self.force)

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        if self.eigvals is None:
            self.eigvals, self.eigvecs = np.linalg.eigh(self.s_matrix)
        return self.eigvals, self.eigvecs

    @property
    def smin(self) -> float:
        return float(self.spectrum()[0][0])

    @property
    def smax(self) -> float:
        return float(self.spectrum()[0][-1])

    def check_psd(self, tol: float = PSD_TOL) -> None:
        lam = self.spectrum()[0]
        bound = -tol * max(np.trace(self.s_matrix), 0.0) / self.n_params
        if lam[0] < bound - 1e-14:
            raise DegenerateMetricError(f"covariance matrix not PSD: smallest eigenvalue {lam[0]:.3e}")


def estimate_system(stats: SampleStats) -> TvmcLinearSystem:
    """Connected correlators ``S = <OO> - <O><O>`` and ``f = <E_loc O> - <E_loc><O>``."""
    if stats.n_samples <= 0 or stats.weight <= 0:
        raise NoSamplesError("no samples accumulated")
    if not stats.exact and stats.n_samples < stats.n_params:
        log.warning("only %d samples for %d parameters", stats.n_samples, stats.n_params)
    mo = stats.mean_o
    s = stats.mean_oo - np.outer(mo, mo)
    s = 0.5 * (s + s.T)
    f = stats.mean_eloc_o - stats.mean_eloc * mo
    scale = 0.0 if stats.exact else math.sqrt(max(stats.mean_eloc_sq - abs(stats.mean_eloc) ** 2, 0.0) / stats.n_samples)
    return TvmcLinearSystem(s, f, scale)


def solve_parameter_derivative(sys: TvmcLinearSystem, reg: Regularization = Regularization()) -> np.ndarray:
    """``alpha_dot = -i S^+ f``; real and imaginary parts of ``f`` share the real ``S``."""
    s, f = sys.s_matrix, sys.force
    if not np.any(np.abs(s) > 1e-13):
        raise DegenerateMetricError("covariance matrix is numerically zero")
    if reg.mode is RegMode.SVD_CUTOFF:
        lam, vec = sys.spectrum()
        sing = np.abs(lam)
        keep = sing > reg.value * sing.max()
        if reg.value == 0.0:
            keep = sing > 0.0
        inv = np.zeros_like(lam)
        inv[keep] = 1.0 / lam[keep]
        x = vec @ (inv * (vec.T @ f))
    else:
        shifted = s + reg.value * np.diag(np.diag(s))
        x = np.linalg.solve(shifted, f)
    return -1j * x


def vap_residual(sys: TvmcLinearSystem) -> float:
    """Stationarity diagnostic ``||f||_2 / sqrt(K)``, the energy gradient norm."""
    return float(np.linalg.norm(sys.force) / math.sqrt(sys.n_params))


@dataclass
class TvmcConfig:
    dt: float | None = None  # None -> T / 1000
    plan: SamplingPlan = field(default_factory=SamplingPlan)
    reg: Regularization = field(default_factory=Regularization)
    output_stride: int = 10
    support: Support = Support.GRAPH_EDGES
    exact: bool = False
    seed: int | None = None
    e_min: float | None = None
    check_psd: bool = True
    # recorded observables by exact summation over |Psi|^2; dynamics stay sampled
    measure_exact: bool = False

    def n_steps(self, total_time: float) -> int:
        dt = total_time / 1000 if self.dt is None else self.dt
        if not 0 < dt <= total_time:
            raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={total_time}")
        return max(1, int(math.ceil(total_time / dt - 1e-9)))


TRAJECTORY_COLUMNS = [
    "t", "s", "gamma", "e_inst", "e_inst_err", "e_residual", "kink_density",
    "p_success", "vap_residual", "acceptance_rate", "smin", "smax",
]


@dataclass
class Trajectory:
    total_time: float
    rows: list[dict] = field(default_factory=list)
    params: list[np.ndarray] = field(default_factory=list)
    step_times: list[float] = field(default_factory=list)
    step_vap: list[float] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    final_params: JastrowParams | None = None
    final_stats: SampleStats | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([r["t"] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def vap_at(self, s: float) -> float:
        """Per-step residual at the step whose rescaled time is closest to ``s``."""
        st = np.asarray(self.step_times) / self.total_time
        return self.step_vap[int(np.argmin(np.abs(st - s)))]

    def write_csv(self, path: str | Path, source: str = "tvmc") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["source"] + TRAJECTORY_COLUMNS)
            w.writeheader()
            for row in self.rows:
                w.writerow({"source": source, **{k: ("" if row.get(k) is None else row[k]) for k in TRAJECTORY_COLUMNS}})

    def write_param_snapshots(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        out = []
        for k, (row, alpha) in enumerate(zip(self.rows, self.params)):
            path = directory / f"params_{k:05d}.json"
            path.write_text(json.dumps({"t": row["t"], "params": [[float(z.real), float(z.imag)] for z in alpha]}))
            out.append(path)
        return out

    def write_diagnostics(self, path: str | Path) -> None:
        if not self.diagnostics:
            return
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(self.diagnostics[0]))
            w.writeheader()
            w.writerows(self.diagnostics)


def _row(t, sched, stats, sys, n, e_min):
    def opt(x):
        return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)

    return {
        "t": t,
        "s": t / sched.total_time,
        "gamma": sched.gamma(t),
        "e_inst": stats.mean_eloc.real / n,
        "e_inst_err": stats.error("eloc") / n,
        "e_residual": opt(stats.mean_ecl / n - e_min / n) if e_min is not None else None,
        "kink_density": opt(stats.mean_kink),
        "p_success": opt(stats.mean_hit) if e_min is not None else None,
        "vap_residual": vap_residual(sys),
        "acceptance_rate": opt(stats.acceptance_rate),
        "smin": sys.smin,
        "smax": sys.smax,
    }


def integrate_annealing(inst: ProblemInstance, sched: Schedule, cfg: TvmcConfig | None = None,
                        params0: JastrowParams | None = None, backend=None) -> Trajectory:
    """Heun integration of the t-VMC equations from the exact ``t=0`` state to ``t=T``.

    Each Heun stage draws fresh statistics at its own ``(params, gamma)``.
    """
    cfg = cfg or TvmcConfig()
    T = sched.total_time
    n_steps = cfg.n_steps(T)
    h = T / n_steps
    stride = max(1, cfg.output_stride)
    p = params0 if params0 is not None else JastrowParams.zeros(inst, cfg.support)
    n = inst.n_sites

    measurer = None
    if cfg.exact:
        source = ExactSummer(inst, p, cfg.e_min)
    else:
        if cfg.measure_exact:
            measurer = ExactSummer(inst, p, cfg.e_min)
        source = Sampler(inst, p, cfg.plan, np.random.default_rng(cfg.seed), cfg.e_min, backend)

    traj = Trajectory(T, metadata={
        "schedule": sched.form, "T": T, "dt": h, "n_steps": n_steps,
        "mode": "exact" if cfg.exact else "sampled",
        "measure": "exact" if cfg.exact or cfg.measure_exact else "sampled", "support": Support(cfg.support).value,
        "reg_mode": cfg.reg.mode.value, "reg_value": cfg.reg.value,
        "n_samples": None if cfg.exact else cfg.plan.n_samples,
        "n_chains": None if cfg.exact else cfg.plan.n_chains,
    })

    def derivative(params, t):
        stats = source.sample(params, sched.gamma(t))
        sys = estimate_system(stats)
        if cfg.check_psd:
            sys.check_psd()
        try:
            adot = solve_parameter_derivative(sys, cfg.reg)
        except DegenerateMetricError as exc:
            raise DegenerateMetricError(str(exc), t) from None
        return adot, stats, sys

    def record(k, t, params, stats, sys):
        shown = stats if measurer is None else measurer.sample(params, sched.gamma(t))
        traj.rows.append(_row(t, sched, shown, sys, n, cfg.e_min))
        traj.params.append(params.flat().copy())
        if not stats.exact:
            traj.diagnostics.append({
                "t": t,
                "acceptance_rate": stats.acceptance_rate,
                "tau_eloc": autocorrelation_time(stats.series["eloc"]),
                "samples_per_chain": stats.n_samples // cfg.plan.n_chains,
            })

    alpha = p.flat()
    for k in range(n_steps):
        t = k * h
        adot1, stats, sys = derivative(p, t)
        traj.step_times.append(t)
        traj.step_vap.append(vap_residual(sys))
        if k % stride == 0:
            record(k, t, p, stats, sys)
        pred = p.with_flat(alpha + h * adot1)
        adot2, _, _ = derivative(pred, (k + 1) * h)
        alpha = alpha + 0.5 * h * (adot1 + adot2)
        if not np.all(np.isfinite(alpha)):
            raise IntegrationError(
                f"non-finite parameters at t={(k + 1) * h:.6g}",
                {"t": (k + 1) * h, "alpha": alpha, "adot1": adot1, "adot2": adot2,
                 "smin": sys.smin, "smax": sys.smax},
            )
        p = p.with_flat(alpha)

    stats = source.sample(p, sched.gamma(T))
    sys = estimate_system(stats)
    traj.step_times.append(T)
    traj.step_vap.append(vap_residual(sys))
    record(n_steps, T, p, stats, sys)
    traj.final_params = p
    traj.final_stats = stats
    return traj
