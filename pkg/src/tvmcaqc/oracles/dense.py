"""Matrix-free Schroedinger propagation in the full ``2**N`` spin basis.

Basis index ``b`` encodes ``s_i = 1 - 2 * bit_i(b)``, matching
:func:`tvmcaqc.instances.all_configs`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..instances import ProblemInstance, all_configs, classical_energy

MAX_SITES = 20


class ResourceError(RuntimeError):
    pass


@dataclass
class DenseState:
    amplitudes: np.ndarray

    @property
    def n_sites(self) -> int:
        return int(np.log2(len(self.amplitudes)))

    @classmethod
    def uniform(cls, n: int) -> "DenseState":
        return cls(np.full(2**n, 2.0 ** (-n / 2), dtype=complex))

    @classmethod
    def basis(cls, cfg) -> "DenseState":
        s = np.asarray(cfg)
        b = int(((1 - s) // 2) @ (1 << np.arange(len(s))))
        psi = np.zeros(2 ** len(s), complex)
        psi[b] = 1.0
        return cls(psi)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def sum_sigma_x(psi: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(psi)
    for i in range(n):
        out += psi.reshape(2 ** (n - 1 - i), 2, 2**i)[:, ::-1, :].reshape(-1)
    return out


class DenseHamiltonian:
    """``H(gamma) = -gamma sum_i X_i + (1 - gamma) H_p`` applied without forming a matrix."""

    def __init__(self, inst: ProblemInstance, max_sites: int = MAX_SITES):
        if inst.n_sites > max_sites:
            raise ResourceError(f"dense propagation capped at {max_sites} sites, got {inst.n_sites}")
        self.inst = inst
        self.n = inst.n_sites
        self.configs = all_configs(self.n)
        self.diag = classical_energy(inst, self.configs) if inst.n_edges else np.zeros(2**self.n)

    def apply(self, psi: np.ndarray, gamma: float) -> np.ndarray:
        return (1.0 - gamma) * self.diag * psi - gamma * sum_sigma_x(psi, self.n)

    def energy(self, psi: np.ndarray, gamma: float) -> float:
        return float(np.vdot(psi, self.apply(psi, gamma)).real / np.vdot(psi, psi).real)


def _ground_mask(ham: DenseHamiltonian, ground_set) -> np.ndarray:
    mask = np.zeros(2**ham.n, bool)
    weights = 1 << np.arange(ham.n)
    for cfg in ground_set:
        mask[int(((1 - np.asarray(cfg)) // 2) @ weights)] = True
    return mask


def exact_observables(state: DenseState, inst: ProblemInstance, gamma: float,
                      ground_set=None, ham: DenseHamiltonian | None = None) -> dict:
    """Energy, chain kink density (``None`` off-chain) and ground-manifold weight."""
    ham = ham or DenseHamiltonian(inst)
    psi = state.amplitudes
    if len(psi) != 2**inst.n_sites:
        raise ValueError(f"state dimension {len(psi)} does not match {inst.n_sites} sites")
    prob = np.abs(psi) ** 2 / np.vdot(psi, psi).real
    out = {"energy": ham.energy(psi, gamma), "kink_density": None, "p_success": None}
    if inst.is_chain():
        s = ham.configs.astype(np.float64)
        kinks = (1.0 - s[:, :-1] * s[:, 1:]).sum(axis=1) / (2.0 * inst.n_sites)
        out["kink_density"] = float(prob @ kinks)
    if ground_set is not None:
        out["p_success"] = float(prob[_ground_mask(ham, ground_set)].sum())
    return out


@dataclass
class DenseTrajectory:
    times: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    kink_density: list[float | None] = field(default_factory=list)
    p_success: list[float | None] = field(default_factory=list)
    states: list[DenseState] = field(default_factory=list)
    max_norm_drift: float = 0.0
    final_state: DenseState | None = None

    def energy_density(self, n_sites: int) -> np.ndarray:
        return np.asarray(self.energy) / n_sites


def exact_propagate(inst: ProblemInstance, sched, dt: float, output_stride: int = 1,
                    ground_set=None, store_states: bool = False,
                    max_sites: int = MAX_SITES) -> DenseTrajectory:
    """RK4 integration of ``i dpsi/dt = H(t) psi`` from the uniform superposition."""
    ham = DenseHamiltonian(inst, max_sites)
    T = sched.total_time
    n_steps = max(1, int(np.ceil(T / dt - 1e-9)))
    h = T / n_steps
    psi = DenseState.uniform(inst.n_sites).amplitudes
    traj = DenseTrajectory()

    def rhs(t, x):
        return -1j * ham.apply(x, sched.gamma(t))

    def record(t):
        obs = exact_observables(DenseState(psi), inst, sched.gamma(t), ground_set, ham)
        traj.times.append(t)
        traj.energy.append(obs["energy"])
        traj.kink_density.append(obs["kink_density"])
        traj.p_success.append(obs["p_success"])
        if store_states:
            traj.states.append(DenseState(psi.copy()))

    for k in range(n_steps):
        t = k * h
        if k % output_stride == 0:
            record(t)
        k1 = rhs(t, psi)
        k2 = rhs(t + h / 2, psi + h / 2 * k1)
        k3 = rhs(t + h / 2, psi + h / 2 * k2)
        k4 = rhs(t + h, psi + h * k3)
        psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(psi)
        traj.max_norm_drift = max(traj.max_norm_drift, abs(nrm - 1.0))
        psi = psi / nrm
    record(T)
    traj.final_state = DenseState(psi)
    return traj
