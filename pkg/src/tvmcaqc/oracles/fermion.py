"""Exact annealing dynamics of open random-bond chains via Jordan-Wigner fermions.

In the rotated frame ``X -> tau^z``, ``Z -> tau^x`` the Hamiltonian is
``-gamma sum_i tau^z_i + (1 - gamma) sum_i V_i tau^x_i tau^x_{i+1}``, quadratic
in the Majorana operators

    a_{2i}   = (prod_{j<i} tau^z_j) tau^x_i
    a_{2i+1} = (prod_{j<i} tau^z_j) tau^y_i

with ``tau^z_i = -i a_{2i} a_{2i+1}`` and ``tau^x_i tau^x_{i+1} = -i a_{2i+1} a_{2i+2}``.
Writing ``H = (i/4) sum h_ab a_a a_b`` the Majorana covariance
``M_ab = (i/2) <[a_a, a_b]>`` obeys ``dM/dt = h M - M h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..instances import ProblemInstance


class TopologyError(ValueError):
    pass


@dataclass
class FermionTrajectory:
    times: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    kink_density: list[float] = field(default_factory=list)
    final_covariance: np.ndarray | None = None

    def energy_density(self, n_sites: int) -> np.ndarray:
        return np.asarray(self.energy) / n_sites


def _generator(n: int, bonds: np.ndarray, gamma: float) -> np.ndarray:
    h = np.zeros((2 * n, 2 * n))
    ev = np.arange(n)
    # -i c a_p a_q  <->  h_pq = -2c, h_qp = +2c
    h[2 * ev, 2 * ev + 1] = 2.0 * gamma
    h[2 * ev + 1, 2 * ev] = -2.0 * gamma
    j = (1.0 - gamma) * bonds
    od = np.arange(n - 1)
    h[2 * od + 1, 2 * od + 2] = -2.0 * j
    h[2 * od + 2, 2 * od + 1] = 2.0 * j
    return h


def chain_observables(m: np.ndarray, bonds: np.ndarray, gamma: float) -> tuple[float, float]:
    """Total energy and kink density ``sum_i (1 - <Z_i Z_i+1>) / (2N)``."""
    n = len(bonds) + 1
    ev = np.arange(n)
    od = np.arange(n - 1)
    x = -m[2 * ev, 2 * ev + 1]          # <X_i>
    zz = -m[2 * od + 1, 2 * od + 2]     # <Z_i Z_i+1>
    energy = -gamma * x.sum() + (1.0 - gamma) * (bonds @ zz)
    kinks = (1.0 - zz).sum() / (2.0 * n)
    return float(energy), float(kinks)


def free_fermion_propagate(inst: ProblemInstance, sched, dt: float,
                           output_stride: int = 1) -> FermionTrajectory:
    """RK4 evolution of the ``2N x 2N`` Majorana covariance from the ``gamma=1`` ground state."""
    if not inst.is_chain():
        raise TopologyError("free-fermion solution requires an open nearest-neighbour chain")
    n = inst.n_sites
    bonds = inst.edge_v
    T = sched.total_time
    n_steps = max(1, int(np.ceil(T / dt - 1e-9)))
    h_step = T / n_steps

    m = np.zeros((2 * n, 2 * n))
    ev = np.arange(n)
    m[2 * ev, 2 * ev + 1] = -1.0  # all X_i = +1
    m[2 * ev + 1, 2 * ev] = 1.0

    traj = FermionTrajectory()

    def rhs(t, x):
        g = _generator(n, bonds, sched.gamma(t))
        gx = g @ x
        return gx - gx.T  # h M - M h, using (h M)^T = M h for antisymmetric h, M

    def record(t):
        e, k = chain_observables(m, bonds, sched.gamma(t))
        traj.times.append(t)
        traj.energy.append(e)
        traj.kink_density.append(k)

    for step in range(n_steps):
        t = step * h_step
        if step % output_stride == 0:
            record(t)
        k1 = rhs(t, m)
        k2 = rhs(t + h_step / 2, m + h_step / 2 * k1)
        k3 = rhs(t + h_step / 2, m + h_step / 2 * k2)
        k4 = rhs(t + h_step, m + h_step * k3)
        m = m + h_step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    record(T)
    traj.final_covariance = m
    return traj
