"""Exact and classical reference solvers used to validate the variational dynamics."""

from .annealing import SAResult, linear_betas, sa_success_frequency, simulated_annealing
from .dense import DenseHamiltonian, DenseState, DenseTrajectory, ResourceError, exact_observables, exact_propagate
from .fermion import FermionTrajectory, TopologyError, free_fermion_propagate
from .ground import GroundSolution, OracleError, brute_force_ground

__all__ = [
    "DenseHamiltonian",
    "DenseState",
    "DenseTrajectory",
    "FermionTrajectory",
    "GroundSolution",
    "OracleError",
    "ResourceError",
    "SAResult",
    "TopologyError",
    "brute_force_ground",
    "exact_observables",
    "exact_propagate",
    "free_fermion_propagate",
    "linear_betas",
    "sa_success_frequency",
    "simulated_annealing",
]
