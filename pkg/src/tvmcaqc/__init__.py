"""Time-dependent variational Monte Carlo for adiabatic quantum optimization."""

from .instances import (
    Family,
    ProblemInstance,
    classical_energy,
    gen_chimera,
    gen_ri1d,
    gen_sk,
)
from .jastrow import JastrowParams, Support
from .kernels import BACKEND

__version__ = "0.1.0"
