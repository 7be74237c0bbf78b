"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
``TVMCAQC_BACKEND=python`` forces the fallback, ``=cython`` makes a missing
extension an error.
"""

import importlib
import os


def get_backend(name: str = "auto"):
    if name == "python":
        return importlib.import_module("tvmcaqc._pykernels")
    try:
        return importlib.import_module("tvmcaqc._ckernels")
    except ImportError:
        if name == "cython":
            raise
        return importlib.import_module("tvmcaqc._pykernels")


_active = get_backend(os.environ.get("TVMCAQC_BACKEND", "auto"))

BACKEND = _active.BACKEND
metropolis_chains = _active.metropolis_chains
anneal_chains = _active.anneal_chains
