"""Ising problem instances: coupling graphs, disorder ensembles, classical energies.

An instance stores the problem Hamiltonian ``H_p = sum_{i<j} V_ij s_i s_j`` as an
explicit edge list. Generators draw couplings from a Philox counter-based
stream keyed on ``(family, seed)`` so that the same arguments always rebuild a
bit-identical instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class Family(str, Enum):
    RI1D = "RI1D"
    SK = "SK"
    CHIMERA = "CHIMERA"
    CUSTOM = "CUSTOM"


_FAMILY_KEY = {Family.RI1D: 1, Family.SK: 2, Family.CHIMERA: 3, Family.CUSTOM: 0}


class InstanceError(ValueError):
    """Invalid instance parameters or malformed instance data."""


@dataclass(frozen=True)
class ProblemInstance:
    n_sites: int
    edges: tuple[tuple[int, int, float], ...]
    family: Family = Family.CUSTOM
    seed: int = 0
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_sites < 1:
            raise InstanceError(f"n_sites must be positive, got {self.n_sites}")
        seen = set()
        for i, j, _ in self.edges:
            if not (0 <= i < j < self.n_sites):
                raise InstanceError(f"bad edge ({i}, {j}) for n_sites={self.n_sites}")
            if (i, j) in seen:
                raise InstanceError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_i(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @property
    def edge_j(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    @property
    def edge_v(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=np.float64)

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric dense ``V`` with zero diagonal."""
        v = np.zeros((self.n_sites, self.n_sites))
        for i, j, c in self.edges:
            v[i, j] = v[j, i] = c
        return v

    def is_chain(self) -> bool:
        """True when the edges form the open path 0-1-...-(n-1)."""
        if self.n_edges != self.n_sites - 1:
            return False
        return all(i == k and j == k + 1 for k, (i, j, _) in enumerate(self.edges))

    def to_json(self) -> str:
        edges = ", ".join(f"[{i}, {j}, {v:.17g}]" for i, j, v in self.edges)
        params = json.dumps(self.params, sort_keys=True)
        return (
            f'{{"family": "{self.family.value}", "n_sites": {self.n_sites}, '
            f'"seed": {self.seed}, "params": {params}, "edges": [{edges}]}}'
        )

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        data = json.loads(text)
        try:
            edges = tuple((int(i), int(j), float(v)) for i, j, v in data["edges"])
            return cls(
                n_sites=int(data["n_sites"]),
                edges=edges,
                family=Family(data.get("family", "CUSTOM")),
                seed=int(data.get("seed", 0)),
                params=dict(data.get("params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed instance file: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ProblemInstance":
        return cls.from_json(Path(path).read_text())


def _rng(family: Family, seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise InstanceError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, _FAMILY_KEY[family]])
    return np.random.Generator(np.random.Philox(ss))


def gen_ri1d(n: int, seed: int) -> ProblemInstance:
    """Open random-bond chain with ``V_{i,i+1} = -v_i``, ``v_i ~ U[0, 1)``."""
    if n < 2:
        raise InstanceError(f"RI1D needs at least 2 sites, got {n}")
    v = _rng(Family.RI1D, seed).random(n - 1)
    edges = tuple((i, i + 1, -float(v[i])) for i in range(n - 1))
    return ProblemInstance(n, edges, Family.RI1D, seed)


def gen_sk(n: int, seed: int) -> ProblemInstance:
    """Sherrington-Kirkpatrick instance, ``V_ij = v_ij / sqrt(n)`` with ``v_ij ~ N(0, 1)``."""
    if n < 2:
        raise InstanceError(f"SK needs at least 2 sites, got {n}")
    iu, ju = np.triu_indices(n, k=1)
    v = _rng(Family.SK, seed).standard_normal(len(iu)) / np.sqrt(n)
    edges = tuple((int(i), int(j), float(c)) for i, j, c in zip(iu, ju, v))
    return ProblemInstance(n, edges, Family.SK, seed)


def chimera_site(row: int, col: int, k: int, n_cols: int) -> int:
    """Linear index of qubit ``k`` (0-3 vertical shore, 4-7 horizontal shore) of a cell."""
    return 8 * (row * n_cols + col) + k


def chimera_graph(m: int, n: int) -> list[tuple[int, int]]:
    """Edge list of the ``m x n`` Chimera graph of K_{4,4} cells.

    Vertical-shore qubits couple to the same qubit in the cell below,
    horizontal-shore qubits to the same qubit in the cell to the right.
    """
    if m < 1 or n < 1:
        raise InstanceError(f"Chimera dimensions must be >= 1, got {m}x{n}")
    edges = []
    for r in range(m):
        for c in range(n):
            for a in range(4):
                for b in range(4, 8):
                    edges.append((chimera_site(r, c, a, n), chimera_site(r, c, b, n)))
            if r + 1 < m:
                for a in range(4):
                    edges.append((chimera_site(r, c, a, n), chimera_site(r + 1, c, a, n)))
            if c + 1 < n:
                for b in range(4, 8):
                    edges.append((chimera_site(r, c, b, n), chimera_site(r, c + 1, b, n)))
    return sorted(edges)


def gen_chimera(m: int, n: int, coupling: str = "normal", seed: int = 0) -> ProblemInstance:
    """Chimera spin glass; couplings are standard normal or uniform +-1 per edge."""
    pairs = chimera_graph(m, n)
    rng = _rng(Family.CHIMERA, seed)
    if coupling == "normal":
        v = rng.standard_normal(len(pairs))
    elif coupling == "pm1":
        v = np.where(rng.random(len(pairs)) < 0.5, -1.0, 1.0)
    else:
        raise InstanceError(f"unknown Chimera coupling distribution {coupling!r}")
    edges = tuple((i, j, float(c)) for (i, j), c in zip(pairs, v))
    params = {"m": m, "n": n, "coupling": coupling}
    return ProblemInstance(8 * m * n, edges, Family.CHIMERA, seed, params)


def generate(family: str | Family, size, seed: int, coupling: str = "normal") -> ProblemInstance:
    """Dispatch on family name; ``size`` is a site count or an ``(m, n)`` Chimera shape."""
    family = Family(family)
    if family is Family.RI1D:
        return gen_ri1d(int(size), seed)
    if family is Family.SK:
        return gen_sk(int(size), seed)
    if family is Family.CHIMERA:
        m, n = (size, size) if np.isscalar(size) else size
        return gen_chimera(int(m), int(n), coupling, seed)
    raise InstanceError("CUSTOM instances are loaded from file, not generated")


def as_spins(cfg, n_sites: int | None = None) -> np.ndarray:
    s = np.asarray(cfg)
    if n_sites is not None and s.shape[-1] != n_sites:
        raise InstanceError(f"configuration length {s.shape[-1]} != n_sites {n_sites}")
    if not np.all(np.abs(s) == 1):
        raise InstanceError("spin entries must be +1 or -1")
    return s


def classical_energy(inst: ProblemInstance, cfg) -> float | np.ndarray:
    """``sum_edges v * s_i * s_j``; accepts a single config or a stack of configs."""
    s = as_spins(cfg, inst.n_sites).astype(np.float64)
    if inst.n_edges == 0:
        return 0.0 if s.ndim == 1 else np.zeros(s.shape[0])
    e = (s[..., inst.edge_i] * s[..., inst.edge_j]) @ inst.edge_v
    return float(e) if s.ndim == 1 else e


def all_configs(n_sites: int) -> np.ndarray:
    """All ``2**n`` configurations; row ``b`` has ``s_i = 1 - 2 * bit_i(b)``."""
    b = np.arange(2**n_sites, dtype=np.int64)[:, None]
    bits = (b >> np.arange(n_sites)) & 1
    return (1 - 2 * bits).astype(np.int8)
