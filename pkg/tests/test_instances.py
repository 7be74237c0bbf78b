import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvmcaqc.instances import (
    Family,
    InstanceError,
    ProblemInstance,
    all_configs,
    chimera_graph,
    classical_energy,
    gen_chimera,
    gen_ri1d,
    gen_sk,
    generate,
)


def test_ri1d_two_sites():
    inst = gen_ri1d(2, 5)
    assert inst.n_edges == 1
    i, j, v = inst.edges[0]
    assert (i, j) == (0, 1) and -1.0 < v <= 0.0


def test_ri1d_deterministic_and_structured():
    a, b = gen_ri1d(64, 9), gen_ri1d(64, 9)
    assert a.edges == b.edges
    assert a.n_edges == 63
    assert all(j == i + 1 and -1.0 < v <= 0.0 for i, j, v in a.edges)
    assert a.is_chain()


def test_ri1d_mean_coupling():
    vals = np.concatenate([-gen_ri1d(64, s).edge_v for s in range(200)])
    assert abs(vals.mean() - 0.5) < 0.02


@pytest.mark.parametrize("n,edges", [(3, 3), (24, 276)])
def test_sk_edge_count(n, edges):
    assert gen_sk(n, 1).n_edges == edges


def test_sk_variance():
    inst = gen_sk(64, 3)
    assert abs(np.var(np.sqrt(64) * inst.edge_v) - 1.0) < 0.1


@pytest.mark.parametrize("n", [1, 0])
def test_invalid_sizes(n):
    with pytest.raises(InstanceError):
        gen_ri1d(n, 0)
    with pytest.raises(InstanceError):
        gen_sk(n, 0)


@pytest.mark.parametrize("m,n,sites", [(2, 2, 32), (3, 3, 72), (1, 1, 8)])
def test_chimera_sizes(m, n, sites):
    assert gen_chimera(m, n, seed=1).n_sites == sites


def test_chimera_cell_structure():
    inst = gen_chimera(1, 1, seed=1)
    assert inst.n_edges == 16
    e = chimera_graph(2, 3)
    # 6 cells x 16 + vertical 3 cols x 1 x 4 + horizontal 2 rows x 2 x 4
    assert len(e) == 6 * 16 + 12 + 16
    deg = np.bincount(np.array(e).ravel(), minlength=48)
    assert deg.max() <= 6


def test_chimera_pm1():
    inst = gen_chimera(2, 2, coupling="pm1", seed=4)
    assert set(np.unique(inst.edge_v)) <= {-1.0, 1.0}


def test_family_tags():
    assert generate("SK", 4, 1).family is Family.SK
    assert generate("CHIMERA", (1, 2), 1).n_sites == 16


def test_validation():
    with pytest.raises(InstanceError):
        ProblemInstance(3, ((1, 0, 1.0),))
    with pytest.raises(InstanceError):
        ProblemInstance(3, ((0, 3, 1.0),))
    with pytest.raises(InstanceError):
        ProblemInstance(3, ((0, 1, 1.0), (0, 1, 2.0)))


def test_single_edge_energy():
    inst = ProblemInstance(2, ((0, 1, -1.0),))
    assert classical_energy(inst, [1, 1]) == -1.0
    assert classical_energy(inst, [1, -1]) == 1.0
    with pytest.raises(ValueError):
        classical_energy(inst, [1, 1, 1])


def test_energy_matches_definition():
    inst = gen_sk(10, 2)
    for cfg in all_configs(10)[::37]:
        direct = sum(v * cfg[i] * cfg[j] for i, j, v in inst.edges)
        assert classical_energy(inst, cfg) == pytest.approx(direct, abs=1e-12)


def test_ri1d_aligned_minimizes():
    inst = gen_ri1d(10, 7)
    e = classical_energy(inst, all_configs(10))
    assert e.min() == pytest.approx(-(-inst.edge_v).sum())
    assert classical_energy(inst, np.ones(10)) == pytest.approx(e.min())


def test_json_roundtrip(tmp_path):
    inst = gen_sk(12, 11)
    path = tmp_path / "i.json"
    inst.save(path)
    back = ProblemInstance.load(path)
    assert back == inst
    assert back.edges == inst.edges


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 2**64 - 1), data=st.data())
def test_global_flip_symmetry(n, seed, data):
    inst = gen_sk(n, seed)
    cfg = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    assert classical_energy(inst, cfg) == pytest.approx(classical_energy(inst, -cfg), abs=1e-12)


def test_all_configs_enumerates():
    c = all_configs(4)
    assert c.shape == (16, 4)
    assert len({tuple(r) for r in c}) == 16
    assert set(itertools.chain.from_iterable(c.tolist())) == {-1, 1}
