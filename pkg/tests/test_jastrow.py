import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvmcaqc.instances import ProblemInstance, all_configs, classical_energy, gen_ri1d, gen_sk
from tvmcaqc.jastrow import (
    JastrowParams,
    Support,
    boltzmann_params,
    local_energy,
    local_energy_batch,
    log_psi,
    log_psi_batch,
    log_ratio_flip,
    o_matrix,
    o_vector,
)

from conftest import random_params
from oracle_utils import amplitude_table, basis_configs, dense_hamiltonian

PAIR = ProblemInstance(2, ((0, 1, -1.0),))


def pair_params(j1, c):
    p = JastrowParams.zeros(PAIR)
    return p.with_flat(np.array([j1[0], j1[1], c], dtype=complex))


def test_zero_params():
    inst = gen_sk(6, 1)
    p = JastrowParams.zeros(inst)
    for cfg in all_configs(6):
        assert log_psi(p, cfg) == 0
        assert log_ratio_flip(p, cfg, 3) == 0
        assert local_energy(p, cfg, inst, 1.0) == pytest.approx(-6.0)


def test_param_counts():
    inst = gen_sk(7, 1)
    assert JastrowParams.zeros(inst).n_params == 7 + 21
    chain = gen_ri1d(7, 1)
    assert JastrowParams.zeros(chain).n_params == 7 + 6
    assert JastrowParams.zeros(chain, Support.ALL_PAIRS).n_params == 7 + 21


def test_flat_index_bijection():
    p = JastrowParams.zeros(gen_ri1d(5, 1))
    kinds = [p.index(k) for k in range(p.n_params)]
    assert [k.flat_index for k in kinds] == list(range(p.n_params))
    assert all(k.kind == "one" for k in kinds[:5]) and all(k.kind == "two" for k in kinds[5:])
    assert kinds[5].sites == (0, 1)


def test_pair_substitution():
    j1, c = (0.3 + 0.1j, -0.2 + 0.5j), 0.7 - 0.4j
    p = pair_params(j1, c)
    assert log_psi(p, [1, -1]) == pytest.approx(j1[0] - j1[1] - c)
    assert log_ratio_flip(p, [1, 1], 0) == pytest.approx(-2 * (j1[0] + c))


def test_log_ratio_bad_site():
    p = JastrowParams.zeros(PAIR)
    with pytest.raises(IndexError):
        log_ratio_flip(p, [1, 1], 2)


def test_dimension_mismatch():
    p = JastrowParams.zeros(PAIR)
    with pytest.raises(ValueError):
        log_psi(p, [1, 1, 1])


def test_amplitudes_match_table():
    inst = gen_sk(8, 3)
    p = random_params(inst, 1)
    table = amplitude_table(p)
    mine = np.exp(log_psi_batch(p, basis_configs(8)))
    np.testing.assert_allclose(mine, table, rtol=1e-12)


def test_log_ratio_consistency():
    inst = gen_sk(8, 4)
    p = random_params(inst, 2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        cfg = rng.choice([-1, 1], 8)
        for i in range(8):
            flipped = cfg.copy()
            flipped[i] *= -1
            assert log_ratio_flip(p, cfg, i) == pytest.approx(log_psi(p, flipped) - log_psi(p, cfg), abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.0])
def test_local_energy_dense_oracle(gamma):
    inst = gen_sk(8, 5)
    p = random_params(inst, 3)
    psi = amplitude_table(p)
    oracle = (dense_hamiltonian(inst, gamma) @ psi) / psi
    mine = local_energy_batch(p, basis_configs(8), inst, gamma)
    np.testing.assert_allclose(mine, oracle, rtol=1e-10, atol=1e-10)
    assert local_energy(p, basis_configs(8)[17], inst, gamma) == pytest.approx(oracle[17])


def test_gamma_zero_is_classical():
    inst = gen_ri1d(6, 2)
    p = random_params(inst, 4)
    cfgs = all_configs(6)
    np.testing.assert_allclose(local_energy_batch(p, cfgs, inst, 0.0), classical_energy(inst, cfgs))


def test_o_vector_pair():
    np.testing.assert_array_equal(o_vector(JastrowParams.zeros(PAIR), [1, -1]), [1, -1, -1])


def test_o_vector_finite_difference():
    inst = gen_sk(6, 6)
    p = random_params(inst, 5)
    cfg = np.array([1, -1, -1, 1, 1, -1])
    alpha = p.flat()
    h = 1e-5
    o = o_vector(p, cfg)
    for k in range(p.n_params):
        e = np.zeros_like(alpha)
        e[k] = h
        fd = (log_psi(p.with_flat(alpha + e), cfg) - log_psi(p.with_flat(alpha - e), cfg)) / (2 * h)
        assert abs(fd - o[k]) < 1e-8


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 1000), data=st.data())
def test_o_entries_are_signs(n, seed, data):
    inst = gen_sk(n, seed)
    p = JastrowParams.zeros(inst)
    cfg = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    assert set(np.unique(o_vector(p, cfg))) <= {-1.0, 1.0}
    np.testing.assert_array_equal(o_matrix(p, cfg[None])[0], o_vector(p, cfg))


def test_modulus_depends_on_real_part_only():
    inst = gen_sk(5, 1)
    p = random_params(inst, 6)
    q = p.with_flat(p.flat().real + 0j)
    cfgs = all_configs(5)
    np.testing.assert_allclose(2 * log_psi_batch(p, cfgs).real, 2 * log_psi_batch(q, cfgs).real)


def test_boltzmann_mapping():
    inst = gen_sk(8, 2)
    beta = 1.3
    p = boltzmann_params(inst, beta)
    cfgs = all_configs(8)
    w = np.exp(2 * log_psi_batch(p, cfgs).real)
    b = np.exp(-beta * classical_energy(inst, cfgs))
    np.testing.assert_allclose(w / w.sum(), b / b.sum(), rtol=1e-10)
