import math

import numpy as np
import pytest

from tvmcaqc.instances import ProblemInstance, gen_ri1d, gen_sk
from tvmcaqc.jastrow import JastrowParams
from tvmcaqc.oracles import exact_propagate
from tvmcaqc.sampler import ExactSummer, SampleStats, SamplingPlan, sample_batch
from tvmcaqc.tvmc import (
    TRAJECTORY_COLUMNS,
    DegenerateMetricError,
    NoSamplesError,
    Regularization,
    Schedule,
    TvmcConfig,
    TvmcLinearSystem,
    integrate_annealing,
    estimate_system,
    solve_parameter_derivative,
    vap_residual,
)

from conftest import random_params
from oracle_utils import exact_moments


def test_schedule():
    s = Schedule(5.0)
    assert s.gamma(0) == 1.0 and s.gamma(5.0) == 0.0 and s.gamma(2.5) == 0.5
    ts = np.linspace(0, 5, 50)
    assert np.all(np.diff([s.gamma(t) for t in ts]) <= 0)
    with pytest.raises(ValueError):
        Schedule(0.0)
    with pytest.raises(ValueError):
        Schedule(1.0, "CUBIC")


def test_zero_params_identity_metric():
    inst = gen_sk(6, 1)
    p = JastrowParams.zeros(inst)
    sys = estimate_system(ExactSummer(inst, p).sample(p, 0.7))
    np.testing.assert_allclose(sys.s_matrix, np.eye(p.n_params), atol=1e-12)


def test_gamma_zero_real_force():
    inst = gen_sk(6, 2)
    p = random_params(inst, 1)
    sys = estimate_system(ExactSummer(inst, p).sample(p, 0.0))
    np.testing.assert_allclose(sys.force.imag, 0.0, atol=1e-12)


def test_sampled_system_matches_exact():
    inst = gen_sk(6, 3)
    p = random_params(inst, 2, scale=0.3)
    _, s_ex, f_ex, _, _ = exact_moments(p, inst, 0.5)
    st = sample_batch(p, inst, 0.5, SamplingPlan(n_chains=8, n_samples=200000, thin_sweeps=2), seed=9)
    sys = estimate_system(st)
    # crude per-entry error bound from the entry variance, inflated for autocorrelation
    k = p.n_params
    assert np.max(np.abs(sys.s_matrix - s_ex)) < 4 * 2 * math.sqrt(1.0 / st.n_samples) * 2
    fscale = sys.mc_error_scale * math.sqrt(k)
    assert np.max(np.abs(sys.force - f_ex)) < 4 * max(fscale, 1e-3) * 2


def test_empty_stats():
    with pytest.raises(NoSamplesError):
        estimate_system(SampleStats(3))


def test_solve_identity():
    f = np.array([1 + 2j, -0.5j, 3.0])
    sys = TvmcLinearSystem(np.eye(3), f, 0.0)
    np.testing.assert_allclose(solve_parameter_derivative(sys), -1j * f)
    np.testing.assert_allclose(solve_parameter_derivative(TvmcLinearSystem(np.eye(3), np.zeros(3, complex), 0.0)), 0)


def test_solve_residual_cutoff_zero():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((10, 10))
    s = a @ a.T + 0.5 * np.eye(10)
    f = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    adot = solve_parameter_derivative(TvmcLinearSystem(s, f, 0.0), Regularization("SVD_CUTOFF", 0.0))
    # S alpha_dot = -i f  <=>  S (i alpha_dot) = f
    assert np.linalg.norm(s @ (1j * adot) - f) < 1e-10


def test_diagonal_shift():
    s = np.diag([2.0, 4.0])
    f = np.array([1.0, 1.0], complex)
    adot = solve_parameter_derivative(TvmcLinearSystem(s, f, 0.0), Regularization("DIAGONAL_SHIFT", 0.5))
    np.testing.assert_allclose(adot, -1j * f / (1.5 * np.diag(s)))


def test_svd_cutoff_drops_small_modes():
    s = np.diag([1.0, 1e-9])
    f = np.array([1.0, 1.0], complex)
    adot = solve_parameter_derivative(TvmcLinearSystem(s, f, 0.0), Regularization("SVD_CUTOFF", 1e-6))
    np.testing.assert_allclose(adot, [-1j, 0.0])


def test_regularization_validation():
    with pytest.raises(ValueError):
        Regularization("DIAGONAL_SHIFT", 0.0)
    with pytest.raises(ValueError):
        Regularization("SVD_CUTOFF", -1.0)


def test_degenerate_metric():
    with pytest.raises(DegenerateMetricError):
        solve_parameter_derivative(TvmcLinearSystem(np.zeros((2, 2)), np.ones(2, complex), 0.0))


def test_vap_residual():
    assert vap_residual(TvmcLinearSystem(np.eye(4), np.zeros(4, complex), 0.0)) == 0.0
    assert vap_residual(TvmcLinearSystem(np.eye(4), np.full(4, 2.0 + 0j), 0.0)) == pytest.approx(2.0)
    inst = gen_ri1d(6, 1)
    p = JastrowParams.zeros(inst)
    assert vap_residual(estimate_system(ExactSummer(inst, p).sample(p, 1.0))) == pytest.approx(0.0, abs=1e-12)


def test_check_psd_flags_negative():
    sys = TvmcLinearSystem(np.diag([1.0, -0.5]), np.zeros(2, complex), 0.0)
    with pytest.raises(ArithmeticError):
        sys.check_psd()


def test_decoupled_spins_stay_exact():
    inst = ProblemInstance(4, ((0, 1, 0.0), (2, 3, 0.0)))
    tr = integrate_annealing(inst, Schedule(2.0), TvmcConfig(dt=0.02, exact=True, output_stride=5))
    np.testing.assert_allclose(tr.final_params.flat(), 0.0, atol=1e-14)
    np.testing.assert_allclose(tr.column("e_inst"), -tr.column("gamma"), atol=1e-12)


def test_single_spin_success():
    inst = ProblemInstance(1, ())
    tr = integrate_annealing(inst, Schedule(1.0), TvmcConfig(dt=0.1, exact=True, e_min=0.0))
    assert tr.rows[-1]["p_success"] == pytest.approx(1.0)


def test_times_and_endpoint():
    inst = gen_ri1d(5, 2)
    tr = integrate_annealing(inst, Schedule(3.0), TvmcConfig(dt=0.07, exact=True, output_stride=4))
    t = tr.times
    assert t[0] == 0.0 and t[-1] == 3.0 and np.all(np.diff(t) > 0)
    assert set(TRAJECTORY_COLUMNS) <= set(tr.rows[0])
    assert len(tr.params) == len(tr.rows)


def test_exact_mode_deterministic():
    inst = gen_ri1d(6, 3)
    cfg = TvmcConfig(dt=0.05, exact=True)
    a = integrate_annealing(inst, Schedule(2.0), cfg)
    b = integrate_annealing(inst, Schedule(2.0), cfg)
    np.testing.assert_array_equal(a.final_params.flat(), b.final_params.flat())


def test_exact_mode_tracks_dense_oracle():
    inst = gen_ri1d(6, 4)
    sched = Schedule(4.0)
    tr = integrate_annealing(inst, sched, TvmcConfig(dt=4.0 / 400, exact=True, output_stride=40))
    ex = exact_propagate(inst, sched, 4.0 / 400, output_stride=40)
    assert np.max(np.abs(tr.column("e_inst") - ex.energy_density(6))) < 0.02


def test_sampled_short_run():
    inst = gen_ri1d(6, 5)
    cfg = TvmcConfig(dt=0.05, plan=SamplingPlan(n_chains=2, n_samples=2000), seed=1, output_stride=10)
    tr = integrate_annealing(inst, Schedule(1.0), cfg)
    assert tr.rows[0]["e_inst"] == pytest.approx(-1.0)
    assert tr.diagnostics and {"acceptance_rate", "tau_eloc", "samples_per_chain"} <= set(tr.diagnostics[0])


def test_measure_exact_rows():
    inst = gen_ri1d(6, 5)
    cfg = TvmcConfig(dt=0.05, plan=SamplingPlan(n_samples=500), seed=1, measure_exact=True)
    tr = integrate_annealing(inst, Schedule(1.0), cfg)
    assert tr.metadata["measure"] == "exact"
    assert tr.rows[-1]["e_inst_err"] == 0.0


def test_writers(tmp_path):
    inst = gen_ri1d(4, 1)
    tr = integrate_annealing(inst, Schedule(1.0), TvmcConfig(dt=0.1, plan=SamplingPlan(n_samples=200), seed=2))
    tr.write_csv(tmp_path / "t.csv")
    files = tr.write_param_snapshots(tmp_path)
    tr.write_diagnostics(tmp_path / "d.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header == ["source"] + TRAJECTORY_COLUMNS
    assert len(files) == len(tr.rows)
    assert (tmp_path / "d.csv").exists()
