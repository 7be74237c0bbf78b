"""Experiment orchestration: single anneals, disorder ensembles, SA baselines, oracle runs.

Every run writes into its own directory and refuses to overwrite a finished
one. Child seeds are pure functions of ``(base_seed, realization, T index)``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, worker_count
from .instances import ProblemInstance, generate
from .jastrow import Support
from .observables import (
    AnnealResult,
    effective_inverse_temperatures,
    kde,
    n_repetitions,
    success_probability,
)
from .oracles import brute_force_ground, exact_propagate, free_fermion_propagate, simulated_annealing
from .oracles.dense import MAX_SITES as DENSE_MAX_SITES
from .oracles.annealing import linear_betas
from .sampler import EXACT_MAX_SITES, SamplingPlan
from .tvmc import TRAJECTORY_COLUMNS, Regularization, Schedule, TvmcConfig, integrate_annealing

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "source", "realization", "instance_seed", "T", "n_sites", "e_final", "e_residual_final",
    "p_success", "p_success_err", "n_rep", "kink_density_final", "status",
]
NREP_COLUMNS = ["source", "realization", "instance_seed", "T", "p_success", "n_rep"]


class RunExistsError(FileExistsError):
    pass


def _seed_words(*keys: int) -> int:
    words = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def instance_seed(base_seed: int, realization: int) -> int:
    """Instance seeds ignore the T index so every T sees the same disorder."""
    return _seed_words(base_seed, realization)


def run_seed(base_seed: int, realization: int, t_index: int) -> int:
    return _seed_words(base_seed, realization, t_index, 1)


def make_instance(config: ExperimentConfig, seed: int) -> ProblemInstance:
    m = config["model"]
    return generate(m["family"], config.size, seed, m["coupling"])


def _prepare_dir(out: Path, config: ExperimentConfig, extra: dict | None = None) -> None:
    if (out / "result.json").exists() or (out / "summary.csv").exists():
        raise RunExistsError(f"{out} already holds results; choose a fresh output directory")
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(config.source_text)
    resolved = {"config": config.data, "version": __version__, **(extra or {})}
    (out / "resolved_config.json").write_text(json.dumps(resolved, indent=2, default=str))


def _tvmc_config(config: ExperimentConfig, T: float, n_sites: int, seed: int, e_min) -> TvmcConfig:
    t = config["tvmc"]
    exact = bool(t["exact"])
    if exact and n_sites > EXACT_MAX_SITES:
        raise ValueError(f"tvmc.exact needs n_sites <= {EXACT_MAX_SITES}")
    measure = bool(t["measure_exact"]) and not exact
    if measure and n_sites > EXACT_MAX_SITES:
        raise ValueError(f"tvmc.measure_exact needs n_sites <= {EXACT_MAX_SITES}")
    n_chains = int(t["n_chains"]) or worker_count()
    plan = SamplingPlan(n_chains=n_chains, burn_in_sweeps=t["burn_in_sweeps"],
                        n_samples=int(t["n_samples"]), thin_sweeps=int(t["thin_sweeps"]))
    return TvmcConfig(
        dt=float(t["dt"]) if t["dt"] else T * float(t["dt_fraction"]),
        plan=plan,
        reg=Regularization(t["reg_mode"], float(t["reg_value"])),
        output_stride=int(t["output_stride"]),
        support=Support(t["support"]),
        exact=exact,
        seed=seed,
        e_min=e_min,
        check_psd=bool(t["check_psd"]),
        measure_exact=measure,
    )


def write_oracle_csv(path: Path, source: str, sched: Schedule, times, energy, kink, p_success,
                     n_sites: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["source"] + TRAJECTORY_COLUMNS)
        w.writeheader()
        for k, t in enumerate(times):
            w.writerow({
                "source": source, "t": t, "s": t / sched.total_time, "gamma": sched.gamma(t),
                "e_inst": energy[k] / n_sites, "e_inst_err": 0.0, "e_residual": "",
                "kink_density": "" if kink is None or kink[k] is None else kink[k],
                "p_success": "" if p_success is None or p_success[k] is None else p_success[k],
                "vap_residual": "", "acceptance_rate": "", "smin": "", "smax": "",
            })


def _exact_dynamics(inst: ProblemInstance, sched: Schedule, dt: float, stride: int, ground, out: Path) -> str:
    if inst.n_sites <= DENSE_MAX_SITES:
        traj = exact_propagate(inst, sched, dt, stride, ground.ground_set if ground else None)
        write_oracle_csv(out / "trajectory_exact.csv", "exact", sched, traj.times, traj.energy,
                         traj.kink_density, traj.p_success, inst.n_sites)
        return "exact"
    if inst.is_chain():
        traj = free_fermion_propagate(inst, sched, dt, stride)
        write_oracle_csv(out / "trajectory_exact.csv", "fermion", sched, traj.times, traj.energy,
                         traj.kink_density, None, inst.n_sites)
        return "fermion"
    log.warning("no exact dynamics oracle for %d sites of %s", inst.n_sites, inst.family.value)
    return "none"


def _ground(config: ExperimentConfig, inst: ProblemInstance):
    if not config["oracle"]["ground"]:
        return None
    return brute_force_ground(inst)


def run_single(config: ExperimentConfig, inst_seed: int, T: float, out_dir: str | Path,
               seed: int | None = None, realization: int | None = None) -> AnnealResult:
    """One anneal: instance, optional ground-state oracle, t-VMC, observables, files."""
    out = Path(out_dir)
    _prepare_dir(out, config, {"instance_seed": inst_seed, "T": T, "run_seed": seed, "realization": realization})
    started = time.time()
    inst = make_instance(config, inst_seed)
    inst.save(out / "instance.json")
    ground = _ground(config, inst)
    e_min = ground.e_min if ground else None
    if ground:
        (out / "ground.json").write_text(json.dumps({
            "e_min": ground.e_min, "degeneracy": ground.degeneracy,
            "ground_set": [np.asarray(g).astype(int).tolist() for g in ground.ground_set[:64]],
        }))

    sched = Schedule(T, config["anneal"]["schedule"])
    tcfg = _tvmc_config(config, T, inst.n_sites, seed, e_min)
    traj = integrate_annealing(inst, sched, tcfg)
    traj.write_csv(out / "trajectory.csv")
    traj.write_param_snapshots(out)
    traj.write_diagnostics(out / "diagnostics.csv")

    with open(out / "beta_eff.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "s", "i", "j", "beta"])
        for row, alpha in zip(traj.rows, traj.params):
            b = effective_inverse_temperatures(traj.final_params.with_flat(alpha), inst, row["t"])
            for (i, j), v in zip(b.pairs, b.values):
                w.writerow([row["t"], row["s"], i, j, repr(float(v))])

    oracle_source = None
    if config["oracle"]["dynamics"]:
        dt = T * float(config["oracle"]["dt_fraction"])
        stride = max(1, round(tcfg.output_stride * tcfg.n_steps(T) / max(1, round(T / dt))))
        oracle_source = _exact_dynamics(inst, sched, dt, stride, ground, out)

    last = traj.rows[-1]
    p_s = p_err = n_rep = None
    if ground:
        mode = config["oracle"]["p_success_mode"]
        if mode == "auto":
            mode = "EXACT_SUM" if inst.n_sites <= 20 else "SAMPLED"
        if mode == "EXACT_SUM":
            p_s, p_err = success_probability(traj.final_params, inst, ground.ground_set, "EXACT_SUM")
        else:
            p_s, p_err = traj.final_stats.mean_hit, traj.final_stats.error("hit")
        n_rep = n_repetitions(min(max(p_s, 0.0), 1.0))
    result = AnnealResult(
        T=T, final_params=traj.final_params, e_final=last["e_inst"],
        e_residual_final=last["e_residual"], p_success=p_s, p_success_err=p_err, n_rep=n_rep,
        kink_density_final=last["kink_density"] if inst.is_chain() else None,
        extra={
            "instance_seed": inst_seed, "run_seed": seed, "realization": realization,
            "family": inst.family.value, "n_sites": inst.n_sites,
            "e_min": e_min, "e_final_err": last["e_inst_err"],
            "oracle_dynamics": oracle_source, "metadata": traj.metadata,
        },
    )
    (out / "result.json").write_text(json.dumps(result.to_dict(), indent=2, default=str))
    (out / "run_info.json").write_text(json.dumps({"wall_seconds": time.time() - started}))
    return result


def _summary_row(source: str, realization: int, inst_seed: int, T, res: dict | None, status: str) -> dict:
    row = {k: "" for k in SUMMARY_COLUMNS}
    row.update(source=source, realization=realization, instance_seed=inst_seed,
               T="" if T is None else T, status=status)
    if res:
        for k in ("n_sites", "e_final", "e_residual_final", "p_success", "p_success_err",
                  "n_rep", "kink_density_final"):
            row[k] = "" if res.get(k) is None else res[k]
    return row


def _ensemble_task(args) -> dict:
    data, source_text, r, ti, T, inst_seed, seed, out = args
    config = ExperimentConfig(data, source_text)
    try:
        res = run_single(config, inst_seed, T, out, seed, r)
        return {"realization": r, "t_index": ti, "T": T, "instance_seed": inst_seed,
                "result": res.to_dict(), "error": None}
    except Exception as exc:  # recorded per run; the ensemble continues
        return {"realization": r, "t_index": ti, "T": T, "instance_seed": inst_seed, "result": None,
                "error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc()}


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


def _finite_positive(values) -> tuple[np.ndarray, int]:
    x = np.array([float(v) for v in values if v not in ("", None, "inf")], dtype=float)
    keep = np.isfinite(x) & (x > 0)
    return x[keep], int(len(values) - keep.sum())


def write_distributions(out: Path, label: str, rows: list[dict], excluded: dict) -> None:
    """Log-density curves of kink density, P_s and N_rep; unusable values are counted, not dropped silently."""
    for key, name in (("kink_density_final", "log_kink"), ("p_success", "log_p_success"), ("n_rep", "log_n_rep")):
        vals, n_bad = _finite_positive([r[key] for r in rows])
        excluded[f"{name}_{label}"] = n_bad
        if len(vals) < 2:
            continue
        grid, dens = kde(np.log(vals))
        np.savetxt(out / f"kde_{name}_{label}.csv", np.column_stack([grid, dens]), delimiter=",",
                   header="log_value,density", comments="")


def _write_nrep(path: Path, rows: list[dict]) -> None:
    _write_csv(path, NREP_COLUMNS, [{k: r[k] for k in NREP_COLUMNS} for r in rows])


def _mean_curves(out: Path, ti: int, run_dirs: list[Path]) -> None:
    frames = []
    for d in run_dirs:
        with open(d / "trajectory.csv") as fh:
            frames.append(list(csv.DictReader(fh)))
    if not frames:
        return
    n_rows = min(len(f) for f in frames)
    rows = []
    for k in range(n_rows):
        e = np.array([float(f[k]["e_inst"]) for f in frames])
        kink = [f[k]["kink_density"] for f in frames]
        row = {"t": frames[0][k]["t"], "s": frames[0][k]["s"], "e_mean": e.mean(),
               "e_sem": e.std(ddof=1) / math.sqrt(len(e)) if len(e) > 1 else 0.0, "kink_mean": ""}
        if all(kink):
            row["kink_mean"] = float(np.mean([float(x) for x in kink]))
        rows.append(row)
    _write_csv(out / f"mean_trajectory_T{ti}.csv", list(rows[0]), rows)


def run_ensemble(config: ExperimentConfig, out_dir: str | Path | None = None) -> int:
    """All ``(realization, T)`` runs; returns the process exit code."""
    out = Path(out_dir) if out_dir else config.out_dir
    _prepare_dir(out, config)
    base = int(config["ensemble"]["base_seed"])
    times = [float(t) for t in config["anneal"]["times"]]
    tasks = []
    for r in range(int(config["ensemble"]["size"])):
        for ti, T in enumerate(times):
            tasks.append((config.data, config.source_text, r, ti, T, instance_seed(base, r),
                          run_seed(base, r, ti), str(out / "runs" / f"r{r:04d}_T{ti}")))
    results = _map(_ensemble_task, tasks, worker_count())

    summary, failures = [], []
    for res in results:
        status = "ok" if res["error"] is None else "failed"
        summary.append(_summary_row("tvmc", res["realization"], res["instance_seed"], res["T"],
                                    res["result"], status))
        if res["error"]:
            failures.append({k: res[k] for k in ("realization", "t_index", "T", "error", "traceback")})
            log.error("run r=%d T=%g failed: %s", res["realization"], res["T"], res["error"])
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    (out / "failures.json").write_text(json.dumps(failures, indent=2))

    excluded: dict = {}
    for ti, T in enumerate(times):
        ok = [r for r in summary if r["T"] == T and r["status"] == "ok"]
        write_distributions(out, f"T{ti}", ok, excluded)
        _write_nrep(out / f"nrep_T{ti}.csv", ok)
        _mean_curves(out, ti, [out / "runs" / f"r{r['realization']:04d}_T{ti}" for r in ok])
    (out / "distribution_excluded.json").write_text(json.dumps(excluded, indent=2))

    if not failures:
        return 0
    return 1 if len(failures) == len(results) else 2


def _sa_task(args) -> dict:
    data, source_text, r, inst_seed, seed = args
    config = ExperimentConfig(data, source_text)
    try:
        inst = make_instance(config, inst_seed)
        ground = brute_force_ground(inst)
        sa = config["sa"]
        betas = linear_betas(int(sa["n_sweeps"]), (float(sa["beta_start"]), float(sa["beta_end"])))
        res = simulated_annealing(inst, int(sa["n_sweeps"]), betas, seed, ground.e_min, int(sa["n_repeats"]))
        p = res.success_frequency
        n = len(res.energies)
        e_mean = float(res.energies.mean()) / inst.n_sites
        return {"realization": r, "instance_seed": inst_seed, "error": None, "result": {
            "n_sites": inst.n_sites, "e_final": e_mean,
            "e_residual_final": e_mean - ground.e_min / inst.n_sites,
            "p_success": p, "p_success_err": math.sqrt(p * (1 - p) / n),
            "n_rep": n_repetitions(p), "kink_density_final": None,
        }}
    except Exception as exc:
        return {"realization": r, "instance_seed": inst_seed, "result": None,
                "error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc()}


def run_sa_baseline(config: ExperimentConfig, out_dir: str | Path | None = None) -> int:
    """Per-instance SA success frequency over repeated seeds, in the quantum summary schema."""
    out = Path(out_dir) if out_dir else config.out_dir
    _prepare_dir(out, config)
    base = int(config["ensemble"]["base_seed"])
    tasks = [(config.data, config.source_text, r, instance_seed(base, r), run_seed(base, r, 0xA5))
             for r in range(int(config["ensemble"]["size"]))]
    results = _map(_sa_task, tasks, worker_count())
    summary, failures = [], []
    for res in results:
        result = res["result"]
        if result is not None and math.isinf(result["n_rep"]):
            result = {**result, "n_rep": "inf"}
        summary.append(_summary_row("sa", res["realization"], res["instance_seed"], None, result,
                                    "ok" if res["error"] is None else "failed"))
        if res["error"]:
            failures.append({k: res[k] for k in ("realization", "error", "traceback")})
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    (out / "failures.json").write_text(json.dumps(failures, indent=2))
    ok = [r for r in summary if r["status"] == "ok"]
    excluded: dict = {}
    write_distributions(out, "sa", ok, excluded)
    _write_nrep(out / "nrep_sa.csv", ok)
    (out / "distribution_excluded.json").write_text(json.dumps(excluded, indent=2))
    if not failures:
        return 0
    return 1 if len(failures) == len(results) else 2


def run_oracle(config: ExperimentConfig, out_dir: str | Path | None = None) -> int:
    """Exact dynamics and ground states for every ``(realization, T)``."""
    out = Path(out_dir) if out_dir else config.out_dir
    _prepare_dir(out, config)
    base = int(config["ensemble"]["base_seed"])
    for r in range(int(config["ensemble"]["size"])):
        inst = make_instance(config, instance_seed(base, r))
        ground = _ground(config, inst)
        for ti, T in enumerate(float(t) for t in config["anneal"]["times"]):
            d = out / "runs" / f"r{r:04d}_T{ti}"
            d.mkdir(parents=True, exist_ok=True)
            inst.save(d / "instance.json")
            if ground:
                (d / "ground.json").write_text(json.dumps({"e_min": ground.e_min, "degeneracy": ground.degeneracy}))
            dt = T * float(config["oracle"]["dt_fraction"])
            stride = max(1, int(config["tvmc"]["output_stride"]))
            _exact_dynamics(inst, Schedule(T, config["anneal"]["schedule"]), dt, stride, ground, d)
    return 0


def run_generate(config: ExperimentConfig, out_dir: str | Path | None = None) -> int:
    out = Path(out_dir) if out_dir else config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    base = int(config["ensemble"]["base_seed"])
    for r in range(int(config["ensemble"]["size"])):
        path = out / f"instance_r{r:04d}.json"
        if path.exists():
            raise RunExistsError(f"{path} exists")
        make_instance(config, instance_seed(base, r)).save(path)
    return 0
