"""Scenario A/B drivers, seed streams and the replicate fan-out.

Seeds: every random draw takes its seed from ``seed_stream(root, replicate,
purpose)``, the first 8 bytes (little endian) of
``sha256(f"{root}|{replicate}|{purpose}")``. Purposes are ``truth`` (scenario A
mean and precisions; replicate index 0 always), ``chain`` (AR draws), ``noise``
(receiver noise). The forward model never depends on a seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .basis import BasisConfig, truncate_coeffs
from .config import ExperimentConfig, dump_resolved, from_dict, resolved_dict
from .forward import (
    ForwardModel,
    apply_forward,
    build_forward_model,
    expand_steering,
    expand_waveform,
)
from .inference import PosteriorState, run
from .metrics import ErrorReport, coefficient_error, coverage_3sigma, field_error
from .scene import (
    ARParams,
    EvalGrid,
    Scatterer,
    chain_array,
    complex_normal,
    draw_ar_chain,
    fence_scatterers,
    project_scatterers,
    render_map,
    snr_to_noise_precision,
    synthesize_frames,
)

log = logging.getLogger(__name__)

PURPOSES = ("truth", "chain", "noise")
WORKERS_ENV = "CLUTTERVMP_WORKERS"
SWEEP_HEADER = ["n_coeffs", "snr_db", "seed", "coeff_mse", "field_mse", "coverage", "alpha_hat", "runtime_s"]


def seed_stream(root: int, replicate: int, purpose: str) -> int:
    digest = hashlib.sha256(f"{root}|{replicate}|{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


def map_replicates(fn, cfg: ExperimentConfig, replicates, workers: int | None = None) -> list:
    """``[fn(cfg_dict, r) for r in replicates]``, possibly in worker processes.

    Results come back in replicate order whatever the schedule.
    """
    workers = workers_from_env() if workers is None else workers
    d = resolved_dict(cfg)
    reps = list(replicates)
    if workers == 1 or len(reps) <= 1:
        return [fn(d, r) for r in reps]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, [d] * len(reps), reps))


# --- shared model construction ------------------------------------------------

_MODEL_CACHE: dict[str, ForwardModel] = {}
_MODEL_CACHE_SIZE = 8  # a scenario B sweep needs one model per basis size


def forward_model_for(cfg: ExperimentConfig, basis: BasisConfig | None = None) -> ForwardModel:
    """Forward model at unit noise precision, cached per radar/basis/tolerance."""
    basis = cfg.basis_config() if basis is None else basis
    key = json.dumps([resolved_dict(cfg)["radar"], repr(basis), cfg.inference.pinv_tol], sort_keys=True)
    fm = _MODEL_CACHE.get(key)
    if fm is None:
        setup = cfg.radar_setup()
        fm = build_forward_model(setup.radar, setup.geometry, basis, 1.0, cfg.inference.pinv_tol)
        for w in fm.meta.get("warnings", []):
            log.warning("%s", w)
        if len(_MODEL_CACHE) >= _MODEL_CACHE_SIZE:
            _MODEL_CACHE.pop(next(iter(_MODEL_CACHE)))
        _MODEL_CACHE[key] = fm
    return fm


def _report(state: PosteriorState, truth: np.ndarray, true_map: np.ndarray, basis: BasisConfig, grid: EvalGrid):
    return ErrorReport(
        coefficient_error(state.mu, truth),
        field_error(state.mu, true_map, basis, grid),
        coverage_3sigma(state.mu, truth),
        float(state.alpha),
    )


def _runtime_cell(cfg: ExperimentConfig, seconds: float):
    return float(seconds) if cfg.outputs.record_runtime else ""


# --- scenario A -------------------------------------------------------------


def scenario_a_truth(cfg: ExperimentConfig) -> ARParams:
    """Fixed mean and precisions shared by all replicates."""
    sa = cfg.scenario.a
    basis = cfg.basis_config()
    rng = np.random.default_rng(seed_stream(cfg.seeds.root, 0, "truth"))
    q = np.add.outer(np.abs(basis.angle_wave_numbers), np.abs(basis.range_wave_numbers)).ravel()
    mu = complex_normal(rng, 0.0, (1.0 + q) ** (2 * sa.mu_decay))
    lam = np.exp(rng.uniform(np.log(sa.lambda_min), np.log(sa.lambda_max), basis.n_coeffs))
    return ARParams(sa.alpha, mu, lam)


@dataclass
class SimulatedData:
    chain: np.ndarray  # (n_frames, N_Gamma) true coefficients
    frames: np.ndarray  # (n_frames, rows)
    fm: ForwardModel  # at the noise precision used


def simulate_scenario_a(cfg: ExperimentConfig, replicate: int) -> SimulatedData:
    truth = scenario_a_truth(cfg)
    chain = chain_array(draw_ar_chain(truth, cfg.inference.n_frames, seed_stream(cfg.seeds.root, replicate, "chain")))
    fm0 = forward_model_for(cfg)
    lam_w = cfg.noise.noise_precision
    if lam_w is None:
        lam_w = snr_to_noise_precision(cfg.noise.snr_db, fm0, chain[0])
    fm = fm0.with_noise_precision(lam_w)
    frames = synthesize_frames(fm, chain, seed_stream(cfg.seeds.root, replicate, "noise"))
    return SimulatedData(chain, frames, fm)


def _scenario_a_replicate(cfg_dict: dict, replicate: int) -> dict:
    cfg = from_dict(cfg_dict)
    basis = cfg.basis_config()
    truth = scenario_a_truth(cfg)
    data = simulate_scenario_a(cfg, replicate)
    t0 = time.perf_counter()
    state, diag = run(
        data.frames,
        data.fm,
        cfg.inference.n_iters,
        cfg.inference.update_alpha,
        transition=cfg.inference.transition,
    )
    elapsed = time.perf_counter() - t0
    grid = EvalGrid.uniform(basis)
    report = _report(state, truth.mean, render_map(truth.mean, basis, grid), basis, grid)
    return {
        "replicate": replicate,
        "seed": seed_stream(cfg.seeds.root, replicate, "chain"),
        "chain": data.chain,
        "noise_precision": data.fm.noise_precision,
        "state": state,
        "diag": list(diag.rows()),
        "xi_floor_hits": diag.xi_floor_hits,
        "report": report,
        "runtime_s": elapsed,
    }


def run_scenario_a(cfg: ExperimentConfig, out_dir: str | Path, workers: int | None = None) -> list[dict]:
    """Truth, posterior snapshot, diagnostics and error report per replicate, plus a summary."""
    if cfg.scenario.kind != "A":
        raise ValueError("run_scenario_a needs scenario.kind = A")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = dump_resolved(cfg, out / "resolved_config.yaml")
    truth = scenario_a_truth(cfg)
    results = map_replicates(_scenario_a_replicate, cfg, range(cfg.seeds.replicates), workers)
    rows = []
    for res in results:
        rd = out / f"rep_{res['replicate']:03d}"
        rd.mkdir(exist_ok=True)
        io.write_json(
            rd / "truth.json",
            {
                "alpha": truth.alpha,
                "mu": io.complex_to_json(truth.mean),
                "lambda": truth.precision_diag.tolist(),
                "noise_precision": res["noise_precision"],
                "seed_chain": res["seed"],
            },
            h,
        )
        if cfg.outputs.binary:
            io.write_matrix(rd / "truth_chain.bin", res["chain"])
        io.write_json(rd / "posterior.json", io.posterior_snapshot(res["state"]), h)
        io.write_csv(rd / "diagnostics.csv", ["iteration", "d_mu", "d_lambda", "alpha"], res["diag"], h)
        rep = res["report"].to_dict()
        rep["xi_floor_hits"] = res["xi_floor_hits"]
        if cfg.outputs.record_runtime:
            rep["runtime_s"] = res["runtime_s"]
        io.write_json(rd / "report.json", rep, h)
        r = res["report"]
        rows.append(
            [
                cfg.basis_config().n_coeffs,
                _snr_label(cfg),
                res["seed"],
                r.coeff_mse,
                r.field_mse,
                r.coverage_3sigma,
                r.alpha_hat,
                _runtime_cell(cfg, res["runtime_s"]),
            ]
        )
    io.write_csv(out / "summary.csv", SWEEP_HEADER, rows, h)
    return results


def _snr_label(cfg: ExperimentConfig):
    return "" if cfg.noise.noise_precision is not None else float(cfg.noise.snr_db)


# --- scenario B -------------------------------------------------------------


def scenario_b_scatterers(cfg: ExperimentConfig, basis: BasisConfig) -> list[Scatterer]:
    b = cfg.scenario.b
    f = b.fence
    sc = fence_scatterers(basis, f.n_posts, (f.x_min, f.x_max), (f.y_min, f.y_max), f.amplitude)
    sc += [Scatterer(s.theta, s.range, complex(s.amplitude_re, s.amplitude_im)) for s in b.scatterers]
    return sc


@dataclass
class SceneB:
    ref_basis: BasisConfig
    ref_gamma: np.ndarray  # scatterer projection at the reference size
    grid: EvalGrid
    true_map: np.ndarray  # reference-size rendering of the scatterers
    chain: np.ndarray  # (n_frames, ref N_Gamma); working chains are its truncations
    unit_noise: np.ndarray  # CN(0, 1) receiver noise, scaled per SNR
    ref_signal: np.ndarray | None = None  # noiseless reference-size frames (frames_from="reference")
    ref_power: float | None = None


def scene_b(cfg: ExperimentConfig, replicate: int) -> SceneB:
    """Scatterer scene and AR chain for one replicate, held at the reference size.

    The mode ordering is nested, so the chain at any working size is a
    truncation of the reference chain and all sizes see the same draws.
    """
    b = cfg.scenario.b
    work = cfg.basis_config()
    ref = BasisConfig(b.reference_basis[0], b.reference_basis[1], work.theta_domain, work.range_domain)
    gamma = project_scatterers(scenario_b_scatterers(cfg, ref), ref).gamma
    grid = EvalGrid.uniform(ref, b.map_grid[0], b.map_grid[1])
    true_map = render_map(gamma, ref, grid)
    p = ARParams(b.alpha, gamma, np.full(ref.n_coeffs, b.precision))
    chain = chain_array(draw_ar_chain(p, cfg.inference.n_frames, seed_stream(cfg.seeds.root, replicate, "chain")))
    radar = cfg.radar_setup().radar
    rng = np.random.default_rng(seed_stream(cfg.seeds.root, replicate, "noise"))
    noise = complex_normal(rng, 0.0, 1.0, size=(cfg.inference.n_frames, radar.n_rx * radar.n_samples))
    scene = SceneB(ref, gamma, grid, true_map, chain, noise)
    if b.frames_from == "reference":
        se, we = _reference_expansions(cfg, ref)
        scene.ref_signal = apply_forward(se, we, chain)
        scene.ref_power = float(np.mean(np.abs(apply_forward(se, we, gamma[None, :])) ** 2))
    return scene


_EXPANSION_CACHE: dict[str, tuple] = {}


def _reference_expansions(cfg: ExperimentConfig, ref: BasisConfig):
    key = json.dumps([resolved_dict(cfg)["radar"], repr(ref)], sort_keys=True)
    if key not in _EXPANSION_CACHE:
        setup = cfg.radar_setup()
        _EXPANSION_CACHE.clear()
        _EXPANSION_CACHE[key] = (expand_steering(setup.geometry, ref), expand_waveform(setup.radar, ref))
    return _EXPANSION_CACHE[key]


def scene_b_frames(cfg: ExperimentConfig, scene: SceneB, basis: BasisConfig, snr_db: float):
    """Noisy frames and the forward model (at the matching noise precision) for one working size.

    ``frames_from="working"``: frames are ``M Gamma_n`` of the working-size
    chain, as the inference model assumes. ``"reference"``: frames come from the
    reference-size chain, so modes beyond the working basis leak into the data.
    The SNR reference is the scene mean seen through the same operator.
    """
    fm0 = forward_model_for(cfg, basis)
    if cfg.scenario.b.frames_from == "reference":
        signal, power = scene.ref_signal, scene.ref_power
    else:
        chain = truncate_coeffs(scene.chain, scene.ref_basis, basis)
        signal = chain @ fm0.m_matrix.T
        mean_sig = fm0.m_matrix @ truncate_coeffs(scene.ref_gamma, scene.ref_basis, basis)
        power = float(np.vdot(mean_sig, mean_sig).real) / fm0.n_rows
    if cfg.noise.noise_precision is not None:
        lam_w = cfg.noise.noise_precision
    else:
        if power <= 0:
            raise ValueError("scene has zero signal power at this basis size; SNR undefined")
        lam_w = 10 ** (snr_db / 10) / power
    return signal + scene.unit_noise / np.sqrt(lam_w), fm0.with_noise_precision(lam_w)


def _infer_b(cfg: ExperimentConfig, scene: SceneB, basis: BasisConfig, snr_db: float):
    frames, fm = scene_b_frames(cfg, scene, basis, snr_db)
    t0 = time.perf_counter()
    state, _ = run(frames, fm, cfg.inference.n_iters, cfg.inference.update_alpha, transition=cfg.inference.transition)
    elapsed = time.perf_counter() - t0
    truth = truncate_coeffs(scene.ref_gamma, scene.ref_basis, basis)
    return state, _report(state, truth, scene.true_map, basis, scene.grid), elapsed


def _scenario_b_replicate(cfg_dict: dict, replicate: int, with_maps: bool = True, with_sweep: bool = True) -> dict:
    cfg = from_dict(cfg_dict)
    b = cfg.scenario.b
    scene = scene_b(cfg, replicate)
    work = cfg.basis_config()
    seed = seed_stream(cfg.seeds.root, replicate, "chain")
    snr_rows, maps, sweep_rows = [], {}, []
    if with_maps:
        for snr in b.snr_db_list:
            state, rep, dt = _infer_b(cfg, scene, work, snr)
            snr_rows.append([work.n_coeffs, float(snr), seed, rep.coeff_mse, rep.field_mse, rep.coverage_3sigma, rep.alpha_hat, dt])
            if replicate == 0:
                maps[float(snr)] = render_map(state.mu.mean, work, scene.grid)
    if with_sweep:
        for k, l in b.sweep_sizes:
            basis = BasisConfig(k, l, work.theta_domain, work.range_domain)
            _, rep, dt = _infer_b(cfg, scene, basis, b.sweep_snr_db)
            sweep_rows.append([basis.n_coeffs, float(b.sweep_snr_db), seed, rep.coeff_mse, rep.field_mse, rep.coverage_3sigma, rep.alpha_hat, dt])
    out = {"replicate": replicate, "snr_rows": snr_rows, "sweep_rows": sweep_rows, "maps": maps}
    if replicate == 0:
        out["true_map"] = scene.true_map
        out["truncated_map"] = render_map(truncate_coeffs(scene.ref_gamma, scene.ref_basis, work), work, scene.grid)
    return out


def _sweep_only(cfg_dict: dict, replicate: int) -> dict:
    return _scenario_b_replicate(cfg_dict, replicate, with_maps=False)


def _fix_runtime(cfg: ExperimentConfig, rows: list[list]) -> list[list]:
    return [r[:-1] + [_runtime_cell(cfg, r[-1])] for r in rows]


def run_scenario_b(
    cfg: ExperimentConfig, out_dir: str | Path, workers: int | None = None, with_maps: bool = True
) -> list[dict]:
    """Map grids for each SNR plus the coefficient-count sweep."""
    if cfg.scenario.kind != "B":
        raise ValueError("scenario B runs need scenario.kind = B")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = dump_resolved(cfg, out / "resolved_config.yaml")
    fn = _scenario_b_replicate if with_maps else _sweep_only
    results = map_replicates(fn, cfg, range(cfg.seeds.replicates), workers)
    first = results[0]
    if with_maps:
        grid_meta = {"map_grid": cfg.scenario.b.map_grid, "files": {}}
        _write_map(out, "true_map", first["true_map"], cfg, grid_meta, h)
        _write_map(out, "truncated_map", first["truncated_map"], cfg, grid_meta, h)
        for snr, m in first["maps"].items():
            _write_map(out, f"posterior_map_snr{snr:+g}dB", m, cfg, grid_meta, h)
        io.write_json(out / "maps.json", grid_meta, h)
        rows = [r for res in results for r in res["snr_rows"]]
        io.write_csv(out / "snr_runs.csv", SWEEP_HEADER, _fix_runtime(cfg, rows), h)
    rows = [r for res in results for r in res["sweep_rows"]]
    io.write_csv(out / "sweep.csv", SWEEP_HEADER, _fix_runtime(cfg, rows), h)
    return results


def _write_map(out: Path, name: str, m: np.ndarray, cfg: ExperimentConfig, meta: dict, h: str):
    if cfg.outputs.binary:
        io.write_matrix(out / f"{name}.bin", m)
        meta["files"][name] = f"{name}.bin"
    else:
        path = out / f"{name}.json"
        io.write_json(path, {"map": io.complex_to_json(m)}, h)
        meta["files"][name] = path.name

