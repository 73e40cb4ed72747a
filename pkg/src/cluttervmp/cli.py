"""Command-line front end.

Exit status: 0 on success, 2 for invalid input (config, arguments, files),
3 when inference aborts numerically.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io
from .basis import truncate_coeffs
from .config import ConfigError, ExperimentConfig, dump_resolved, parse_config
from .inference import DegenerateError, NumericalAbort, run
from .metrics import scaling_probe

log = logging.getLogger("cluttervmp")

EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    seeds, inference, outputs = {}, {}, {}
    if args.seed is not None:
        seeds["root"] = args.seed
    if args.replicates is not None:
        seeds["replicates"] = args.replicates
    if args.iters is not None:
        inference["n_iters"] = args.iters
    if args.update_alpha:
        inference["update_alpha"] = True
    if args.out is not None:
        outputs["dir"] = args.out
    return cfg.with_updates(seeds=seeds, inference=inference, outputs=outputs)


def _out(cfg: ExperimentConfig) -> Path:
    p = Path(cfg.outputs.dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_simulate(args) -> None:
    cfg = _load(args)
    out = _out(cfg)
    h = dump_resolved(cfg, out / "resolved_config.yaml")
    for r in range(cfg.seeds.replicates):
        rd = out / f"rep_{r:03d}"
        rd.mkdir(exist_ok=True)
        if cfg.scenario.kind == "A":
            data = ex.simulate_scenario_a(cfg, r)
            io.write_matrix(rd / "frames.bin", data.frames)
            io.write_matrix(rd / "truth_chain.bin", data.chain)
            io.write_json(rd / "frames.json", {"noise_precision": data.fm.noise_precision, "snr_db": cfg.noise.snr_db}, h)
        else:
            scene = ex.scene_b(cfg, r)
            basis = cfg.basis_config()
            io.write_matrix(rd / "truth_chain.bin", truncate_coeffs(scene.chain, scene.ref_basis, basis))
            for snr in cfg.scenario.b.snr_db_list:
                frames, fm = ex.scene_b_frames(cfg, scene, basis, snr)
                stem = f"frames_snr{snr:+g}dB"
                io.write_matrix(rd / f"{stem}.bin", frames)
                io.write_json(rd / f"{stem}.json", {"noise_precision": fm.noise_precision, "snr_db": snr}, h)


def cmd_infer(args) -> None:
    cfg = _load(args)
    frames_path = Path(args.frames)
    frames = io.read_matrix(frames_path)
    lam_w = args.noise_precision
    if lam_w is None:
        lam_w = cfg.noise.noise_precision
    if lam_w is None:
        meta = frames_path.with_suffix(".json")
        if not meta.is_file():
            raise ConfigError(f"no noise precision: pass --noise-precision, set noise.noise_precision, or provide {meta}")
        lam_w = float(json.loads(meta.read_text())["noise_precision"])
    fm = ex.forward_model_for(cfg).with_noise_precision(lam_w)
    if frames.shape[1] != fm.n_rows:
        raise ConfigError(f"{frames_path}: {frames.shape[1]} samples per frame, model expects {fm.n_rows}")
    state, diag = run(frames, fm, cfg.inference.n_iters, cfg.inference.update_alpha, transition=cfg.inference.transition)
    out = _out(cfg)
    h = dump_resolved(cfg, out / "resolved_config.yaml")
    io.write_json(out / "posterior.json", io.posterior_snapshot(state), h)
    io.write_csv(out / "diagnostics.csv", ["iteration", "d_mu", "d_lambda", "alpha"], diag.rows(), h)
    if cfg.outputs.binary:
        io.write_matrix(out / "posterior_gamma_mean.bin", state.gamma_mean)


def cmd_scenario_a(args) -> None:
    cfg = _load(args)
    if cfg.scenario.kind != "A":
        raise ConfigError("scenario-a needs scenario.kind: A")
    results = ex.run_scenario_a(cfg, _out(cfg))
    cov = np.mean([r["report"].coverage_3sigma for r in results])
    alphas = [r["report"].alpha_hat for r in results]
    print(f"scenario A: {len(results)} replicates, mean coverage {cov:.3f}, median alpha_hat {np.median(alphas):.3f}")


def cmd_scenario_b(args) -> None:
    cfg = _load(args)
    if cfg.scenario.kind != "B":
        raise ConfigError("scenario-b needs scenario.kind: B")
    ex.run_scenario_b(cfg, _out(cfg))
    print(f"scenario B: {cfg.seeds.replicates} replicates written to {cfg.outputs.dir}")


def cmd_sweep(args) -> None:
    cfg = _load(args)
    if cfg.scenario.kind != "B":
        raise ConfigError("sweep runs the coefficient-count sweep and needs scenario.kind: B")
    ex.run_scenario_b(cfg, _out(cfg), with_maps=False)
    print(f"sweep: {cfg.seeds.replicates} replicates x {len(cfg.scenario.b.sweep_sizes)} sizes")


def cmd_probe_scaling(args) -> None:
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    rows = scaling_probe(args.frames, args.coeffs, [(2, 1), (1, 2)], init_coeffs=args.init_coeffs)
    header = [
        "frame_factor",
        "coeff_factor",
        "n_frames",
        "n_coeffs",
        "init_coeffs",
        "iter_time_s",
        "iter_ratio",
        "init_time_s",
        "init_ratio",
    ]
    io.write_csv(out / "scaling.csv", header, [[getattr(r, k) for k in header] for r in rows])
    for r in rows:
        print(f"N x{r.frame_factor}, N_Gamma x{r.coeff_factor}: iteration ratio {r.iter_ratio:.2f}, init ratio {r.init_ratio:.2f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cluttervmp", description="VMP clutter-map tracking for TDM MIMO radar")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment config (defaults when omitted)")
        sp.add_argument("--seed", type=int, help="root seed")
        sp.add_argument("--replicates", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--update-alpha", action="store_true", help="re-estimate alpha every iteration")
        sp.add_argument("--iters", type=int, help="main-loop iterations N_I")

    for name, fn, helptext in (
        ("simulate", cmd_simulate, "draw truth and frames"),
        ("infer", cmd_infer, "run inference on stored frames"),
        ("scenario-a", cmd_scenario_a, "exact-model scenario"),
        ("scenario-b", cmd_scenario_b, "fence scene: maps per SNR and coefficient sweep"),
        ("sweep", cmd_sweep, "coefficient-count sweep only"),
    ):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        if name == "infer":
            sp.add_argument("--frames", required=True, help="binary container of frames (one per row)")
            sp.add_argument("--noise-precision", type=float)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("probe-scaling", help="time main loop and initialisation under scaling")
    sp.add_argument("--out")
    sp.add_argument("--frames", type=int, default=20)
    sp.add_argument("--coeffs", type=int, default=65536)
    sp.add_argument("--init-coeffs", type=int, default=512)
    sp.set_defaults(func=cmd_probe_scaling)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (NumericalAbort, DegenerateError) as e:
        print(f"error: numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
