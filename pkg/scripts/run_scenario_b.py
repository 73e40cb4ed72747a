"""Scenario B: maps at each SNR and the error-vs-size sweep, with a text summary.

usage: python3 scripts/run_scenario_b.py [--config configs/scenario_b.yaml] [--out DIR] [--replicates N]
"""

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from cluttervmp import io
from cluttervmp.config import parse_config
from cluttervmp.experiments import run_scenario_b

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--config", default=str(ROOT / "configs" / "scenario_b.yaml"))
    p.add_argument("--out")
    p.add_argument("--replicates", type=int)
    args = p.parse_args()
    cfg = parse_config(args.config)
    if args.replicates is not None:
        cfg = cfg.with_updates(seeds={"replicates": args.replicates})
    out = Path(args.out or cfg.outputs.dir)
    run_scenario_b(cfg, out)

    sweep = defaultdict(list)
    for r in io.read_csv(out / "sweep.csv"):
        sweep[int(r["n_coeffs"])].append(float(r["field_mse"]))
    print("n_coeffs  field_mse (mean over replicates)")
    for n in sorted(sweep):
        print(f"{n:8d}  {np.mean(sweep[n]):.4f}")

    by_snr = defaultdict(list)
    for r in io.read_csv(out / "snr_runs.csv"):
        by_snr[float(r["snr_db"])].append((float(r["field_mse"]), float(r["alpha_hat"])))
    print("snr_db  field_mse  alpha_hat (means)")
    for snr in sorted(by_snr, reverse=True):
        v = np.array(by_snr[snr])
        print(f"{snr:+6.1f}  {v[:, 0].mean():9.4f}  {v[:, 1].mean():9.3f}")


if __name__ == "__main__":
    main()
