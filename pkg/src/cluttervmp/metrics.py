"""Estimation-quality metrics and the complexity-scaling probe."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .basis import BasisConfig
from .inference import GaussianBelief, initialize_from_messages, sweep
from .scene import ClutterCoefficients, EvalGrid, render_map


@dataclass(frozen=True)
class ErrorReport:
    coeff_mse: float
    field_mse: float
    coverage_3sigma: float
    alpha_hat: float

    def __post_init__(self):
        if self.coeff_mse < 0 or self.field_mse < 0:
            raise ValueError("error fields must be nonnegative")
        if not 0.0 <= self.coverage_3sigma <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def _vec(x) -> np.ndarray:
    if isinstance(x, GaussianBelief):
        return x.mean
    if isinstance(x, ClutterCoefficients):
        return x.gamma
    return np.asarray(x, dtype=complex)


def coefficient_error(estimate, truth) -> float:
    """Mean of |mu_hat_j - Gamma_j|^2 over components."""
    est, tru = _vec(estimate), _vec(truth)
    if est.shape != tru.shape:
        raise ValueError(f"length mismatch: estimate {est.shape}, truth {tru.shape}")
    return float(np.mean(np.abs(est - tru) ** 2))


def field_error(estimate, true_map: np.ndarray, cfg: BasisConfig, grid: EvalGrid) -> float:
    """Grid mean of |C_hat - C_true|^2, with C_hat rendered from the estimate's coefficients."""
    est = render_map(_vec(estimate), cfg, grid)
    true_map = np.asarray(true_map)
    if true_map.shape != est.shape:
        raise ValueError(f"true map shape {true_map.shape} does not match grid {est.shape}")
    return float(np.mean(np.abs(est - true_map) ** 2))


def coverage_3sigma(belief: GaussianBelief, truth) -> float:
    """Fraction of components whose real and imaginary errors are both within 3 sigma.

    ``sigma_j = sqrt(1 / (2 precision_j))`` is the per-part standard deviation of a
    circular complex Gaussian.
    """
    tru = _vec(truth)
    if tru.shape != belief.mean.shape:
        raise ValueError(f"length mismatch: belief {belief.mean.shape}, truth {tru.shape}")
    sigma = np.sqrt(0.5 / belief.precision)
    d = belief.mean - tru
    ok = (np.abs(d.real) <= 3 * sigma) & (np.abs(d.imag) <= 3 * sigma)
    return float(np.mean(ok))


# --- complexity -------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRow:
    frame_factor: int
    coeff_factor: int
    n_frames: int
    n_coeffs: int
    init_coeffs: int
    iter_time_s: float
    iter_ratio: float
    init_time_s: float
    init_ratio: float


def _synthetic_state(n_frames: int, n_coeffs: int, seed: int):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n_frames, n_coeffs)) + 1j * rng.standard_normal((n_frames, n_coeffs))
    prec = rng.uniform(0.5, 2.0, n_coeffs)
    return initialize_from_messages(data, prec)


def time_iterations(n_frames: int, n_coeffs: int, n_iters: int = 7, seed: int = 0) -> float:
    """Median wall time of one main-loop sweep on synthetic data messages."""
    state = _synthetic_state(n_frames, n_coeffs, seed)
    sweep(state)  # warm-up
    times = []
    for _ in range(n_iters):
        t0 = time.perf_counter()
        sweep(state)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def time_initialisation(n_rows: int, n_coeffs: int, n_frames: int, repeats: int = 3, seed: int = 0) -> float:
    """Median wall time of the initialisation block on a random dense model.

    Covers what initialisation has to do: pseudoinverse, message covariance and
    one data message per frame.
    """
    from .forward import message_covariance, pseudoinverse

    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n_rows, n_coeffs)) + 1j * rng.standard_normal((n_rows, n_coeffs))
    ys = rng.standard_normal((n_frames, n_rows)) + 1j * rng.standard_normal((n_frames, n_rows))
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        mp = pseudoinverse(m)
        cov = message_covariance(mp, 1.0)
        initialize_from_messages(ys @ mp.T, 1.0 / cov)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def scaling_probe(
    base_frames: int,
    base_coeffs: int,
    factors: list[tuple[int, int]],
    n_iters: int = 9,
    init_rows: int = 4096,
    init_coeffs: int = 512,
    seed: int = 0,
) -> list[ScalingRow]:
    """Per-iteration and initialisation timings relative to the (1, 1) configuration.

    The main loop is timed on synthetic data messages with ``base_coeffs``
    components (large enough that array work, not per-frame call overhead,
    dominates). Initialisation is timed separately on a dense random model of
    ``init_rows x init_coeffs`` scaled by the same factors, since an SVD at the
    main-loop size would not fit the time budget. Timed sections run
    sequentially in this process, so all measurements share one execution lane.
    """
    if n_iters < 5:
        raise ValueError("need at least 5 timed iterations")
    for f in factors:
        if min(f) < 1:
            raise ValueError(f"scaling factors must be >= 1, got {f}")
    base_iter = time_iterations(base_frames, base_coeffs, n_iters, seed)
    base_init = time_initialisation(init_rows, init_coeffs, base_frames, seed=seed)
    rows = []
    for fn, fc in factors:
        n, k = base_frames * fn, base_coeffs * fc
        ti = time_iterations(n, k, n_iters, seed)
        t0 = time_initialisation(init_rows, init_coeffs * fc, n, seed=seed)
        rows.append(ScalingRow(fn, fc, n, k, init_coeffs * fc, ti, ti / base_iter, t0, t0 / base_init))
    return rows
