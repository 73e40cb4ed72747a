"""Variational message passing for AR(1)-tracked clutter coefficients.

Mean-field surrogate ``q(mu) q(Lambda) prod_n q(Gamma_n)`` with diagonal complex
Gaussian beliefs on ``mu`` and every ``Gamma_n`` and an independent gamma belief
on each precision ``lambda_j``. The AR coefficient is a Yule-Walker point
estimate. All beliefs are diagonal; a belief's ``precision`` is the inverse of
its per-component variance ``E|x - mean|^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .forward import ForwardModel
from .scene import ALPHA_MAX, ALPHA_MIN, MeasurementFrame, clamp_alpha

log = logging.getLogger(__name__)

XI_FLOOR = 1e-30


class DegenerateError(ValueError):
    """Raised when the data carry no variation to estimate from."""


class NumericalAbort(FloatingPointError):
    """Raised when a run produces a non-finite belief."""


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=complex)
        prec = np.broadcast_to(np.asarray(self.precision, dtype=float), mean.shape)
        if not (np.all(prec > 0) and np.all(np.isfinite(prec))):
            raise ValueError("belief precision must be strictly positive and finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)

    @property
    def variance(self) -> np.ndarray:
        return 1.0 / self.precision

    def __len__(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class GammaBelief:
    shape: float
    rate: np.ndarray
    n_floored: int = 0

    def __post_init__(self):
        rate = np.asarray(self.rate, dtype=float)
        if not self.shape > 0:
            raise ValueError("gamma shape must be > 0")
        if not np.all(rate > 0):
            raise ValueError("gamma rates must be > 0")
        object.__setattr__(self, "rate", rate)

    @property
    def mean(self) -> np.ndarray:
        return self.shape / self.rate


@dataclass
class PosteriorState:
    """Mutable state of one run.

    ``gamma_mean``/``gamma_prec`` hold q(Gamma_n) row by row; the data messages
    share one precision vector because the data covariance is frame independent.
    """

    gamma_mean: np.ndarray  # (N+1, N_Gamma) complex
    gamma_prec: np.ndarray  # (N+1, N_Gamma)
    mu: GaussianBelief
    lam: GammaBelief
    alpha: float
    data_mean: np.ndarray  # (N+1, N_Gamma)
    data_prec: np.ndarray  # (N_Gamma,)
    transition: str = "stationary"

    @property
    def n_frames(self) -> int:
        return self.gamma_mean.shape[0]

    @property
    def last(self) -> int:
        """Index N of the final frame."""
        return self.gamma_mean.shape[0] - 1

    @property
    def n_coeffs(self) -> int:
        return self.gamma_mean.shape[1]

    @property
    def lambda_mean(self) -> np.ndarray:
        return self.lam.mean

    def gamma_belief(self, n: int) -> GaussianBelief:
        return GaussianBelief(self.gamma_mean[n], self.gamma_prec[n])

    @property
    def gamma_beliefs(self) -> list[GaussianBelief]:
        return [self.gamma_belief(n) for n in range(self.n_frames)]

    def data_message(self, n: int) -> GaussianBelief:
        return GaussianBelief(self.data_mean[n], self.data_prec)

    @property
    def data_messages(self) -> list[GaussianBelief]:
        return [self.data_message(n) for n in range(self.n_frames)]

    def copy(self) -> "PosteriorState":
        return PosteriorState(
            self.gamma_mean.copy(),
            self.gamma_prec.copy(),
            self.mu,
            self.lam,
            self.alpha,
            self.data_mean,
            self.data_prec,
            self.transition,
        )


# --- messages into Gamma_n -------------------------------------------------


def msg_data_to_gamma(y: MeasurementFrame | np.ndarray, fm: ForwardModel) -> GaussianBelief:
    yv = y.y if isinstance(y, MeasurementFrame) else np.asarray(y)
    if yv.shape != (fm.n_rows,):
        raise ValueError(f"frame length {yv.shape} does not match model rows {fm.n_rows}")
    return GaussianBelief(fm.m_pinv @ yv, 1.0 / fm.msg_cov_diag)


def msg_prev_to_current(
    prev: GaussianBelief,
    mu: GaussianBelief,
    lambda_mean: np.ndarray,
    alpha: float,
    transition: str = "stationary",
) -> GaussianBelief:
    """Predecessor message. ``transition`` selects its variance.

    ``"stationary"``: the process-noise variance ``(1 - alpha^2) / lambda``, which is
    what the AR(1) transition density implies. ``"as_printed"``: the alternative
    ``(1 - alpha)^2 / lambda``; kept for comparison, it does not reproduce the
    exact posterior on small problems.
    """
    _check_alpha(alpha)
    prec = _transition_precisions(lambda_mean, alpha, transition)[0]
    return GaussianBelief(mu.mean + alpha * (prev.mean - mu.mean), prec)


def msg_next_to_current(nxt: GaussianBelief, mu: GaussianBelief, lambda_mean: np.ndarray, alpha: float) -> GaussianBelief:
    _check_alpha(alpha)
    return GaussianBelief(mu.mean + (nxt.mean - mu.mean) / alpha, lambda_mean * alpha**2 / (1 - alpha**2))


def msg_prior_to_gamma(mu: GaussianBelief, lambda_mean: np.ndarray) -> GaussianBelief:
    return GaussianBelief(mu.mean, lambda_mean)


def combine_gaussians(messages: Sequence[GaussianBelief]) -> GaussianBelief:
    """Normalised product of diagonal Gaussian densities."""
    if len(messages) == 0:
        raise ValueError("cannot combine an empty list of messages")
    n = len(messages[0])
    if any(len(m) != n for m in messages):
        raise ValueError("messages differ in length")
    prec = sum(m.precision for m in messages)
    mean = sum(m.precision * m.mean for m in messages) / prec
    return GaussianBelief(mean, prec)


def _check_alpha(alpha: float):
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ValueError(f"alpha={alpha} outside clamp bounds [{ALPHA_MIN}, {ALPHA_MAX}]")


def gamma_messages(n: int, state: PosteriorState) -> list[GaussianBelief]:
    """Messages arriving at Gamma_n: data, predecessor, successor, prior (boundaries drop one)."""
    if not 0 <= n <= state.last:
        raise ValueError(f"frame index {n} outside [0, {state.last}]")
    lam = state.lambda_mean
    msgs = [state.data_message(n)]
    if n > 0:
        msgs.append(msg_prev_to_current(state.gamma_belief(n - 1), state.mu, lam, state.alpha, state.transition))
    if n < state.last:
        msgs.append(msg_next_to_current(state.gamma_belief(n + 1), state.mu, lam, state.alpha))
    msgs.append(msg_prior_to_gamma(state.mu, lam))
    return msgs


def update_gamma(n: int, state: PosteriorState, fm: ForwardModel | None = None) -> GaussianBelief:
    """New q(Gamma_n) from its neighbours' current beliefs (state is not modified).

    ``fm`` is accepted for symmetry with the data message; the cached data
    messages in ``state`` already carry everything needed.
    """
    return combine_gaussians(gamma_messages(n, state))


# --- mu, Lambda, alpha ----------------------------------------------------


def kappa(n_last: int, alpha: float) -> float:
    return n_last + 1 + n_last * (1 - alpha) ** 2 / (1 - alpha**2)


def _mu_mean(g: np.ndarray, a: float, k: float) -> np.ndarray:
    total = g.sum(axis=0)
    if g.shape[0] > 1:
        total = total + (1 - a) / (1 - a**2) * (g[1:] - a * g[:-1]).sum(axis=0)
    return total / k


def update_mu(state: PosteriorState) -> GaussianBelief:
    k = kappa(state.last, state.alpha)
    return GaussianBelief(_mu_mean(state.gamma_mean, state.alpha, k), k * state.lambda_mean)


def compute_V(n: int, state: PosteriorState) -> np.ndarray:
    if not 0 <= n <= state.last:
        raise ValueError(f"frame index {n} outside [0, {state.last}]")
    return np.abs(state.gamma_mean[n] - state.mu.mean) ** 2 + 1 / state.gamma_prec[n] + state.mu.variance


def compute_W(n: int, state: PosteriorState) -> np.ndarray:
    if not 1 <= n <= state.last:
        raise ValueError(f"W needs 1 <= n <= {state.last}, got {n}")
    a = state.alpha
    resid = state.gamma_mean[n] - a * state.gamma_mean[n - 1] - (1 - a) * state.mu.mean
    var = 1 / state.gamma_prec[n] + a**2 / state.gamma_prec[n - 1] + (1 - a) ** 2 * state.mu.variance
    return (np.abs(resid) ** 2 + var) / (1 - a**2)


def _rate(g: np.ndarray, gv: np.ndarray, mu: np.ndarray, muv: np.ndarray, a: float) -> np.ndarray:
    n_frames = g.shape[0]
    v = (np.abs(g - mu) ** 2 + gv).sum(axis=0) + n_frames * muv
    if n_frames == 1:
        return v
    resid = g[1:] - a * g[:-1] - (1 - a) * mu
    w = (np.abs(resid) ** 2 + gv[1:] + a**2 * gv[:-1]).sum(axis=0) + (n_frames - 1) * (1 - a) ** 2 * muv
    return v + w / (1 - a**2)


def gamma_rate(state: PosteriorState) -> np.ndarray:
    """sum_n V^(n) + sum_n W^(n,n-1), vectorised over frames."""
    return _rate(state.gamma_mean, 1 / state.gamma_prec, state.mu.mean, state.mu.variance, state.alpha)


def _gamma_belief_from_rate(shape: float, xi: np.ndarray) -> GammaBelief:
    if not np.all(np.isfinite(xi)):
        raise NumericalAbort("non-finite gamma rate")
    if np.any(xi <= 0):
        raise DegenerateError("gamma rate is zero: the posterior over Lambda is degenerate")
    low = xi < XI_FLOOR
    n_low = int(low.sum())
    if n_low:
        log.debug("gamma rate floored at %g for %d components", XI_FLOOR, n_low)
        xi = np.where(low, XI_FLOOR, xi)
    return GammaBelief(shape, xi, n_low)


def update_lambda(state: PosteriorState) -> GammaBelief:
    return _gamma_belief_from_rate(2.0 * state.last + 2.0, gamma_rate(state))


def estimate_alpha_yule_walker(means, mean: np.ndarray | None = None) -> float:
    """Pooled lag-1 autocorrelation of a vector sequence, clamped to the AR bounds.

    ``mean`` is removed from every element before correlating; the sample mean is
    used when it is not given. The lag-0 term sums the same predecessor terms as
    the lag-1 term, so a constant (non-zero after mean removal) sequence gives 1.
    """
    x = np.asarray(means)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("Yule-Walker needs at least two elements")
    center = x.mean(axis=0) if mean is None else np.asarray(mean)
    x = x - center
    lag0 = float(np.sum(np.abs(x[:-1]) ** 2))
    if lag0 < 1e-30:
        raise DegenerateError("sequence is constant; lag-0 autocovariance vanishes")
    lag1 = np.sum(x[1:] * np.conj(x[:-1]))
    return clamp_alpha(float((lag1 / lag0).real))


# --- driver ----------------------------------------------------------------


def initialize_from_messages(
    data_mean: np.ndarray, data_prec: np.ndarray, transition: str = "stationary"
) -> PosteriorState:
    data_mean = np.atleast_2d(np.asarray(data_mean, dtype=complex))
    if data_mean.shape[0] < 1:
        raise ValueError("need at least one frame")
    data_prec = np.broadcast_to(np.asarray(data_prec, dtype=float), data_mean.shape[1:]).copy()
    n_last = data_mean.shape[0] - 1
    gamma_mean = data_mean.copy()
    gamma_prec = np.broadcast_to(data_prec, data_mean.shape).copy()
    mu_mean = data_mean.mean(axis=0)
    xi = (np.abs(data_mean - mu_mean) ** 2).sum(axis=0) + (n_last + 1) / data_prec
    lam = _gamma_belief_from_rate(2.0 * n_last + 2.0, xi)
    # q(mu) precision only matters once update_mu has run; start it at kappa * E[lambda]
    alpha = ALPHA_MIN
    if n_last >= 1:
        try:
            alpha = estimate_alpha_yule_walker(data_mean)
        except DegenerateError:
            log.warning("identical data messages carry no correlation information; starting at alpha=%g", ALPHA_MIN)
    mu = GaussianBelief(mu_mean, kappa(n_last, alpha) * lam.mean)
    return PosteriorState(gamma_mean, gamma_prec, mu, lam, alpha, data_mean, data_prec, transition)


def initialize(
    frames: Sequence[MeasurementFrame] | np.ndarray, fm: ForwardModel, transition: str = "stationary"
) -> PosteriorState:
    ys = _frame_matrix(frames)
    if ys.shape[0] == 0:
        raise ValueError("need at least one frame")
    if ys.shape[1] != fm.n_rows:
        raise ValueError(f"frame length {ys.shape[1]} does not match model rows {fm.n_rows}")
    data_mean = ys @ fm.m_pinv.T
    return initialize_from_messages(data_mean, 1.0 / fm.msg_cov_diag, transition)


def _frame_matrix(frames) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        return np.atleast_2d(frames)
    if len(frames) == 0:
        return np.zeros((0, 0), dtype=complex)
    return np.stack([f.y if isinstance(f, MeasurementFrame) else np.asarray(f) for f in frames])


@dataclass
class Diagnostics:
    d_mu: list[float] = field(default_factory=list)
    d_lambda: list[float] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    xi_floor_hits: int = 0

    def append(self, d_mu: float, d_lambda: float, alpha: float):
        self.d_mu.append(d_mu)
        self.d_lambda.append(d_lambda)
        self.alpha.append(alpha)

    def rows(self):
        for i, (a, b, c) in enumerate(zip(self.d_mu, self.d_lambda, self.alpha), start=1):
            yield i, a, b, c


# Components never interact within a sweep, so the loop runs over column blocks
# small enough to stay in cache; the arithmetic per component is unchanged.
COLUMN_BLOCK_BYTES = 1 << 20


def _column_blocks(n_frames: int, n_coeffs: int):
    width = max(64, COLUMN_BLOCK_BYTES // (16 * n_frames))
    for start in range(0, n_coeffs, width):
        yield slice(start, min(start + width, n_coeffs))


def _transition_precisions(lam: np.ndarray, alpha: float, transition: str) -> tuple[np.ndarray, np.ndarray]:
    if transition == "stationary":
        p_prev = lam / (1 - alpha**2)
    elif transition == "as_printed":
        p_prev = lam / (1 - alpha) ** 2
    else:
        raise ValueError(f"unknown transition variant {transition!r}")
    return p_prev, lam * alpha**2 / (1 - alpha**2)


def _sweep_block(state: PosteriorState, sl: slice) -> None:
    lam, a, mu = state.lambda_mean[sl], state.alpha, state.mu.mean[sl]
    p_prev, p_next = _transition_precisions(lam, a, state.transition)
    g, gp = state.gamma_mean[:, sl], state.gamma_prec[:, sl]
    dm, dp = state.data_mean[:, sl], state.data_prec[sl]
    last = state.last
    for n in range(last + 1):
        prec = dp.copy()
        num = dp * dm[n]
        if n > 0:
            prec += p_prev
            num += p_prev * (mu + a * (g[n - 1] - mu))
        if n < last:
            prec += p_next
            num += p_next * (mu + (g[n + 1] - mu) / a)
        prec += lam
        num += lam * mu
        g[n] = num / prec
        gp[n] = prec


def sweep_gammas(state: PosteriorState) -> None:
    """Update q(Gamma_0) .. q(Gamma_N) in ascending order, in place.

    Same arithmetic as ``update_gamma`` (messages summed in the order data,
    predecessor, successor, prior) without building a belief object per message.
    """
    _check_alpha(state.alpha)
    for sl in _column_blocks(state.n_frames, state.n_coeffs):
        _sweep_block(state, sl)


def sweep(state: PosteriorState, update_alpha: bool = False) -> None:
    """One pass of the main loop, in place: Gamma_0..Gamma_N, then mu, Lambda, alpha.

    Runs block by block over components; identical to ``sweep_gammas`` followed
    by ``update_mu`` and ``update_lambda``.
    """
    _check_alpha(state.alpha)
    a, last = state.alpha, state.last
    k = kappa(last, a)
    lam_old = state.lambda_mean
    mu_mean = np.empty(state.n_coeffs, dtype=complex)
    xi = np.empty(state.n_coeffs)
    for sl in _column_blocks(state.n_frames, state.n_coeffs):
        _sweep_block(state, sl)
        g, gv = state.gamma_mean[:, sl], 1 / state.gamma_prec[:, sl]
        mu_mean[sl] = _mu_mean(g, a, k)
        xi[sl] = _rate(g, gv, mu_mean[sl], 1 / (k * lam_old[sl]), a)
    state.mu = GaussianBelief(mu_mean, k * lam_old)
    state.lam = _gamma_belief_from_rate(2.0 * last + 2.0, xi)
    if update_alpha and last >= 1:
        state.alpha = estimate_alpha_yule_walker(state.gamma_mean)


def _check_state(state: PosteriorState, iteration: int) -> None:
    finite = np.all(np.isfinite(state.gamma_mean)) and np.all(np.isfinite(state.mu.mean))
    prec_ok = np.all(np.isfinite(state.gamma_prec)) and np.all(state.gamma_prec > 0)
    if not (finite and prec_ok):
        raise NumericalAbort(f"non-finite or non-positive belief after iteration {iteration}")


def run(
    frames: Sequence[MeasurementFrame] | np.ndarray | None,
    fm: ForwardModel | None,
    n_iters: int = 150,
    update_alpha: bool = False,
    state: PosteriorState | None = None,
    transition: str = "stationary",
) -> tuple[PosteriorState, Diagnostics]:
    """Initialise (unless ``state`` is given) and run ``n_iters`` sweeps."""
    if state is None:
        state = initialize(frames, fm, transition)
    diag = Diagnostics()
    for it in range(n_iters):
        mu_prev, lam_prev = state.mu.mean, state.lambda_mean
        sweep(state, update_alpha)
        _check_state(state, it + 1)
        diag.xi_floor_hits += state.lam.n_floored
        diag.append(
            float(np.linalg.norm(state.mu.mean - mu_prev)),
            float(np.linalg.norm(state.lambda_mean - lam_prev)),
            state.alpha,
        )
    if diag.xi_floor_hits:
        log.warning("gamma rate floored at %g in %d component-iterations", XI_FLOOR, diag.xi_floor_hits)
    return state, diag
