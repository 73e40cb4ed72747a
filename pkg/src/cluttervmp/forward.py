"""Expansion of steering phases and delayed waveforms, and the linear forward model.

The clutter field is written on the conjugate basis,

    C(theta, r) = sum_{k,l} Gamma_{k,l} conj(psi^(k,l)(theta, r)),

so that ``Gamma = conj(vec(gamma))`` with ``gamma`` the coefficients of ``conj(C)``
on ``psi``. With ``alpha^(k,j,m) = <psi'_k | A^(j,m)>`` and
``beta^(l,m)(t) = <psi'_l | u_m(t - tau) e^{i w_c (t - tau)}>`` the received
samples are exactly ``y = M Gamma`` for any field in the span of the basis,
independent of how well A and u themselves are represented by K and L modes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisConfig, angle_modes, default_density, range_modes, trapezoid_grid
from .radar import ArrayGeometry, RadarConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SteeringExpansion:
    alpha: np.ndarray  # (n_tx, n_rx, K)

    @property
    def n_tx(self) -> int:
        return self.alpha.shape[0]

    def matrix(self, m: int) -> np.ndarray:
        return self.alpha[m]


@dataclass(frozen=True)
class WaveformExpansion:
    beta: np.ndarray  # (n_tx, N_s, L)

    @property
    def n_tx(self) -> int:
        return self.beta.shape[0]

    def matrix(self, m: int) -> np.ndarray:
        return self.beta[m]


@dataclass(frozen=True)
class ForwardModel:
    m_matrix: np.ndarray
    m_pinv: np.ndarray
    noise_precision: float
    msg_cov_diag: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_rows(self) -> int:
        return self.m_matrix.shape[0]

    @property
    def n_coeffs(self) -> int:
        return self.m_matrix.shape[1]

    def with_noise_precision(self, noise_precision: float) -> "ForwardModel":
        return replace(
            self,
            noise_precision=float(noise_precision),
            msg_cov_diag=message_covariance(self.m_pinv, noise_precision),
        )


def expand_steering(geometry: ArrayGeometry, cfg: BasisConfig, n_quad: int | None = None) -> SteeringExpansion:
    """Angular expansion coefficients of every (receiver, transmitter) phase."""
    if geometry is None or geometry.n_tx == 0 or geometry.n_rx == 0:
        raise ValueError("empty array geometry")
    if n_quad is None:
        q_max = np.max(np.abs(cfg.angle_wave_numbers)) + geometry.max_path * cfg.theta_length
        n_quad = default_density(q_max)
    theta, w = trapezoid_grid(cfg.theta_domain, n_quad)
    psi = angle_modes(cfg, theta)  # (K, n)
    a = geometry.steering(theta)  # (n_rx, n_tx, n)
    alpha = np.einsum("kt,jmt->mjk", psi.conj() * w, a)
    return SteeringExpansion(alpha)


def expand_waveform(radar: RadarConfig, cfg: BasisConfig, n_quad: int | None = None) -> WaveformExpansion:
    """Range expansion coefficients of each transmitter's delayed signal, per sample."""
    if not np.isclose(cfg.range_domain[1], radar.r_max) or cfg.range_domain[0] != 0.0:
        raise ValueError(f"range domain {cfg.range_domain} inconsistent with r_max={radar.r_max}")
    if n_quad is None:
        q_max = np.max(np.abs(cfg.range_wave_numbers)) + radar.range_bandwidth_cycles()
        n_quad = default_density(q_max)
    r, w = trapezoid_grid(cfg.range_domain, n_quad)
    psi_w = range_modes(cfg, r).conj() * w  # (L, n)
    t = radar.sample_times
    beta = np.zeros((radar.n_tx, radar.n_samples, cfg.n_range), dtype=complex)
    for m in range(radar.n_tx):
        sl = radar.slot_slice(m)
        beta[m, sl] = radar.delayed_signal(m, t[sl], r) @ psi_w.T
    return WaveformExpansion(beta)


def _pinv_svd(m: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m)
    if m.size == 0:
        raise ValueError("pseudoinverse of an empty matrix")
    if m.ndim == 1:
        m = m[:, None]
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T, s


def pseudoinverse(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudoinverse with relative singular-value cutoff ``tol``."""
    return _pinv_svd(m, tol)[0]


def message_covariance(m_pinv: np.ndarray, noise_precision: float) -> np.ndarray:
    """Diagonal of ``M^+ (M^+)^H / lambda_W`` without forming the full product."""
    if not noise_precision > 0:
        raise ValueError(f"noise precision must be > 0, got {noise_precision}")
    return np.sum(m_pinv.real**2 + m_pinv.imag**2, axis=1) / noise_precision


def kron_sum(se: SteeringExpansion, we: WaveformExpansion) -> np.ndarray:
    """``sum_m kron(alpha_m, beta_m)`` in fixed transmitter order."""
    if se.n_tx != we.n_tx:
        raise ValueError(f"transmitter count mismatch: steering {se.n_tx}, waveform {we.n_tx}")
    n_rx, k = se.alpha.shape[1:]
    n_s, l = we.beta.shape[1:]
    out = np.zeros((n_rx * n_s, k * l), dtype=complex)
    for m in range(se.n_tx):
        a = se.alpha[m]
        b = we.beta[m]
        nz = np.flatnonzero(np.any(b != 0, axis=1))
        if nz.size == 0:
            continue
        # rows j*N_s + i only get contributions from samples where beta_m is nonzero
        blk = np.einsum("jk,il->jikl", a, b[nz]).reshape(n_rx, nz.size, k * l)
        rows = (np.arange(n_rx)[:, None] * n_s + nz[None, :]).ravel()
        out[rows] += blk.reshape(-1, k * l)
    return out


def apply_forward(se: SteeringExpansion, we: WaveformExpansion, gammas: np.ndarray) -> np.ndarray:
    """``M Gamma`` for a batch of coefficient vectors without forming M.

    ``gammas`` has shape (n_frames, K * L); the result (n_frames, N_R * N_s)
    follows the row order of ``kron_sum``. Useful when K * L is too large for the
    dense matrix to fit in memory.
    """
    if se.n_tx != we.n_tx:
        raise ValueError(f"transmitter count mismatch: steering {se.n_tx}, waveform {we.n_tx}")
    n_rx, k = se.alpha.shape[1:]
    n_s, l = we.beta.shape[1:]
    g = np.atleast_2d(gammas)
    if g.shape[1] != k * l:
        raise ValueError(f"coefficient length {g.shape[1]} does not match K*L = {k * l}")
    f = g.shape[0]
    g = g.reshape(f * k, l)
    out = np.zeros((f, n_rx, n_s), dtype=complex)
    for m in range(se.n_tx):
        b = we.beta[m]
        nz = np.flatnonzero(np.any(b != 0, axis=1))
        if nz.size == 0:
            continue
        tmp = (g @ b[nz].T).reshape(f, k, nz.size)
        out[:, :, nz] += np.einsum("jk,fki->fji", se.alpha[m], tmp)
    return out.reshape(f, n_rx * n_s)


def assemble_forward_model(
    se: SteeringExpansion,
    we: WaveformExpansion,
    noise_precision: float,
    pinv_tol: float = 1e-10,
) -> ForwardModel:
    m = kron_sum(se, we)
    m_pinv, s = _pinv_svd(m, pinv_tol)
    rank = int(np.sum(s > pinv_tol * s[0])) if s.size and s[0] > 0 else 0
    meta = {"rank": rank, "cond": float(s[0] / s[-1]) if s[-1] > 0 else float("inf"), "warnings": []}
    if rank < m.shape[1]:
        msg = f"forward model rank deficient: rank {rank} < {m.shape[1]} columns"
        meta["warnings"].append(msg)
        log.warning(msg)
    return ForwardModel(m, m_pinv, float(noise_precision), message_covariance(m_pinv, noise_precision), meta)


def build_forward_model(
    radar: RadarConfig,
    geometry: ArrayGeometry,
    cfg: BasisConfig,
    noise_precision: float = 1.0,
    pinv_tol: float = 1e-10,
) -> ForwardModel:
    return assemble_forward_model(expand_steering(geometry, cfg), expand_waveform(radar, cfg), noise_precision, pinv_tol)


def steering_reconstruction_error(geometry: ArrayGeometry, cfg: BasisConfig, n_eval: int = 2048) -> float:
    """Relative L2 error of the K-term reconstruction of all steering phases."""
    se = expand_steering(geometry, cfg)
    theta, w = trapezoid_grid(cfg.theta_domain, n_eval)
    exact = geometry.steering(theta)
    rec = np.einsum("mjk,kt->jmt", se.alpha, angle_modes(cfg, theta))
    return float(np.sqrt(np.sum(w * np.abs(rec - exact) ** 2) / np.sum(w * np.abs(exact) ** 2)))


def waveform_reconstruction_error(radar: RadarConfig, cfg: BasisConfig, n_eval: int = 2048) -> float:
    """Relative L2 error of the L-term range reconstruction, pooled over all samples."""
    we = expand_waveform(radar, cfg)
    r, w = trapezoid_grid(cfg.range_domain, n_eval)
    psi = range_modes(cfg, r)
    t = radar.sample_times
    num = den = 0.0
    for m in range(radar.n_tx):
        sl = radar.slot_slice(m)
        exact = radar.delayed_signal(m, t[sl], r)
        rec = we.beta[m, sl] @ psi
        num += float(np.sum(w * np.abs(rec - exact) ** 2))
        den += float(np.sum(w * np.abs(exact) ** 2))
    return float(np.sqrt(num / den))


def truncation_check(radar: RadarConfig, geometry: ArrayGeometry, cfg: BasisConfig, limit: float = 1e-2) -> dict:
    """Reconstruction errors of both expansions; logs a warning above ``limit``."""
    out = {
        "steering_error": steering_reconstruction_error(geometry, cfg),
        "waveform_error": waveform_reconstruction_error(radar, cfg),
    }
    for key, val in out.items():
        if val > limit:
            log.warning("%s %.3g exceeds %.0e at K=%d, L=%d", key, val, limit, cfg.n_angle, cfg.n_range)
    return out
