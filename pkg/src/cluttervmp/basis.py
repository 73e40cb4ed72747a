"""Orthonormal separable Fourier basis over (angle, range).

Each dimension carries complex exponentials ``exp(2i*pi*q*(x - a)/|D|)/sqrt(|D|)``
on the interval ``D = [a, b]``. Index 0 is the constant mode; higher indices
follow ascending wave number magnitude with the positive sign first, i.e. the
wave numbers are ``0, +1, -1, +2, -2, ...``.

Coefficient vectors are flattened with the range index fastest
(``index = k * n_range + l``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BasisConfig:
    n_angle: int
    n_range: int
    theta_domain: tuple[float, float] = (-np.pi / 2, np.pi / 2)
    range_domain: tuple[float, float] = (0.0, 50.0)

    def __post_init__(self):
        if self.n_angle < 1 or self.n_range < 1:
            raise ValueError(f"basis sizes must be >= 1, got K={self.n_angle}, L={self.n_range}")
        for name, (a, b) in (("theta_domain", self.theta_domain), ("range_domain", self.range_domain)):
            if not b > a:
                raise ValueError(f"{name} must have positive length, got [{a}, {b}]")
        if self.range_domain[0] < 0:
            raise ValueError("range_domain must start at r >= 0")
        object.__setattr__(self, "theta_domain", tuple(float(x) for x in self.theta_domain))
        object.__setattr__(self, "range_domain", tuple(float(x) for x in self.range_domain))

    @property
    def n_coeffs(self) -> int:
        return self.n_angle * self.n_range

    @property
    def theta_length(self) -> float:
        return self.theta_domain[1] - self.theta_domain[0]

    @property
    def range_length(self) -> float:
        return self.range_domain[1] - self.range_domain[0]

    @property
    def angle_wave_numbers(self) -> np.ndarray:
        return wave_numbers(self.n_angle)

    @property
    def range_wave_numbers(self) -> np.ndarray:
        return wave_numbers(self.n_range)

    def flat_index(self, k: int, l: int) -> int:
        return k * self.n_range + l


def wave_numbers(n: int) -> np.ndarray:
    """Signed wave numbers of the first ``n`` modes: 0, 1, -1, 2, -2, ..."""
    idx = np.arange(n)
    mag = (idx + 1) // 2
    sign = np.where(idx % 2 == 1, 1, -1)
    return np.where(idx == 0, 0, sign * mag)


def basis_1d(q: np.ndarray, x: np.ndarray, domain: tuple[float, float]) -> np.ndarray:
    """Evaluate 1-D modes with wave numbers ``q`` at points ``x``; shape (len(q), len(x))."""
    a, b = domain
    length = b - a
    q = np.atleast_1d(q)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.exp(2j * np.pi * np.outer(q, x - a) / length) / np.sqrt(length)


def angle_modes(cfg: BasisConfig, theta: np.ndarray) -> np.ndarray:
    return basis_1d(cfg.angle_wave_numbers, theta, cfg.theta_domain)


def range_modes(cfg: BasisConfig, r: np.ndarray) -> np.ndarray:
    return basis_1d(cfg.range_wave_numbers, r, cfg.range_domain)


def _in_domain(x, domain, tol=1e-12) -> bool:
    a, b = domain
    span = b - a
    return bool(np.all((x >= a - tol * span) & (x <= b + tol * span)))


def eval_basis(k: int, l: int, theta, r, cfg: BasisConfig):
    """Value of the separable mode ``psi^(k,l)(theta, r)``."""
    if not (0 <= k < cfg.n_angle and 0 <= l < cfg.n_range):
        raise ValueError(f"basis index (k={k}, l={l}) outside [0,{cfg.n_angle}) x [0,{cfg.n_range})")
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    if not _in_domain(theta, cfg.theta_domain):
        raise ValueError(f"theta outside domain {cfg.theta_domain}")
    if not _in_domain(r, cfg.range_domain):
        raise ValueError(f"r outside domain {cfg.range_domain}")
    qk = cfg.angle_wave_numbers[k]
    ql = cfg.range_wave_numbers[l]
    a0, _ = cfg.theta_domain
    r0, _ = cfg.range_domain
    val = np.exp(2j * np.pi * (qk * (theta - a0) / cfg.theta_length + ql * (r - r0) / cfg.range_length))
    val = val / np.sqrt(cfg.theta_length * cfg.range_length)
    return val[()] if np.ndim(val) == 0 else val


def trapezoid_grid(domain: tuple[float, float], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform nodes (endpoints included) and composite trapezoid weights."""
    if n < 2:
        raise ValueError("trapezoid rule needs at least 2 nodes")
    a, b = domain
    x = np.linspace(a, b, n)
    w = np.full(n, (b - a) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def default_density(max_wave_number: float) -> int:
    """Quadrature points per dimension: max(256, 8 x highest wave number)."""
    return int(max(256, np.ceil(8 * abs(max_wave_number))))


def check_orthonormality(cfg: BasisConfig, grid_density: int) -> float:
    """Max |Gram - I| of the separable basis under trapezoid quadrature."""
    th, wt = trapezoid_grid(cfg.theta_domain, grid_density)
    rr, wr = trapezoid_grid(cfg.range_domain, grid_density)
    pa = angle_modes(cfg, th)
    pr = range_modes(cfg, rr)
    gram_a = (pa.conj() * wt) @ pa.T
    gram_r = (pr.conj() * wr) @ pr.T
    gram = np.kron(gram_a, gram_r)
    return float(np.max(np.abs(gram - np.eye(cfg.n_coeffs))))


def coeffs_to_matrix(gamma: np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """Reshape a flat coefficient vector to a (K, L) array."""
    gamma = np.asarray(gamma)
    if gamma.shape[-1] != cfg.n_coeffs:
        raise ValueError(f"expected {cfg.n_coeffs} coefficients, got {gamma.shape[-1]}")
    return gamma.reshape(gamma.shape[:-1] + (cfg.n_angle, cfg.n_range))


def truncate_coeffs(gamma: np.ndarray, src: BasisConfig, dst: BasisConfig) -> np.ndarray:
    """Restrict (or zero-pad) coefficients to another basis size on the same domains.

    Mode ordering is nested, so the first K' x L' block of a larger basis is the
    smaller basis.
    """
    g = coeffs_to_matrix(gamma, src)
    out = np.zeros(g.shape[:-2] + (dst.n_angle, dst.n_range), dtype=complex)
    k = min(src.n_angle, dst.n_angle)
    l = min(src.n_range, dst.n_range)
    out[..., :k, :l] = g[..., :k, :l]
    return out.reshape(g.shape[:-2] + (dst.n_coeffs,))
