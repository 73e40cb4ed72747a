"""Ground-truth clutter coefficient chains, scatterer maps and measurement frames."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisConfig, angle_modes, range_modes, trapezoid_grid
from .forward import ForwardModel
from .radar import ArrayGeometry, RadarConfig

log = logging.getLogger(__name__)

ALPHA_MIN = 1e-3
ALPHA_MAX = 1.0 - 1e-3


def clamp_alpha(alpha: float) -> float:
    return float(min(max(alpha, ALPHA_MIN), ALPHA_MAX))


@dataclass(frozen=True)
class ARParams:
    alpha: float
    mean: np.ndarray
    precision_diag: np.ndarray

    def __post_init__(self):
        if not ALPHA_MIN <= self.alpha <= ALPHA_MAX:
            raise ValueError(f"alpha={self.alpha} outside [{ALPHA_MIN}, {ALPHA_MAX}]")
        mean = np.asarray(self.mean, dtype=complex)
        prec = np.broadcast_to(np.asarray(self.precision_diag, dtype=float), mean.shape).copy()
        if not np.all(prec > 0):
            raise ValueError("precision_diag must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision_diag", prec)

    @property
    def n_coeffs(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class ClutterCoefficients:
    gamma: np.ndarray
    frame_index: int = 0


@dataclass(frozen=True)
class Scatterer:
    theta: float
    range: float
    amplitude: complex = 1.0


@dataclass(frozen=True)
class MeasurementFrame:
    y: np.ndarray
    frame_index: int = 0
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class EvalGrid:
    theta: np.ndarray
    r: np.ndarray

    @classmethod
    def uniform(cls, cfg: BasisConfig, n_theta: int = 64, n_range: int = 64) -> "EvalGrid":
        """Periodic grid (right endpoint excluded) on which the modes are discretely orthogonal."""
        a, b = cfg.theta_domain
        r0, r1 = cfg.range_domain
        return cls(
            a + (b - a) * np.arange(n_theta) / n_theta,
            r0 + (r1 - r0) * np.arange(n_range) / n_range,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.size, self.r.size)


def complex_normal(rng: np.random.Generator, mean, precision, size=None) -> np.ndarray:
    """Circular complex Gaussian draws; real and imaginary parts each have variance 1/(2 precision)."""
    mean = np.asarray(mean, dtype=complex)
    precision = np.asarray(precision, dtype=float)
    shape = np.broadcast_shapes(mean.shape, precision.shape) if size is None else size
    scale = np.sqrt(0.5 / precision)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return mean + scale * z


def stationary_noise_params(p: ARParams) -> tuple[np.ndarray, np.ndarray]:
    """Process-noise mean and precision that keep the chain stationary at (mu, Lambda)."""
    return p.mean * (1 - p.alpha), p.precision_diag / (1 - p.alpha**2)


def draw_ar_chain(p: ARParams, n_frames: int, seed: int) -> list[ClutterCoefficients]:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    mu_v, lam_v = stationary_noise_params(p)
    g = complex_normal(rng, p.mean, p.precision_diag)
    out = [ClutterCoefficients(g, 0)]
    for n in range(1, n_frames):
        g = p.alpha * g + complex_normal(rng, mu_v, lam_v)
        out.append(ClutterCoefficients(g, n))
    return out


def chain_array(chain: list[ClutterCoefficients]) -> np.ndarray:
    return np.stack([c.gamma for c in chain])


def _check_scatterer(s: Scatterer, cfg: BasisConfig):
    a, b = cfg.theta_domain
    r0, r1 = cfg.range_domain
    if not (a <= s.theta <= b and r0 <= s.range <= r1):
        raise ValueError(f"scatterer at (theta={s.theta}, r={s.range}) outside basis domain")


def project_scatterers(scatterers: list[Scatterer], cfg: BasisConfig) -> ClutterCoefficients:
    """Coefficients of a sum of point reflectors ``sum_p a_p delta(. - p)``."""
    gamma = np.zeros(cfg.n_coeffs, dtype=complex)
    if not scatterers:
        return ClutterCoefficients(gamma)
    for s in scatterers:
        _check_scatterer(s, cfg)
    th = np.array([s.theta for s in scatterers])
    rr = np.array([s.range for s in scatterers])
    amp = np.array([s.amplitude for s in scatterers], dtype=complex)
    # C = sum Gamma conj(psi)  =>  Gamma = <conj(psi) | C> = sum_p a_p psi(p)
    gamma = np.einsum("p,kp,lp->kl", amp, angle_modes(cfg, th), range_modes(cfg, rr)).ravel()
    return ClutterCoefficients(gamma)


def render_map(g: ClutterCoefficients | np.ndarray, cfg: BasisConfig, grid: EvalGrid) -> np.ndarray:
    """Field ``C(theta, r)`` on ``grid``; shape (n_theta, n_range)."""
    gamma = g.gamma if isinstance(g, ClutterCoefficients) else np.asarray(g)
    coeffs = gamma.reshape(cfg.n_angle, cfg.n_range)
    return angle_modes(cfg, grid.theta).conj().T @ coeffs @ range_modes(cfg, grid.r).conj()


def project_map(field_values: np.ndarray, cfg: BasisConfig, theta: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Coefficients of a field sampled on a trapezoid grid (endpoints included)."""
    _, wt = trapezoid_grid(cfg.theta_domain, theta.size)
    _, wr = trapezoid_grid(cfg.range_domain, r.size)
    pa = angle_modes(cfg, theta) * wt
    pr = range_modes(cfg, r) * wr
    return (pa @ field_values @ pr.T).ravel()


def synthesize_frame(fm: ForwardModel, g: ClutterCoefficients, seed: int) -> MeasurementFrame:
    """``y = M Gamma + w`` with ``w ~ CN(0, lambda_W I)`` (precision parameterisation)."""
    if g.gamma.shape != (fm.n_coeffs,):
        raise ValueError(f"coefficient length {g.gamma.shape} does not match model ({fm.n_coeffs},)")
    rng = np.random.default_rng(seed)
    y = fm.m_matrix @ g.gamma + complex_normal(rng, 0.0, fm.noise_precision, size=fm.n_rows)
    return MeasurementFrame(y, g.frame_index)


def synthesize_frames(fm: ForwardModel, gammas: np.ndarray, seed: int) -> np.ndarray:
    """Batch version for a (n_frames, N_Gamma) array; one generator for the whole batch."""
    gammas = np.atleast_2d(gammas)
    if gammas.shape[1] != fm.n_coeffs:
        raise ValueError(f"coefficient length {gammas.shape[1]} does not match model {fm.n_coeffs}")
    rng = np.random.default_rng(seed)
    noise = complex_normal(rng, 0.0, fm.noise_precision, size=(gammas.shape[0], fm.n_rows))
    return gammas @ fm.m_matrix.T + noise


def synthesize_frame_direct(
    field_values: np.ndarray,
    radar: RadarConfig,
    geometry: ArrayGeometry,
    theta: np.ndarray,
    r: np.ndarray,
    frame_index: int = 0,
) -> MeasurementFrame:
    """Noiseless samples by trapezoid integration of the received-signal integral.

    ``field_values[a, b]`` is the clutter map at ``(theta[a], r[b])`` on a uniform
    grid spanning the full domain. The steering phase and the delayed waveform
    are evaluated pointwise; no basis expansion is involved.
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    if field_values.shape != (theta.size, r.size):
        raise ValueError("field grid shape does not match theta/r nodes")
    wt = _trapz_weights(theta)
    wr = _trapz_weights(r)
    meta: dict = {"warnings": []}
    pts_theta = theta.size / max(1.0, 2 * geometry.max_path * 2)  # phase spans 2*max_path cycles
    pts_range = r.size / max(1.0, radar.range_bandwidth_cycles())
    if min(pts_theta, pts_range) < 4:
        msg = f"quadrature grid under-resolved ({pts_theta:.1f}, {pts_range:.1f} points per oscillation)"
        meta["warnings"].append(msg)
        log.warning(msg)
    a = geometry.steering(theta)  # (n_rx, n_tx, n_theta)
    # angular integral first: g[j, m, b] = sum_a w_a C(a, b) A_jm(a)
    g = np.einsum("jma,a,ab->jmb", a, wt, field_values)
    t = radar.sample_times
    y = np.zeros((geometry.n_rx, radar.n_samples), dtype=complex)
    for m in range(radar.n_tx):
        sl = radar.slot_slice(m)
        u = radar.delayed_signal(m, t[sl], r) * wr  # (n_slot, n_r)
        y[:, sl] += g[:, m, :] @ u.T
    return MeasurementFrame(y.ravel(), frame_index, meta)


def _trapz_weights(x: np.ndarray) -> np.ndarray:
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def snr_to_noise_precision(target_snr_db: float, fm: ForwardModel, g_ref: ClutterCoefficients | np.ndarray) -> float:
    """Noise precision giving the requested per-sample signal-to-noise ratio.

    Signal power is ``|M Gamma_ref|^2 / (N_s N_R)`` averaged over every sample of
    the frame, including samples no echo reaches.
    """
    gamma = g_ref.gamma if isinstance(g_ref, ClutterCoefficients) else np.asarray(g_ref)
    s = fm.m_matrix @ gamma
    power = float(np.vdot(s, s).real) / fm.n_rows
    if power <= 0:
        raise ValueError("reference signal has zero power; SNR undefined")
    return 10 ** (target_snr_db / 10) / power


def fence_scatterers(
    cfg: BasisConfig,
    n_posts: int = 24,
    x_extent: tuple[float, float] = (-18.0, 18.0),
    y_extent: tuple[float, float] = (15.0, 40.0),
    amplitude: complex = 1.0,
) -> list[Scatterer]:
    """Posts equally spaced along a rectangle in front of the radar.

    The rectangle is given in Cartesian metres with the array at the origin and
    boresight along +y; the far edge may fall outside the range domain and is
    then dropped.
    """
    (x0, x1), (y0, y1) = x_extent, y_extent
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])
    seg = np.linalg.norm(np.diff(corners, axis=0), axis=1)
    s = np.arange(n_posts) * seg.sum() / n_posts
    cum = np.concatenate([[0], np.cumsum(seg)])
    out = []
    for si in s:
        i = min(np.searchsorted(cum, si, side="right") - 1, 3)
        f = (si - cum[i]) / seg[i]
        x, y = corners[i] + f * (corners[i + 1] - corners[i])
        theta = float(np.arctan2(x, y))
        rng_m = float(np.hypot(x, y))
        sc = Scatterer(theta, rng_m, amplitude)
        try:
            _check_scatterer(sc, cfg)
        except ValueError:
            continue
        out.append(sc)
    return out


