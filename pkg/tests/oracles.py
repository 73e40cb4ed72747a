"""Reference computations written independently of the package internals.

Each oracle evaluates the defining formula directly (explicit loops, dense
grids, closed-form linear algebra) so it can check the vectorised code.
"""

import numpy as np

C0 = 299_792_458.0


def mode(q, x, a, b):
    return np.exp(2j * np.pi * q * (np.asarray(x) - a) / (b - a)) / np.sqrt(b - a)


def signed_wave_number(k):
    return 0 if k == 0 else ((k + 1) // 2) * (1 if k % 2 else -1)


def chirp(t, bandwidth, t_tx):
    t = np.asarray(t, dtype=float)
    on = (t >= 0) & (t < t_tx)
    ph = np.pi * bandwidth / t_tx * t**2 - np.pi * bandwidth * t
    return np.where(on, np.exp(1j * ph), 0.0)


def brute_force_matrix(radar, geometry, cfg, n_quad=256):
    """M[j*N_s + i, k*L + l] = sum_m <psi_k|A_jm> <psi_l|u_m(t_i - tau)>, entry by entry.

    The field is written on conj(psi), so the received samples pick up the plain
    inner products. ``n_quad`` trapezoid nodes per dimension; the delayed chirp
    has hard edges in r, so only equal grids agree to round-off.
    """
    a0, a1 = cfg.theta_domain
    r0, r1 = cfg.range_domain
    th = np.linspace(a0, a1, n_quad)
    wt = np.full(n_quad, (a1 - a0) / (n_quad - 1))
    wt[[0, -1]] *= 0.5
    rr = np.linspace(r0, r1, n_quad)
    wr = np.full(n_quad, (r1 - r0) / (n_quad - 1))
    wr[[0, -1]] *= 0.5
    n_s = radar.n_samples
    slot = radar.samples_per_slot
    t = np.arange(n_s) / radar.f_s
    rows = geometry.n_rx * n_s
    m_out = np.zeros((rows, cfg.n_angle * cfg.n_range), dtype=complex)
    for m in range(geometry.n_tx):
        t_start = m * slot / radar.f_s
        for j in range(geometry.n_rx):
            d = geometry.rx_positions[j] + geometry.tx_positions[m]
            steer = np.exp(2j * np.pi * d * np.sin(th))
            for k in range(cfg.n_angle):
                alpha = np.sum(wt * np.conj(mode(signed_wave_number(k), th, a0, a1)) * steer)
                for i in range(m * slot, (m + 1) * slot):
                    u = chirp(t[i] - 2 * rr / C0 - t_start, radar.bandwidth, radar.t_tx) * radar.gain
                    for l in range(cfg.n_range):
                        beta = np.sum(wr * np.conj(mode(signed_wave_number(l), rr, r0, r1)) * u)
                        m_out[j * n_s + i, k * cfg.n_range + l] += alpha * beta
    return m_out


def gaussian_product_on_grid(means, variances, n=200001, width=12.0):
    """Mean and variance of the normalised pointwise product of scalar Gaussian densities."""
    means = np.asarray(means, float)
    sd = np.sqrt(np.asarray(variances, float))
    lo = np.min(means - width * sd)
    hi = np.max(means + width * sd)
    x = np.linspace(lo, hi, n)
    logp = np.zeros_like(x)
    for m, v in zip(means, variances):
        logp += -0.5 * (x - m) ** 2 / v
    p = np.exp(logp - logp.max())
    z = np.trapezoid(p, x)
    mean = np.trapezoid(x * p, x) / z
    var = np.trapezoid((x - mean) ** 2 * p, x) / z
    return mean, var


def exact_mu_posterior_mean_linear(y, data_prec, lam, alpha):
    """Posterior mean of mu for one component, frames 0 and 1, by solving the joint normal equations.

    Joint: data messages on Gamma_0, Gamma_1; p(Gamma_n | mu) with precision lam for
    both frames; the AR transition Gamma_1 | Gamma_0, mu with precision
    lam / (1 - alpha^2). Flat prior on mu.
    """
    out = []
    for part in (np.real(y), np.imag(y)):
        p = np.zeros((3, 3))
        h = np.zeros(3)
        terms = [
            ([1, 0, 0], part[0], data_prec),
            ([0, 1, 0], part[1], data_prec),
            ([1, 0, -1], 0.0, lam),
            ([0, 1, -1], 0.0, lam),
            ([-alpha, 1, -(1 - alpha)], 0.0, lam / (1 - alpha**2)),
        ]
        for v, c, w in terms:
            v = np.asarray(v, float)
            p += w * np.outer(v, v)
            h += w * c * v
        out.append(np.linalg.solve(p, h)[2])
    return out[0] + 1j * out[1]


def exact_mu_posterior_mean_grid(y, data_prec, lam, alpha, n=161, width=7.0):
    """Same posterior mean by dense numerical integration over (Gamma_0, Gamma_1, mu).

    Real and imaginary parts factorise, so each is a 3-D grid integral of the
    unnormalised joint density.
    """
    out = []
    for part in (np.real(y), np.imag(y)):
        center = float(np.mean(part))
        spread = width * max(1.0 / np.sqrt(min(data_prec, lam)), abs(part[0] - part[1]), 1.0)
        g = np.linspace(center - spread, center + spread, n)
        g0, g1, mu = np.meshgrid(g, g, g, indexing="ij", sparse=True)
        # circular complex N(m, 1/w) has real-part density exp(-w (x - m)^2)
        logp = -data_prec * ((g0 - part[0]) ** 2 + (g1 - part[1]) ** 2)
        logp = logp - lam * ((g0 - mu) ** 2 + (g1 - mu) ** 2)
        logp = logp - lam / (1 - alpha**2) * (g1 - alpha * g0 - (1 - alpha) * mu) ** 2
        p = np.exp(logp - logp.max())
        out.append(float(np.sum(p * mu) / np.sum(p)))
    return out[0] + 1j * out[1]
