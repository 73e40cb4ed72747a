import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cluttervmp.basis import BasisConfig, trapezoid_grid
from cluttervmp.scene import (
    ALPHA_MAX,
    ALPHA_MIN,
    ARParams,
    ClutterCoefficients,
    EvalGrid,
    Scatterer,
    chain_array,
    clamp_alpha,
    complex_normal,
    draw_ar_chain,
    fence_scatterers,
    project_map,
    project_scatterers,
    render_map,
    snr_to_noise_precision,
    stationary_noise_params,
    synthesize_frame,
    synthesize_frame_direct,
    synthesize_frames,
)


def test_clamp():
    assert clamp_alpha(-1) == ALPHA_MIN
    assert clamp_alpha(2) == ALPHA_MAX
    assert clamp_alpha(0.3) == 0.3


def test_arparams_validation():
    with pytest.raises(ValueError):
        ARParams(0.0, np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        ARParams(0.5, np.zeros(2), np.array([1.0, 0.0]))


def test_stationary_noise_params_examples():
    mu_v, lam_v = stationary_noise_params(ARParams(0.5, np.array([2.0]), np.array([1.0])))
    assert mu_v[0] == pytest.approx(1.0)
    assert lam_v[0] == pytest.approx(4 / 3)
    mu_v, lam_v = stationary_noise_params(ARParams(ALPHA_MIN, np.array([2.0]), np.array([3.0])))
    assert mu_v[0] == pytest.approx(2.0, rel=2e-3)
    assert lam_v[0] == pytest.approx(3.0, rel=1e-5)


def test_complex_normal_convention(rng):
    z = complex_normal(rng, 0.0, 4.0, size=200_000)
    assert np.var(z.real) == pytest.approx(1 / 8, rel=0.02)
    assert np.var(z.imag) == pytest.approx(1 / 8, rel=0.02)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1 / 4, rel=0.02)


def test_chain_degenerate_noise():
    mu = np.array([1 + 2j, -0.5j])
    ch = chain_array(draw_ar_chain(ARParams(0.6, mu, np.full(2, 1e12)), 20, seed=3))
    assert np.max(np.abs(ch - mu)) < 1e-5


def test_chain_lag1_autocorrelation():
    p = ARParams(0.7, np.array([0.5 + 0.5j]), np.array([2.0]))
    x = chain_array(draw_ar_chain(p, 100_000, seed=11))[:, 0]
    x = x - x.mean()
    rho = np.real(np.sum(x[1:] * np.conj(x[:-1])) / np.sum(np.abs(x) ** 2))
    assert rho == pytest.approx(0.7, abs=0.02)


def test_chain_deterministic():
    p = ARParams(0.3, np.zeros(3), np.ones(3))
    a = chain_array(draw_ar_chain(p, 10, seed=5))
    b = chain_array(draw_ar_chain(p, 10, seed=5))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        draw_ar_chain(p, 0, seed=5)


def test_high_precision_chain_stays_near_mean():
    cfg = BasisConfig(8, 8)
    g0 = project_scatterers(fence_scatterers(cfg), cfg).gamma
    ch = chain_array(draw_ar_chain(ARParams(0.9, g0, np.full(cfg.n_coeffs, 1e6)), 100, seed=1))
    dev = np.linalg.norm(ch - ch[0], axis=1) / np.linalg.norm(ch[0])
    assert dev.max() < 1e-2


def test_project_scatterers_basics():
    cfg = BasisConfig(4, 4)
    assert np.all(project_scatterers([], cfg).gamma == 0)
    a = Scatterer(0.2, 10.0, 1.0)
    b = Scatterer(-0.4, 30.0, 0.5j)
    ga = project_scatterers([a], cfg).gamma
    gb = project_scatterers([b], cfg).gamma
    np.testing.assert_allclose(project_scatterers([a, b], cfg).gamma, ga + gb, atol=1e-14)
    with pytest.raises(ValueError):
        project_scatterers([Scatterer(0.0, 60.0)], cfg)


def test_single_scatterer_peak_grows():
    s = Scatterer(0.3, 22.0, 1.0)
    grid = EvalGrid(np.array([0.3]), np.array([22.0]))
    vals = []
    for n in (1, 2, 4, 6, 8, 12):
        cfg = BasisConfig(n, n)
        vals.append(render_map(project_scatterers([s], cfg), cfg, grid)[0, 0].real)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_render_dc():
    cfg = BasisConfig(3, 3)
    g = np.zeros(9, dtype=complex)
    g[0] = 2 - 1j
    m = render_map(g, cfg, EvalGrid.uniform(cfg, 5, 7))
    np.testing.assert_allclose(m, (2 - 1j) / np.sqrt(np.pi * 50.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_render_project_roundtrip(k, l, seed):
    cfg = BasisConfig(k, l)
    r = np.random.default_rng(seed)
    g = r.standard_normal(cfg.n_coeffs) + 1j * r.standard_normal(cfg.n_coeffs)
    th, _ = trapezoid_grid(cfg.theta_domain, 65)
    rr, _ = trapezoid_grid(cfg.range_domain, 65)
    field = render_map(g, cfg, EvalGrid(th, rr))
    np.testing.assert_allclose(project_map(field, cfg, th, rr), g, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_render_linear(seed):
    cfg = BasisConfig(3, 4)
    r = np.random.default_rng(seed)
    g1 = r.standard_normal(12) + 1j * r.standard_normal(12)
    g2 = r.standard_normal(12) + 1j * r.standard_normal(12)
    grid = EvalGrid.uniform(cfg, 9, 11)
    np.testing.assert_allclose(
        render_map(g1 + g2, cfg, grid), render_map(g1, cfg, grid) + render_map(g2, cfg, grid), atol=1e-12
    )


def test_synthesize_vanishing_noise(small_model, rng):
    fm = small_model.with_noise_precision(1e12)
    g = ClutterCoefficients(rng.standard_normal(fm.n_coeffs) + 1j * rng.standard_normal(fm.n_coeffs))
    y = synthesize_frame(fm, g, seed=1).y
    clean = fm.m_matrix @ g.gamma
    assert np.linalg.norm(y - clean) / np.linalg.norm(clean) < 1e-5


def test_synthesize_noise_statistics(small_model):
    fm = small_model.with_noise_precision(4.0)
    zero = np.zeros((200, fm.n_coeffs))
    w = synthesize_frames(fm, zero, seed=2).ravel()
    assert w.size >= 100_000
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.25, rel=0.05)
    assert abs(np.mean(w**2)) < 0.01  # circular


def test_synthesize_shape_check(small_model):
    with pytest.raises(ValueError):
        synthesize_frame(small_model, ClutterCoefficients(np.zeros(3)), seed=0)


def test_synthesize_frame_and_batch_agree(small_model, rng):
    g = rng.standard_normal(small_model.n_coeffs) + 0j
    a = synthesize_frame(small_model, ClutterCoefficients(g), seed=9).y
    b = synthesize_frames(small_model, g[None, :], seed=9)[0]
    np.testing.assert_allclose(a, b)


def _direct_inputs(cfg, seed, n_theta=257, n_r=513):
    r = np.random.default_rng(seed)
    g = r.standard_normal(cfg.n_coeffs) + 1j * r.standard_normal(cfg.n_coeffs)
    th, _ = trapezoid_grid(cfg.theta_domain, n_theta)
    rr, _ = trapezoid_grid(cfg.range_domain, n_r)
    return g, th, rr, render_map(g, cfg, EvalGrid(th, rr))


def test_direct_zero_field(small_radar, small_geometry, small_basis):
    _, th, rr, _ = _direct_inputs(small_basis, 0)
    y = synthesize_frame_direct(np.zeros((th.size, rr.size)), small_radar, small_geometry, th, rr).y
    assert np.all(y == 0)


def test_direct_matches_linear_model(small_radar, small_geometry, small_basis, small_model):
    g, th, rr, field = _direct_inputs(small_basis, 1)
    y = synthesize_frame_direct(field, small_radar, small_geometry, th, rr).y
    ref = small_model.m_matrix @ g
    assert np.linalg.norm(y - ref) / np.linalg.norm(ref) < 1e-2


def test_direct_grid_convergence(small_radar, small_geometry, small_basis):
    g, th, rr, field = _direct_inputs(small_basis, 2, 257, 1025)
    y1 = synthesize_frame_direct(field, small_radar, small_geometry, th, rr).y
    g, th2, rr2, field2 = _direct_inputs(small_basis, 2, 513, 2049)
    y2 = synthesize_frame_direct(field2, small_radar, small_geometry, th2, rr2).y
    assert np.linalg.norm(y2 - y1) / np.linalg.norm(y2) < 1e-3


def test_direct_underresolved_warning(small_radar, small_geometry, small_basis):
    _, th, rr, field = _direct_inputs(small_basis, 3, 9, 9)
    frame = synthesize_frame_direct(field, small_radar, small_geometry, th, rr)
    assert frame.meta["warnings"]


def test_snr_helper(small_model, rng):
    g = rng.standard_normal(small_model.n_coeffs) + 1j * rng.standard_normal(small_model.n_coeffs)
    power = np.mean(np.abs(small_model.m_matrix @ g) ** 2)
    lam0 = snr_to_noise_precision(0.0, small_model, g)
    assert 1 / lam0 == pytest.approx(power)
    assert snr_to_noise_precision(10.0, small_model, g) == pytest.approx(10 * lam0)
    with pytest.raises(ValueError):
        snr_to_noise_precision(0.0, small_model, np.zeros(small_model.n_coeffs))


def test_empirical_snr(small_model, rng):
    g = rng.standard_normal(small_model.n_coeffs) + 1j * rng.standard_normal(small_model.n_coeffs)
    lam = snr_to_noise_precision(3.0, small_model, g)
    fm = small_model.with_noise_precision(lam)
    y = synthesize_frames(fm, np.tile(g, (100, 1)), seed=4)
    noise = y - fm.m_matrix @ g
    snr = 10 * np.log10(np.mean(np.abs(fm.m_matrix @ g) ** 2) / np.mean(np.abs(noise) ** 2))
    assert snr == pytest.approx(3.0, abs=0.5)


def test_fence_in_domain():
    cfg = BasisConfig(4, 4)
    posts = fence_scatterers(cfg)
    assert len(posts) > 10
    for p in posts:
        assert -np.pi / 2 <= p.theta <= np.pi / 2 and 0 <= p.range <= 50
