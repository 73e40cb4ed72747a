import numpy as np
import pytest

from cluttervmp import experiments as ex
from cluttervmp import io
from cluttervmp.basis import BasisConfig, truncate_coeffs


def test_seed_stream_distinct():
    seen = set()
    for root in range(10):
        for rep in range(333):
            for purpose in ex.PURPOSES:
                seen.add(ex.seed_stream(root, rep, purpose))
    assert len(seen) == 10 * 333 * 3
    assert ex.seed_stream(0, 1, "chain") == ex.seed_stream(0, 1, "chain")
    assert 0 <= ex.seed_stream(0, 0, "truth") < 2**64


def test_workers_env(monkeypatch):
    monkeypatch.delenv(ex.WORKERS_ENV, raising=False)
    assert ex.workers_from_env() == 1
    monkeypatch.setenv(ex.WORKERS_ENV, "3")
    assert ex.workers_from_env() == 3
    for bad in ("0", "x"):
        monkeypatch.setenv(ex.WORKERS_ENV, bad)
        with pytest.raises(ValueError):
            ex.workers_from_env()


def _square(d, r):
    return r * r


def test_map_replicates_order(tiny_a):
    assert ex.map_replicates(_square, tiny_a, range(5), workers=1) == [0, 1, 4, 9, 16]
    assert ex.map_replicates(_square, tiny_a, range(5), workers=2) == [0, 1, 4, 9, 16]


def test_scenario_a_truth_shared(tiny_a):
    t1 = ex.scenario_a_truth(tiny_a)
    t2 = ex.scenario_a_truth(tiny_a.with_updates(seeds={"replicates": 7}))
    np.testing.assert_array_equal(t1.mean, t2.mean)
    lam = t1.precision_diag
    assert np.all((lam >= 0.5) & (lam <= 5.0))


def test_simulate_a_deterministic(tiny_a):
    a = ex.simulate_scenario_a(tiny_a, 1)
    b = ex.simulate_scenario_a(tiny_a, 1)
    c = ex.simulate_scenario_a(tiny_a, 0)
    np.testing.assert_array_equal(a.frames, b.frames)
    assert not np.array_equal(a.chain, c.chain)
    assert a.frames.shape == (6, a.fm.n_rows)


def test_run_scenario_a_files(tiny_a, tmp_path):
    res = ex.run_scenario_a(tiny_a, tmp_path)
    assert len(res) == 2
    for name in ("truth.json", "truth_chain.bin", "posterior.json", "diagnostics.csv", "report.json"):
        assert (tmp_path / "rep_001" / name).is_file()
    rows = io.read_csv(tmp_path / "summary.csv")
    assert len(rows) == 2 and rows[0]["runtime_s"] == ""
    assert (tmp_path / "summary.csv").read_text().startswith("# config_sha256=")
    assert len(io.read_csv(tmp_path / "rep_000" / "diagnostics.csv")) == 5


def test_scene_b_nested_chain(tiny_b):
    scene = ex.scene_b(tiny_b, 0)
    assert scene.chain.shape == (6, 36)
    small = truncate_coeffs(scene.chain, scene.ref_basis, BasisConfig(3, 3))
    assert small.shape == (6, 9)
    dev = np.linalg.norm(scene.chain - scene.ref_gamma, axis=1) / np.linalg.norm(scene.ref_gamma)
    assert dev.max() < 1e-2


def test_scene_b_frames_snr(tiny_b):
    scene = ex.scene_b(tiny_b, 0)
    work = tiny_b.basis_config()
    _, fm6 = ex.scene_b_frames(tiny_b, scene, work, 6.0)
    _, fm0 = ex.scene_b_frames(tiny_b, scene, work, 0.0)
    assert fm6.noise_precision / fm0.noise_precision == pytest.approx(10**0.6)


def test_scene_b_reference_mode(tiny_b):
    cfg = tiny_b.with_updates(scenario={"b": {"frames_from": "reference"}})
    scene = ex.scene_b(cfg, 0)
    frames, fm = ex.scene_b_frames(cfg, scene, cfg.basis_config(), 6.0)
    assert frames.shape == (6, fm.n_rows)


def test_run_scenario_b_files(tiny_b, tmp_path):
    ex.run_scenario_b(tiny_b, tmp_path)
    for name in ("true_map.bin", "truncated_map.bin", "posterior_map_snr+6dB.bin", "posterior_map_snr-6dB.bin", "maps.json"):
        assert (tmp_path / name).is_file()
    assert io.read_matrix(tmp_path / "true_map.bin").shape == (16, 16)
    assert len(io.read_csv(tmp_path / "snr_runs.csv")) == 2 * 3
    sweep = io.read_csv(tmp_path / "sweep.csv")
    assert [int(r["n_coeffs"]) for r in sweep] == [4, 9, 4, 9]


def test_run_scenario_b_json_maps_and_runtime(tiny_b, tmp_path):
    cfg = tiny_b.with_updates(outputs={"binary": False, "record_runtime": True}, seeds={"replicates": 1})
    ex.run_scenario_b(cfg, tmp_path)
    assert (tmp_path / "true_map.json").is_file()
    assert float(io.read_csv(tmp_path / "sweep.csv")[0]["runtime_s"]) > 0


def test_kind_checks(tiny_a, tiny_b, tmp_path):
    with pytest.raises(ValueError):
        ex.run_scenario_a(tiny_b, tmp_path)
    with pytest.raises(ValueError):
        ex.run_scenario_b(tiny_a, tmp_path)
