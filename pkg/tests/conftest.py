import numpy as np
import pytest

from cluttervmp.basis import BasisConfig
from cluttervmp.forward import build_forward_model
from cluttervmp.radar import ArrayGeometry, RadarConfig


@pytest.fixture(scope="session")
def small_radar():
    # short chirp and slow sampling keep N_s small; same structure as the default
    return RadarConfig(bandwidth=20e6, t_tx=1e-6, f_s=64e6, n_tx=2, n_rx=3, r_max=50.0)


@pytest.fixture(scope="session")
def small_geometry(small_radar):
    return ArrayGeometry.virtual_ula(small_radar.n_tx, small_radar.n_rx)


@pytest.fixture(scope="session")
def small_basis():
    return BasisConfig(3, 4, range_domain=(0.0, 50.0))


@pytest.fixture(scope="session")
def small_model(small_radar, small_geometry, small_basis):
    return build_forward_model(small_radar, small_geometry, small_basis, noise_precision=2.0)


@pytest.fixture(scope="session")
def default_radar():
    return RadarConfig()


@pytest.fixture(scope="session")
def default_geometry():
    return ArrayGeometry.virtual_ula(4, 4)


@pytest.fixture(scope="session")
def default_model(default_radar, default_geometry):
    return build_forward_model(default_radar, default_geometry, BasisConfig(6, 6))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TINY = {
    "radar": {"bandwidth": 20e6, "t_tx": 1e-6, "f_s": 64e6, "n_tx": 2, "n_rx": 3, "r_max": 50.0},
    "basis": {"n_angle": 3, "n_range": 3},
    "inference": {"n_frames": 6, "n_iters": 5},
    "seeds": {"root": 3, "replicates": 2},
}


def tiny_dict(kind="A", **over):
    import copy

    d = copy.deepcopy(TINY)
    d["scenario"] = {
        "kind": kind,
        "b": {
            "reference_basis": [6, 6],
            "sweep_sizes": [[2, 2], [3, 3]],
            "map_grid": [16, 16],
            "fence": {"n_posts": 6},
        },
    }
    for k, v in over.items():
        d.setdefault(k, {}).update(v)
    return d


@pytest.fixture
def tiny_a():
    from cluttervmp.config import from_dict

    return from_dict(tiny_dict("A"))


@pytest.fixture
def tiny_b():
    from cluttervmp.config import from_dict

    return from_dict(tiny_dict("B"))


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
