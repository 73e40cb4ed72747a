"""Experiment configuration: YAML in, validated dataclasses out.

Every block maps one-to-one onto a dataclass; keys not declared there are
rejected by name. ``resolved_dict`` gives the fully defaulted config that is
written next to every result set, and ``config_hash`` its SHA-256.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .basis import BasisConfig
from .radar import ArrayGeometry, RadarConfig, RadarSetup


class ConfigError(ValueError):
    """Raised for malformed or invalid experiment configs."""


@dataclass(frozen=True)
class RadarBlock:
    prf: float = 10.0
    f_c: float = 10e9
    bandwidth: float = 20e6
    t_tx: float = 16e-6
    f_s: float = 256e6
    n_tx: int = 4
    n_rx: int = 4
    r_max: float = 50.0
    carrier: bool = False
    gain: float = 1.0
    tx_positions: list[float] | None = None  # wavelengths; default virtual ULA
    rx_positions: list[float] | None = None

    def setup(self) -> RadarSetup:
        radar = RadarConfig(
            prf=self.prf,
            f_c=self.f_c,
            bandwidth=self.bandwidth,
            t_tx=self.t_tx,
            f_s=self.f_s,
            n_tx=self.n_tx,
            n_rx=self.n_rx,
            r_max=self.r_max,
            carrier=self.carrier,
            gain=self.gain,
        )
        geom = None
        if self.tx_positions is not None or self.rx_positions is not None:
            if self.tx_positions is None or self.rx_positions is None:
                raise ConfigError("radar.tx_positions and radar.rx_positions must be given together")
            geom = ArrayGeometry(tuple(self.tx_positions), tuple(self.rx_positions))
        return RadarSetup(radar, geom)


@dataclass(frozen=True)
class BasisBlock:
    n_angle: int = 6
    n_range: int = 6
    theta_min: float = -1.5707963267948966
    theta_max: float = 1.5707963267948966

    def config(self, r_max: float) -> BasisConfig:
        return BasisConfig(self.n_angle, self.n_range, (self.theta_min, self.theta_max), (0.0, r_max))


@dataclass(frozen=True)
class ScenarioA:
    alpha: float = 0.1
    lambda_min: float = 0.5
    lambda_max: float = 5.0
    # variance of mu_(k,l) is 1 / (1 + |q_k| + |q_l|)^(2 * mu_decay)
    mu_decay: float = 1.0


@dataclass(frozen=True)
class ScatterSpec:
    theta: float
    range: float
    amplitude_re: float = 1.0
    amplitude_im: float = 0.0


@dataclass(frozen=True)
class FenceSpec:
    n_posts: int = 24
    x_min: float = -18.0
    x_max: float = 18.0
    y_min: float = 15.0
    y_max: float = 40.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class ScenarioB:
    alpha: float = 0.9
    precision: float = 1e6
    fence: FenceSpec = field(default_factory=FenceSpec)
    scatterers: list[ScatterSpec] = field(default_factory=list)  # appended to the fence
    reference_basis: list[int] = field(default_factory=lambda: [32, 32])
    snr_db_list: list[float] = field(default_factory=lambda: [6.0, 0.0, -6.0])
    sweep_sizes: list[list[int]] = field(default_factory=lambda: [[2, 2], [4, 4], [6, 6], [8, 8], [10, 10], [12, 12]])
    sweep_snr_db: float = 6.0
    map_grid: list[int] = field(default_factory=lambda: [64, 64])
    frames_from: str = "working"  # or "reference"


@dataclass(frozen=True)
class ScenarioBlock:
    kind: str = "A"
    a: ScenarioA = field(default_factory=ScenarioA)
    b: ScenarioB = field(default_factory=ScenarioB)


@dataclass(frozen=True)
class InferenceBlock:
    n_frames: int = 100  # N + 1
    n_iters: int = 150
    update_alpha: bool = False
    pinv_tol: float = 1e-10
    transition: str = "stationary"


@dataclass(frozen=True)
class NoiseBlock:
    """An explicit ``noise_precision`` (lambda_W) takes precedence over ``snr_db``."""

    snr_db: float | None = 0.0
    noise_precision: float | None = None


@dataclass(frozen=True)
class SeedBlock:
    root: int = 0
    replicates: int = 1


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"
    binary: bool = True
    record_runtime: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    radar: RadarBlock = field(default_factory=RadarBlock)
    basis: BasisBlock = field(default_factory=BasisBlock)
    scenario: ScenarioBlock = field(default_factory=ScenarioBlock)
    inference: InferenceBlock = field(default_factory=InferenceBlock)
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    seeds: SeedBlock = field(default_factory=SeedBlock)
    outputs: OutputBlock = field(default_factory=OutputBlock)

    def __post_init__(self):
        validate(self)

    def radar_setup(self) -> RadarSetup:
        return self.radar.setup()

    def basis_config(self) -> BasisConfig:
        return self.basis.config(self.radar.r_max)

    def with_updates(self, **blocks) -> "ExperimentConfig":
        """Copy with some top-level blocks replaced (each given as a dict of overrides)."""
        d = resolved_dict(self)
        for name, over in blocks.items():
            if name not in d:
                raise ConfigError(f"unknown config block {name!r}")
            d[name] = _merge(d[name], over)
        return from_dict(d)


def _merge(base, over):
    if isinstance(base, dict) and isinstance(over, dict):
        out = dict(base)
        for k, v in over.items():
            out[k] = _merge(base[k], v) if k in base else v
        return out
    return over


# --- construction and validation -----------------------------------------


def _build(cls, data: Any, path: str):
    if dataclasses.is_dataclass(cls):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(fields))
        if unknown:
            where = f" in {path}" if path else ""
            raise ConfigError(f"unknown key {unknown[0]!r}{where}")
        kwargs = {}
        for name, value in data.items():
            kwargs[name] = _build_field(fields[name].type, value, f"{path}.{name}" if path else name)
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path or 'config'}: {e}") from e
    return data


_NESTED = {
    "RadarBlock": RadarBlock,
    "BasisBlock": BasisBlock,
    "ScenarioBlock": ScenarioBlock,
    "ScenarioA": ScenarioA,
    "ScenarioB": ScenarioB,
    "FenceSpec": FenceSpec,
    "InferenceBlock": InferenceBlock,
    "NoiseBlock": NoiseBlock,
    "SeedBlock": SeedBlock,
    "OutputBlock": OutputBlock,
}


def _build_field(type_str, value, path: str):
    t = str(type_str)
    if t in _NESTED:
        return _build(_NESTED[t], value, path)
    if t == "list[ScatterSpec]":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return [_build(ScatterSpec, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if t in ("float", "float | None") and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if t in ("float", "float | None") and isinstance(value, str):
        # YAML 1.1 reads exponent literals without a dot ("10e9") as strings
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if t == "float" and not isinstance(value, float):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if t == "int" and (not isinstance(value, int) or isinstance(value, bool)):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if t == "bool" and not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _require(cond: bool, key: str, constraint: str):
    if not cond:
        raise ConfigError(f"{key}: must satisfy {constraint}")


def validate(cfg: ExperimentConfig) -> None:
    r = cfg.radar
    for name in ("prf", "f_c", "bandwidth", "t_tx", "f_s", "r_max", "gain"):
        _require(getattr(r, name) > 0, f"radar.{name}", "> 0")
    _require(r.n_tx >= 1, "radar.n_tx", ">= 1")
    _require(r.n_rx >= 1, "radar.n_rx", ">= 1")
    _require(
        r.n_tx * r.t_tx <= 1.0 / r.prf,
        "radar.t_tx",
        f"TDM feasibility n_tx * t_tx <= 1/prf ({r.n_tx} x {r.t_tx} > {1.0 / r.prf})",
    )
    try:
        cfg.radar_setup()
    except ValueError as e:
        raise ConfigError(f"radar: {e}") from e
    _require(cfg.basis.n_angle >= 1, "basis.n_angle", ">= 1")
    _require(cfg.basis.n_range >= 1, "basis.n_range", ">= 1")
    _require(cfg.basis.theta_max > cfg.basis.theta_min, "basis.theta_max", "> basis.theta_min")
    sc = cfg.scenario
    _require(sc.kind in ("A", "B"), "scenario.kind", "one of A, B")
    if sc.kind == "A":
        _require(0 < sc.a.alpha < 1, "scenario.a.alpha", "0 < alpha < 1")
        _require(0 < sc.a.lambda_min <= sc.a.lambda_max, "scenario.a.lambda_min", "0 < lambda_min <= lambda_max")
        _require(sc.a.mu_decay >= 0, "scenario.a.mu_decay", ">= 0")
    else:
        b = sc.b
        _require(0 < b.alpha < 1, "scenario.b.alpha", "0 < alpha < 1")
        _require(b.precision > 0, "scenario.b.precision", "> 0")
        _require(
            len(b.reference_basis) == 2 and min(b.reference_basis) >= 1, "scenario.b.reference_basis", "[K, L] >= 1"
        )
        _require(len(b.snr_db_list) >= 1, "scenario.b.snr_db_list", "non-empty")
        _require(
            all(len(s) == 2 and min(s) >= 1 for s in b.sweep_sizes), "scenario.b.sweep_sizes", "list of [K, L] >= 1"
        )
        _require(
            all(s[0] <= b.reference_basis[0] and s[1] <= b.reference_basis[1] for s in b.sweep_sizes)
            and cfg.basis.n_angle <= b.reference_basis[0]
            and cfg.basis.n_range <= b.reference_basis[1],
            "scenario.b.reference_basis",
            "at least as large as every working basis",
        )
        _require(len(b.map_grid) == 2 and min(b.map_grid) >= 2, "scenario.b.map_grid", "[n_theta, n_range] >= 2")
        _require(b.frames_from in ("working", "reference"), "scenario.b.frames_from", "working or reference")
        _require(b.fence.n_posts >= 0, "scenario.b.fence.n_posts", ">= 0")
    inf = cfg.inference
    _require(inf.n_frames >= 1, "inference.n_frames", ">= 1")
    _require(inf.n_iters >= 0, "inference.n_iters", ">= 0")
    _require(inf.pinv_tol > 0, "inference.pinv_tol", "> 0")
    _require(inf.transition in ("stationary", "as_printed"), "inference.transition", "stationary or as_printed")
    nz = cfg.noise
    _require(nz.snr_db is not None or nz.noise_precision is not None, "noise", "snr_db or noise_precision set")
    if nz.noise_precision is not None:
        _require(nz.noise_precision > 0, "noise.noise_precision", "> 0")
    _require(cfg.seeds.replicates >= 1, "seeds.replicates", ">= 1")
    _require(cfg.seeds.root >= 0, "seeds.root", ">= 0")


def from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def parse_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: YAML parse error: {e}") from e
    return from_dict(data or {})


def resolved_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the resolved config, excluding the output location."""
    d = resolved_dict(cfg)
    d["outputs"].pop("dir")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def dump_resolved(cfg: ExperimentConfig, path: str | Path) -> str:
    """Write the fully defaulted config as YAML; returns its hash."""
    h = config_hash(cfg)
    text = f"# config_sha256: {h}\n" + yaml.safe_dump(resolved_dict(cfg), sort_keys=True)
    Path(path).write_text(text)
    return h
