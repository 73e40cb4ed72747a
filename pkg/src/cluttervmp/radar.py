"""TDM MIMO radar description: chirp waveform, sampling schedule, array geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadarConfig:
    """Timing of one MIMO transmission.

    Every transmitter owns one slot of ``t_tx + 2 r_max / c`` seconds (chirp plus
    the longest echo) rounded up to whole samples; slots follow back to back.
    ``carrier=False`` models the receiver after I/Q demodulation, where the
    carrier phase ``exp(-i w_c tau)`` is part of the complex reflectivity.
    """

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

    def __post_init__(self):
        for name in ("prf", "f_c", "t_tx", "f_s", "r_max", "gain"):
            if not getattr(self, name) > 0:
                raise ValueError(f"radar.{name} must be > 0, got {getattr(self, name)}")
        if self.bandwidth < 0:
            raise ValueError("radar.bandwidth must be >= 0")
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("radar.n_tx and radar.n_rx must be >= 1")
        if self.bandwidth > self.f_s:
            raise ValueError(f"f_s={self.f_s} violates Nyquist for complex sampling of bandwidth {self.bandwidth}")
        if self.n_tx * self.slot_duration > 1.0 / self.prf:
            raise ValueError(
                f"TDM schedule infeasible: n_tx * slot ({self.n_tx} x {self.slot_duration:.3e} s) "
                f"exceeds 1/PRF = {1.0 / self.prf:.3e} s"
            )

    @property
    def max_delay(self) -> float:
        return 2.0 * self.r_max / SPEED_OF_LIGHT

    @property
    def samples_per_slot(self) -> int:
        return int(np.ceil((self.t_tx + self.max_delay) * self.f_s - 1e-9))

    @property
    def slot_duration(self) -> float:
        return self.samples_per_slot / self.f_s

    @property
    def n_samples(self) -> int:
        """Samples per receiver per transmission (N_s)."""
        return self.n_tx * self.samples_per_slot

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.f_s

    def slot_slice(self, m: int) -> slice:
        n = self.samples_per_slot
        return slice(m * n, (m + 1) * n)

    def slot_start(self, m: int) -> float:
        return m * self.slot_duration

    def chirp(self, t: np.ndarray) -> np.ndarray:
        """Baseband linear up-chirp sweeping [-B/2, B/2] over [0, t_tx)."""
        t = np.asarray(t, dtype=float)
        k = self.bandwidth / self.t_tx
        on = (t >= 0) & (t < self.t_tx)
        phase = np.pi * k * t**2 - np.pi * self.bandwidth * t
        return np.where(on, self.gain * np.exp(1j * phase), 0.0)

    def delayed_signal(self, m: int, t: np.ndarray, r: np.ndarray) -> np.ndarray:
        """``u_m(t - tau(r)) exp(i w_c (t - tau(r)))`` on the outer grid (t, r)."""
        tau = 2.0 * np.asarray(r, dtype=float) / SPEED_OF_LIGHT
        td = np.asarray(t, dtype=float)[:, None] - tau[None, :]
        out = self.chirp(td - self.slot_start(m))
        if self.carrier:
            out = out * np.exp(2j * np.pi * self.f_c * td)
        return out

    def range_bandwidth_cycles(self) -> float:
        """Upper bound on oscillations of ``delayed_signal`` across [0, r_max]."""
        f = self.bandwidth / 2 + (self.f_c if self.carrier else 0.0)
        return f * 2 * self.r_max / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions along a line, in wavelengths."""

    tx_positions: tuple[float, ...]
    rx_positions: tuple[float, ...]

    def __post_init__(self):
        if len(self.tx_positions) == 0 or len(self.rx_positions) == 0:
            raise ValueError("array geometry needs at least one transmit and one receive element")
        object.__setattr__(self, "tx_positions", tuple(float(x) for x in self.tx_positions))
        object.__setattr__(self, "rx_positions", tuple(float(x) for x in self.rx_positions))

    @classmethod
    def virtual_ula(cls, n_tx: int, n_rx: int, rx_spacing: float = 0.5) -> "ArrayGeometry":
        """Receive ULA at ``rx_spacing``; transmitters spaced by the receive aperture.

        Both arrays are centred on the origin, which is the phase reference.
        """
        rx = rx_spacing * (np.arange(n_rx) - (n_rx - 1) / 2)
        tx = n_rx * rx_spacing * (np.arange(n_tx) - (n_tx - 1) / 2)
        return cls(tuple(tx), tuple(rx))

    @property
    def n_tx(self) -> int:
        return len(self.tx_positions)

    @property
    def n_rx(self) -> int:
        return len(self.rx_positions)

    @property
    def max_path(self) -> float:
        return float(np.max(np.abs(np.add.outer(self.rx_positions, self.tx_positions))))

    def steering(self, theta: np.ndarray) -> np.ndarray:
        """Plane-wave phase ``A^(j,m)(theta)``; shape (n_rx, n_tx, len(theta))."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        d = np.add.outer(np.asarray(self.rx_positions), np.asarray(self.tx_positions))
        return np.exp(2j * np.pi * d[:, :, None] * np.sin(theta)[None, None, :])


@dataclass(frozen=True)
class RadarSetup:
    radar: RadarConfig = field(default_factory=RadarConfig)
    geometry: ArrayGeometry | None = None

    def __post_init__(self):
        if self.geometry is None:
            object.__setattr__(self, "geometry", ArrayGeometry.virtual_ula(self.radar.n_tx, self.radar.n_rx))
        if self.geometry.n_tx != self.radar.n_tx or self.geometry.n_rx != self.radar.n_rx:
            raise ValueError("array geometry element counts disagree with radar n_tx/n_rx")
