"""
Domain types and physical helpers shared by every stage of the pipeline.

Powers are carried in dBm at the edges (files, reports) and converted to
linear milliwatts for any summation. Angles are degrees, delays nanoseconds,
distances metres.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

import numpy as np

from validation import (
    DomainError,
    SpecError,
    ValidationError,
    validate_axis,
    validate_finite,
    validate_link_id,
    validate_non_negative,
    validate_positive,
)

SPEED_OF_LIGHT = 299_792_458.0  # m/s
ANGLE_TOL = 1e-6                # deg, slack on angle comparisons

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# dB / linear conversions
# ---------------------------------------------------------------------------

def db_from_linear(p_mw: ArrayLike) -> ArrayLike:
    """
    Convert power in mW to dBm.

    Raises:
        DomainError: If any value is not strictly positive
    """
    arr = np.asarray(p_mw, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"linear power must be positive, got {p_mw}")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def linear_from_db(p_dbm: ArrayLike) -> ArrayLike:
    """Convert power in dBm to mW."""
    out = np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def fspl(freq: float, dist: float) -> float:
    """
    Free-space path loss in dB: 20·log10(4π·d·f/c).

    Args:
        freq: Carrier frequency in Hz (> 0)
        dist: Distance in m (> 0)

    Raises:
        DomainError: If either argument is not positive
    """
    if not (freq > 0 and dist > 0):
        raise DomainError(f"fspl needs positive frequency and distance, got f={freq}, d={dist}")
    return 20.0 * math.log10(4.0 * math.pi * dist * freq / SPEED_OF_LIGHT)


def wrap_degrees(angle: ArrayLike) -> ArrayLike:
    """Wrap an angle difference to [-180, 180)."""
    out = (np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Sounder and antenna
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SounderConfig:
    carrier_freq: float = 28e9          # Hz
    bandwidth: float = 2e9              # Hz
    sample_rate: float = 3.072e9        # samples/s
    delay_bin: float = 0.651            # ns
    tx_power: float = -10.0             # dBm
    dynamic_range: float = 60.0         # dB
    max_measurable_pl: float = 185.0    # dB
    sequence_length: int = 2048

    def __post_init__(self):
        for name in ("carrier_freq", "bandwidth", "sample_rate", "delay_bin",
                     "dynamic_range", "max_measurable_pl"):
            validate_positive(name, getattr(self, name))
        validate_finite("tx_power", self.tx_power)

        if int(self.sequence_length) != self.sequence_length or self.sequence_length < 1:
            raise ValidationError(f"sequence_length must be a positive integer, got {self.sequence_length}")

        # Oversampling by two: one delay bin spans two ADC samples
        expected_bin = 2.0 / self.sample_rate * 1e9
        if abs(self.delay_bin - expected_bin) > 0.01 * expected_bin:
            raise ValidationError(
                f"delay_bin {self.delay_bin} ns inconsistent with sample_rate "
                f"{self.sample_rate} (expected ~{expected_bin:.4f} ns)"
            )


@dataclass(frozen=True)
class AntennaPattern:
    peak_gain: float = 17.0     # dBi
    hpbw_az: float = 24.0       # deg
    hpbw_el: float = 26.0       # deg
    floor_gain: float = -10.0   # dBi

    def __post_init__(self):
        validate_finite("peak_gain", self.peak_gain)
        validate_finite("floor_gain", self.floor_gain)
        if self.peak_gain <= self.floor_gain:
            raise ValidationError("peak_gain must exceed floor_gain")
        for name in ("hpbw_az", "hpbw_el"):
            value = validate_finite(name, getattr(self, name))
            if not 0 < value < 360:
                raise ValidationError(f"{name} must lie in (0, 360), got {value}")


def antenna_gain(pattern: AntennaPattern, offset_az: ArrayLike, offset_el: ArrayLike) -> ArrayLike:
    """
    Gain of a horn at an angular offset from boresight, in dBi.

    Gaussian main lobe (quadratic in dB, -3 dB at half beamwidth in each
    plane) clipped at the pattern's floor gain. Works on scalars and arrays.
    """
    d_az = wrap_degrees(offset_az)
    d_el = wrap_degrees(offset_el)
    loss = 12.0 * ((np.asarray(d_az) / pattern.hpbw_az) ** 2 + (np.asarray(d_el) / pattern.hpbw_el) ** 2)
    gain = np.maximum(pattern.floor_gain, pattern.peak_gain - loss)
    return float(gain) if np.ndim(gain) == 0 else gain


# ---------------------------------------------------------------------------
# Directions and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Direction:
    az: float   # deg, [-180, 180)
    el: float   # deg, [-90, 90]

    def __post_init__(self):
        az = validate_finite("az", self.az)
        el = validate_finite("el", self.el)
        if not -180.0 <= az < 180.0:
            az = wrap_degrees(az)
        if not -90.0 <= el <= 90.0:
            raise ValidationError(f"elevation must lie in [-90, 90], got {el}")
        object.__setattr__(self, "az", az)
        object.__setattr__(self, "el", el)

    def offset_to(self, other: "Direction") -> tuple[float, float]:
        """Absolute (azimuth, elevation) separation in degrees."""
        return abs(wrap_degrees(other.az - self.az)), abs(other.el - self.el)

    def within(self, other: "Direction", gate: float) -> bool:
        """True when both the azimuth and elevation separations are <= gate (within ANGLE_TOL)."""
        d_az, d_el = self.offset_to(other)
        return d_az <= gate + ANGLE_TOL and d_el <= gate + ANGLE_TOL


def _default_azimuths() -> tuple[float, ...]:
    return tuple(round(float(a), 4) for a in np.linspace(-167.98, 167.98, 19))


@dataclass(frozen=True)
class AngleGrid:
    azimuths: tuple[float, ...] = field(default_factory=_default_azimuths)
    elevations: tuple[float, ...] = (-20.0, 0.0, 20.0)

    def __post_init__(self):
        object.__setattr__(
            self, "azimuths", validate_axis("azimuths", self.azimuths, -180.0, 180.0, high_inclusive=False)
        )
        object.__setattr__(
            self, "elevations", validate_axis("elevations", self.elevations, -90.0, 90.0)
        )

    @classmethod
    def default(cls) -> "AngleGrid":
        return cls()

    @property
    def az_step(self) -> float:
        """Smallest azimuth spacing (360 for a single-azimuth grid)."""
        if len(self.azimuths) < 2:
            return 360.0
        return float(np.min(np.diff(self.azimuths)))

    @property
    def az_max_gap(self) -> float:
        """
        Widest spacing between neighbouring azimuths, the pair across the
        180 degree seam included. Gaps of twice the smallest step or more are
        holes in a sector scan rather than neighbour spacings and are skipped.
        """
        if len(self.azimuths) < 2:
            return 360.0
        step = self.az_step
        gaps = [*np.diff(self.azimuths), 360.0 - (self.azimuths[-1] - self.azimuths[0])]
        return float(max(g for g in gaps if g < 2.0 * step))

    def directions(self) -> tuple[Direction, ...]:
        """All grid directions, elevation-major."""
        return tuple(Direction(az, el) for el in self.elevations for az in self.azimuths)

    def __len__(self) -> int:
        return len(self.azimuths) * len(self.elevations)

    def index_of(self, direction: Direction, tol: float = 1e-6) -> Optional[int]:
        """Position of a direction in ``directions()``, or None when off-grid."""
        az = np.asarray(self.azimuths)
        el = np.asarray(self.elevations)
        az_hits = np.flatnonzero(np.abs(wrap_degrees(az - direction.az)) <= tol)
        el_hits = np.flatnonzero(np.abs(el - direction.el) <= tol)
        if az_hits.size == 0 or el_hits.size == 0:
            return None
        return int(el_hits[0]) * len(self.azimuths) + int(az_hits[0])

    def contains(self, direction: Direction, tol: float = 1e-6) -> bool:
        return self.index_of(direction, tol) is not None


# ---------------------------------------------------------------------------
# Link metadata and sweeps
# ---------------------------------------------------------------------------

class Scenario(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"
    NLOS_GLASS = "NLOS_GLASS"

    @property
    def pool(self) -> "Scenario":
        """Fitting pool: glass-obstructed links count as NLOS."""
        return Scenario.NLOS if self is Scenario.NLOS_GLASS else self


def parse_scenario(value) -> Scenario:
    """
    Convert a label such as "nlos-glass" or "NLOS_GLASS" to a Scenario.

    Raises:
        ValidationError: If the label names no known scenario
    """
    if isinstance(value, Scenario):
        return value
    label = str(value).strip().upper().replace("-", "_")
    try:
        return Scenario(label)
    except ValueError:
        raise ValidationError(
            f"Unknown scenario '{value}'. Valid options: {', '.join(s.value for s in Scenario)}"
        )


@dataclass(frozen=True)
class LinkMeta:
    link_id: str
    distance: float                 # m
    scenario: Scenario
    tx_id: str = ""
    rx_id: str = ""
    tx_height: float = 1.8          # m
    rx_height: float = 1.5          # m
    floor_tx: int = 0
    floor_rx: int = 0

    def __post_init__(self):
        object.__setattr__(self, "link_id", validate_link_id(self.link_id))
        for name in ("tx_id", "rx_id"):
            value = getattr(self, name)
            if value:
                object.__setattr__(self, name, validate_link_id(value))
        object.__setattr__(self, "scenario", parse_scenario(self.scenario))
        validate_positive("distance", self.distance)
        validate_positive("tx_height", self.tx_height)
        validate_positive("rx_height", self.rx_height)
        for name in ("floor_tx", "floor_rx"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ValidationError(f"{name} must be an integer")
            object.__setattr__(self, name, int(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class DirectionalPdp:
    tx_dir: Direction
    rx_dir: Direction
    capture_time: float             # s since sweep start
    samples: np.ndarray             # dBm per delay bin

    def __post_init__(self):
        validate_non_negative("capture_time", self.capture_time)
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("PDP samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("PDP samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def beam(self) -> tuple[Direction, Direction]:
        return self.tx_dir, self.rx_dir

    def __eq__(self, other):
        if not isinstance(other, DirectionalPdp):
            return NotImplemented
        return (
            self.tx_dir == other.tx_dir
            and self.rx_dir == other.rx_dir
            and self.capture_time == other.capture_time
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, eq=False)
class SweepRecord:
    config: SounderConfig
    pattern: AntennaPattern
    grid: AngleGrid
    meta: LinkMeta
    pdps: tuple[DirectionalPdp, ...]

    def __post_init__(self):
        object.__setattr__(self, "pdps", tuple(self.pdps))
        self.validate(require_pdps=False)

    @property
    def power_guard(self) -> float:
        """Lowest PDP value in dBm the record may hold."""
        return (self.config.tx_power + 2 * self.pattern.peak_gain
                - self.config.max_measurable_pl - 20.0)

    @property
    def n_bins(self) -> int:
        return self.pdps[0].samples.size if self.pdps else 0

    def validate(self, require_pdps: bool = True) -> None:
        """
        Check every sweep invariant.

        Raises:
            ValidationError: On off-grid directions, duplicate beam pairs,
                mismatched PDP lengths or implausibly low power
        """
        if require_pdps and not self.pdps:
            raise ValidationError("sweep has no PDPs")

        seen = set()
        length = None
        guard = self.power_guard
        for i, pdp in enumerate(self.pdps):
            for side, direction in (("tx", pdp.tx_dir), ("rx", pdp.rx_dir)):
                if not self.grid.contains(direction):
                    raise ValidationError(
                        f"PDP {i}: {side} direction ({direction.az}, {direction.el}) is not on the grid"
                    )
            key = (self.grid.index_of(pdp.tx_dir), self.grid.index_of(pdp.rx_dir))
            if key in seen:
                raise ValidationError(f"PDP {i}: duplicate beam pair {key}")
            seen.add(key)

            if length is None:
                length = pdp.samples.size
            elif pdp.samples.size != length:
                raise ValidationError(
                    f"PDP {i}: length {pdp.samples.size} differs from {length}"
                )
            if pdp.samples.min() < guard:
                raise ValidationError(
                    f"PDP {i}: value {pdp.samples.min():.4f} dBm below guard {guard:.4f} dBm"
                )

    def __eq__(self, other):
        if not isinstance(other, SweepRecord):
            return NotImplemented
        return (
            self.config == other.config
            and self.pattern == other.pattern
            and self.grid == other.grid
            and self.meta == other.meta
            and self.pdps == other.pdps
        )


# ---------------------------------------------------------------------------
# Multipath components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mpc:
    tau: float          # ns
    power: float        # dBm
    aod: Direction
    aoa: Direction

    def __post_init__(self):
        validate_non_negative("tau", self.tau)
        power = validate_finite("power", self.power)
        if power <= -200.0:
            raise ValidationError(f"MPC power must exceed -200 dBm, got {power}")


@dataclass(frozen=True)
class Padp:
    mpcs: tuple[Mpc, ...] = ()
    meta: Optional[LinkMeta] = None
    noise_floor: Optional[float] = None     # dBm

    def __post_init__(self):
        mpcs = tuple(self.mpcs)
        taus = [m.tau for m in mpcs]
        if any(b < a for a, b in zip(taus, taus[1:])):
            raise ValidationError("MPCs must be sorted by delay")
        object.__setattr__(self, "mpcs", mpcs)
        if self.noise_floor is not None:
            object.__setattr__(self, "noise_floor", validate_finite("noise_floor", self.noise_floor))

    def __len__(self) -> int:
        return len(self.mpcs)

    def __iter__(self) -> Iterator[Mpc]:
        return iter(self.mpcs)

    @property
    def taus(self) -> np.ndarray:
        return np.array([m.tau for m in self.mpcs], dtype=float)

    @property
    def powers(self) -> np.ndarray:
        return np.array([m.power for m in self.mpcs], dtype=float)


@dataclass(frozen=True)
class CorrectionParams:
    phase_center_radius: float = 0.0    # m
    drift_rate: float = 0.0             # s/s
    reference_az: float = 0.0           # deg

    def __post_init__(self):
        validate_non_negative("phase_center_radius", self.phase_center_radius)
        validate_finite("drift_rate", self.drift_rate)
        validate_finite("reference_az", self.reference_az)

    @property
    def is_identity(self) -> bool:
        return self.phase_center_radius == 0 and self.drift_rate == 0


# ---------------------------------------------------------------------------
# Metrics and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathLossSample:
    link_id: str
    distance: float     # m
    scenario: Scenario
    path_loss: float    # dB

    def __post_init__(self):
        object.__setattr__(self, "link_id", validate_link_id(self.link_id))
        object.__setattr__(self, "scenario", parse_scenario(self.scenario))
        validate_positive("distance", self.distance)
        pl = validate_finite("path_loss", self.path_loss)
        if not 0 < pl < 250:
            raise ValidationError(f"path_loss must lie in (0, 250) dB, got {pl}")


@dataclass(frozen=True)
class PathLoss:
    db: float
    suspicious: bool = False

    def __float__(self) -> float:
        return self.db


@dataclass(frozen=True)
class DelayStats:
    tau_avg: float      # ns
    tau_rms: float      # ns

    def __post_init__(self):
        validate_finite("tau_avg", self.tau_avg)
        validate_non_negative("tau_rms", self.tau_rms)


@dataclass(frozen=True)
class CimFit:
    n: float
    sigma: float        # dB
    d0: float = 1.0     # m
    fspl_d0: float = float("nan")
    freq: float = 28e9  # Hz
    n_points: int = 0

    def __post_init__(self):
        validate_finite("n", self.n)
        validate_non_negative("sigma", self.sigma)
        validate_positive("d0", self.d0)
        validate_positive("freq", self.freq)
        expected = fspl(self.freq, self.d0)
        if math.isnan(self.fspl_d0):
            object.__setattr__(self, "fspl_d0", expected)
        elif not math.isclose(self.fspl_d0, expected, rel_tol=1e-9, abs_tol=1e-9):
            raise ValidationError(
                f"fspl_d0 {self.fspl_d0} does not match fspl(freq, d0) = {expected}"
            )

    @classmethod
    def from_params(cls, n: float, sigma: float = 0.0, d0: float = 1.0, freq: float = 28e9) -> "CimFit":
        return cls(n=n, sigma=sigma, d0=d0, freq=freq)


@dataclass(frozen=True)
class FimFit:
    alpha: float        # dB
    beta: float
    sigma: float        # dB
    n_points: int = 0

    def __post_init__(self):
        validate_finite("alpha", self.alpha)
        validate_finite("beta", self.beta)
        validate_non_negative("sigma", self.sigma)

    @classmethod
    def from_params(cls, alpha: float, beta: float, sigma: float = 0.0) -> "FimFit":
        return cls(alpha=alpha, beta=beta, sigma=sigma)


PathLossModel = Union[CimFit, FimFit]


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one synthetic link."""

    distance: float                         # m
    scenario: Scenario
    n_mpcs: int
    pl_model: PathLossModel
    delay_spread_target: float              # ns
    power_decay: Optional[float] = None     # dB/ns; None derives it from the target
    seed: int = 0
    link_id: str = "link"
    tx_id: str = ""
    rx_id: str = ""
    floor_tx: int = 0
    floor_rx: int = 0
    nlos_excess_delay: float = 5.0          # ns, mean of the NLOS first-arrival lag
    mpc_sigma_db: float = 3.0               # per-MPC lognormal spread around the decay
    min_separation: float = 0.0             # ns between consecutive delays

    def __post_init__(self):
        object.__setattr__(self, "scenario", parse_scenario(self.scenario))
        try:
            validate_positive("distance", self.distance)
            validate_non_negative("delay_spread_target", self.delay_spread_target)
            validate_non_negative("nlos_excess_delay", self.nlos_excess_delay)
            validate_non_negative("mpc_sigma_db", self.mpc_sigma_db)
            validate_non_negative("min_separation", self.min_separation)
            if self.power_decay is not None:
                validate_positive("power_decay", self.power_decay)
        except ValidationError as e:
            raise SpecError(str(e)) from e

        if int(self.n_mpcs) != self.n_mpcs or self.n_mpcs < 1:
            raise SpecError(f"n_mpcs must be a positive integer, got {self.n_mpcs}")
        if self.n_mpcs == 1 and self.delay_spread_target > 0:
            raise SpecError("a single MPC cannot have a positive delay spread")
        if self.n_mpcs > 1 and self.delay_spread_target <= 0:
            raise SpecError("delay_spread_target must be positive when n_mpcs > 1")
        if not isinstance(self.pl_model, (CimFit, FimFit)):
            raise SpecError(f"pl_model must be a CimFit or FimFit, got {type(self.pl_model).__name__}")

    @property
    def meta(self) -> LinkMeta:
        return LinkMeta(
            link_id=self.link_id,
            distance=self.distance,
            scenario=self.scenario,
            tx_id=self.tx_id,
            rx_id=self.rx_id,
            floor_tx=self.floor_tx,
            floor_rx=self.floor_rx,
        )
