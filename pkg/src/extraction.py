"""
Multipath component extraction from directional sweeps.

Each directional PDP goes through noise-floor estimation, peak search and
delay correction independently; the per-beam peaks are then screened for
antenna-sidelobe copies and merged into one PADP.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from model import (
    SPEED_OF_LIGHT,
    AntennaPattern,
    CorrectionParams,
    Direction,
    DirectionalPdp,
    LinkMeta,
    Mpc,
    Padp,
    SounderConfig,
    SweepRecord,
)
from validation import ValidationError, validate_positive

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD_DB = 6.0
DEFAULT_GATE_ANGLE_DEG = 20.0
SIDELOBE_SLACK_DB = 2.0

Peak = tuple[float, float]  # (tau ns, power dBm)


@dataclass(frozen=True)
class BeamPeaks:
    """Peaks found in one beam pair's PDP."""

    tx_dir: Direction
    rx_dir: Direction
    capture_time: float
    floor: float                    # dBm
    peaks: tuple[Peak, ...] = ()

    def with_peaks(self, peaks) -> "BeamPeaks":
        return BeamPeaks(self.tx_dir, self.rx_dir, self.capture_time, self.floor, tuple(peaks))


def default_gate_tau(config: SounderConfig) -> float:
    return 2.0 * config.delay_bin


def default_sidelobe_margin(pattern: AntennaPattern) -> float:
    """
    Peak-to-floor gain drop less SIDELOBE_SLACK_DB.

    A floor-gain copy of a path that clears the detection threshold picks up
    at most about 1.25 dB of noise power plus the noise ripple, so it still
    lands below the margin.
    """
    return pattern.peak_gain - pattern.floor_gain - SIDELOBE_SLACK_DB


def estimate_noise_floor(pdp: DirectionalPdp) -> float:
    """Median of the PDP samples in dBm."""
    return float(np.median(pdp.samples))


def detect_peaks(
    pdp: DirectionalPdp,
    floor: float,
    threshold: float = DEFAULT_THRESHOLD_DB,
    delay_bin: float = SounderConfig.delay_bin,
) -> list[Peak]:
    """
    Find local maxima standing more than ``threshold`` dB above ``floor``.

    A peak is strictly greater than both neighbours; a flat top counts once,
    at its first bin, and edge bins treat the missing neighbour as -inf.

    Args:
        pdp: Directional PDP
        floor: Noise floor in dBm
        threshold: Detection margin in dB (> 0)
        delay_bin: Delay resolution in ns

    Returns:
        (tau, power) pairs in delay order, tau on the delay grid

    Raises:
        ValidationError: If threshold is not positive
    """
    validate_positive("threshold", threshold)
    x = pdp.samples

    # Collapse runs of equal values so plateaus compare as one sample
    starts = np.flatnonzero(np.r_[True, x[1:] != x[:-1]])
    runs = x[starts]
    left = np.r_[-np.inf, runs[:-1]]
    right = np.r_[runs[1:], -np.inf]
    is_peak = (runs > left) & (runs > right) & (runs > floor + threshold)

    bins = starts[is_peak]
    return [(float(b * delay_bin), float(x[b])) for b in bins]


def delay_offset(
    tx_dir: Direction,
    rx_dir: Direction,
    capture_time: float,
    params: CorrectionParams,
) -> float:
    """
    Apparent extra delay in ns caused by horn rotation and clock drift.

    The phase centre sits ``phase_center_radius`` metres off the rotation
    axis on both ends, so pointing away from ``reference_az`` lengthens the
    path; drift adds ``drift_rate`` seconds per second of capture time.
    """
    if params.is_identity:
        return 0.0
    ref = params.reference_az
    geometry = (1.0 - math.cos(math.radians(tx_dir.az - ref))) + (1.0 - math.cos(math.radians(rx_dir.az - ref)))
    rotation = params.phase_center_radius / SPEED_OF_LIGHT * geometry * 1e9
    drift = params.drift_rate * capture_time * 1e9
    return rotation + drift


def correct_delays(
    peaks: Sequence[Peak],
    beam: tuple[Direction, Direction, float],
    params: CorrectionParams,
) -> list[Peak]:
    """
    Remove rotation and drift offsets from a beam's peak delays.

    Args:
        peaks: (tau, power) pairs
        beam: (tx_dir, rx_dir, capture_time)
        params: Correction parameters

    Returns:
        Corrected pairs; delays that would turn negative are clamped to 0
    """
    tx_dir, rx_dir, capture_time = beam
    shift = delay_offset(tx_dir, rx_dir, capture_time, params)
    if shift == 0.0:
        return list(peaks)
    return [(max(0.0, tau - shift), power) for tau, power in peaks]


def _flatten(beam_peaks: Sequence[BeamPeaks]):
    owner, taus, powers = [], [], []
    for i, beam in enumerate(beam_peaks):
        for tau, power in beam.peaks:
            owner.append(i)
            taus.append(tau)
            powers.append(power)
    return np.array(owner, dtype=int), np.array(taus, dtype=float), np.array(powers, dtype=float)


def reject_sidelobes(
    beam_peaks: Sequence[BeamPeaks],
    margin_db: Optional[float],
    gate_tau: float,
) -> list[BeamPeaks]:
    """
    Drop peaks that are sidelobe copies of a stronger path.

    A peak is dropped when some peak in any beam, with a delay within
    ``gate_tau``, is more than ``margin_db`` stronger.

    Args:
        beam_peaks: Corrected per-beam peaks
        margin_db: Allowed drop below the local strongest peak; None keeps all
        gate_tau: Delay window in ns

    Returns:
        Per-beam peaks with sidelobe copies removed
    """
    if margin_db is None:
        return list(beam_peaks)

    owner, taus, powers = _flatten(beam_peaks)
    if taus.size == 0:
        return list(beam_peaks)

    order = np.argsort(taus, kind="stable")
    sorted_taus = taus[order]
    sorted_powers = powers[order]
    lo = np.searchsorted(sorted_taus, sorted_taus - gate_tau, side="left")
    hi = np.searchsorted(sorted_taus, sorted_taus + gate_tau, side="right")
    local_max = np.array([sorted_powers[a:b].max() for a, b in zip(lo, hi)])

    keep = np.empty_like(order, dtype=bool)
    keep[order] = sorted_powers >= local_max - margin_db

    kept = [[] for _ in beam_peaks]
    for i in np.flatnonzero(keep):
        kept[owner[i]].append((float(taus[i]), float(powers[i])))

    dropped = int((~keep).sum())
    if dropped:
        logger.debug(f"Rejected {dropped} sidelobe peaks of {keep.size}")
    return [beam.with_peaks(p) for beam, p in zip(beam_peaks, kept)]


def consolidate_mpcs(
    beam_peaks: Sequence[BeamPeaks],
    config: SounderConfig,
    gate_tau: Optional[float] = None,
    gate_angle: float = DEFAULT_GATE_ANGLE_DEG,
    meta: Optional[LinkMeta] = None,
    noise_floor: Optional[float] = None,
) -> Padp:
    """
    Merge per-beam peaks seen through overlapping beams into unique MPCs.

    Peaks are taken strongest first; each one that has not been absorbed
    becomes an MPC and absorbs every remaining peak within ``gate_tau`` of
    its delay whose TX and RX directions are each within ``gate_angle``.
    The MPC keeps the strongest member's delay, power and angles.

    Raises:
        ValidationError: If gate_tau is below one delay bin
    """
    gate_tau = default_gate_tau(config) if gate_tau is None else gate_tau
    if gate_tau < config.delay_bin:
        raise ValidationError(f"gate_tau {gate_tau} ns is below one delay bin ({config.delay_bin} ns)")
    validate_positive("gate_angle", gate_angle)

    owner, taus, powers = _flatten(beam_peaks)
    if taus.size == 0:
        return Padp(mpcs=(), meta=meta, noise_floor=noise_floor)

    by_tau = np.argsort(taus, kind="stable")
    sorted_taus = taus[by_tau]
    # strongest first; ties go to the earlier delay, then to beam order
    by_power = np.lexsort((np.arange(taus.size), taus, -powers))

    absorbed = np.zeros(taus.size, dtype=bool)
    mpcs = []
    for i in by_power:
        if absorbed[i]:
            continue
        a = np.searchsorted(sorted_taus, taus[i] - gate_tau, side="left")
        b = np.searchsorted(sorted_taus, taus[i] + gate_tau, side="right")
        window = by_tau[a:b]
        beam = beam_peaks[owner[i]]
        near = np.array([
            beam_peaks[owner[j]].tx_dir.within(beam.tx_dir, gate_angle)
            and beam_peaks[owner[j]].rx_dir.within(beam.rx_dir, gate_angle)
            for j in window
        ], dtype=bool)
        absorbed[window[near]] = True
        absorbed[i] = True

        mpcs.append(Mpc(tau=float(taus[i]), power=float(powers[i]), aod=beam.tx_dir, aoa=beam.rx_dir))

    mpcs.sort(key=lambda m: m.tau)
    logger.debug(f"Consolidated {taus.size} beam peaks into {len(mpcs)} MPCs")
    return Padp(mpcs=tuple(mpcs), meta=meta, noise_floor=noise_floor)


def _beam_stage(pdp: DirectionalPdp, delay_bin: float, threshold: float, params: CorrectionParams) -> BeamPeaks:
    floor = estimate_noise_floor(pdp)
    peaks = detect_peaks(pdp, floor, threshold, delay_bin)
    tx_dir, rx_dir = pdp.beam
    corrected = correct_delays(peaks, (tx_dir, rx_dir, pdp.capture_time), params)
    return BeamPeaks(tx_dir, rx_dir, pdp.capture_time, floor, tuple(corrected))


def extract_beam_peaks(
    rec: SweepRecord,
    params: CorrectionParams = CorrectionParams(),
    threshold: float = DEFAULT_THRESHOLD_DB,
    jobs: int = 1,
) -> list[BeamPeaks]:
    """
    Run floor estimation, peak search and delay correction on every beam pair.

    Args:
        rec: Validated sweep
        params: Delay correction parameters
        threshold: Detection margin in dB
        jobs: Worker threads; results are in sweep order either way

    Returns:
        One BeamPeaks per PDP, in sweep order
    """
    validate_positive("threshold", threshold)
    delay_bin = rec.config.delay_bin

    if jobs > 1 and len(rec.pdps) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda pdp: _beam_stage(pdp, delay_bin, threshold, params), rec.pdps))
    return [_beam_stage(pdp, delay_bin, threshold, params) for pdp in rec.pdps]


def resolve_gate_angle(grid, gate_angle: Optional[float]) -> float:
    """
    Angular gate for a grid: the given value, or 20 degrees widened to the
    grid's widest azimuth gap. The gap across the 180 degree seam counts, so
    beams on either side of it still merge (24.04 degrees on the default grid).

    Raises:
        ValidationError: If an explicit gate is narrower than the azimuth step
    """
    multi_az = len(grid.azimuths) > 1
    if gate_angle is None:
        return max(DEFAULT_GATE_ANGLE_DEG, grid.az_max_gap) if multi_az else DEFAULT_GATE_ANGLE_DEG
    if multi_az and gate_angle < grid.az_step - 1e-9:
        raise ValidationError(
            f"gate_angle {gate_angle} deg is narrower than the grid azimuth step {grid.az_step:.4f} deg"
        )
    if multi_az and gate_angle < grid.az_max_gap - 1e-9:
        logger.warning(
            f"gate_angle {gate_angle} deg is narrower than the {grid.az_max_gap:.2f} deg azimuth gap; "
            f"copies of a path on both sides of that gap stay separate"
        )
    return gate_angle


def extract_padp(
    rec: SweepRecord,
    params: CorrectionParams = CorrectionParams(),
    threshold: float = DEFAULT_THRESHOLD_DB,
    gate_tau: Optional[float] = None,
    gate_angle: Optional[float] = None,
    sidelobe_rejection: bool = True,
    sidelobe_margin: Optional[float] = None,
    jobs: int = 1,
) -> Padp:
    """
    Extract the PADP of a sweep.

    Args:
        rec: Validated sweep
        params: Delay correction parameters (zero = already corrected data)
        threshold: Detection margin above each beam's median floor, in dB
        gate_tau: Consolidation delay gate in ns (default two delay bins)
        gate_angle: Consolidation angle gate in deg (see resolve_gate_angle)
        sidelobe_rejection: Whether to screen antenna-sidelobe copies
        sidelobe_margin: Screening margin in dB (default from the pattern)
        jobs: Worker threads for the per-beam stages

    Returns:
        Padp with the sweep's metadata and the median of per-beam floors
    """
    rec.validate(require_pdps=True)
    gate_tau = default_gate_tau(rec.config) if gate_tau is None else gate_tau
    gate_angle = resolve_gate_angle(rec.grid, gate_angle)

    beams = extract_beam_peaks(rec, params, threshold, jobs)
    if sidelobe_rejection:
        margin = default_sidelobe_margin(rec.pattern) if sidelobe_margin is None else sidelobe_margin
        beams = reject_sidelobes(beams, margin, gate_tau)

    noise_floor = float(np.median([b.floor for b in beams]))
    padp = consolidate_mpcs(beams, rec.config, gate_tau, gate_angle, meta=rec.meta, noise_floor=noise_floor)

    logger.info(f"Extracted {len(padp)} MPCs from {rec.meta.link_id} ({len(beams)} beam pairs)")
    if not padp.mpcs:
        logger.warning(f"No MPCs above {threshold} dB threshold in {rec.meta.link_id}")
    return padp
