"""
Channel metrics computed from extracted PADPs: omnidirectional received
power, path loss, delay statistics and empirical CDFs.
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from extraction import BeamPeaks
from fitting import predict
from model import (
    AngleGrid,
    AntennaPattern,
    DelayStats,
    Padp,
    PathLoss,
    PathLossModel,
    PathLossSample,
    Scenario,
    SounderConfig,
    db_from_linear,
    parse_scenario,
)
from validation import InsufficientDataError, NoSignalError, ValidationError, validate_finite

logger = logging.getLogger(__name__)

PL_UPPER_BOUND = 250.0


def _sum_dbm(powers: np.ndarray) -> float:
    # factor out the strongest term so tiny powers do not underflow
    top = float(np.max(powers))
    return top + float(db_from_linear(np.sum(np.power(10.0, (powers - top) / 10.0))))


def omni_rx_power(padp: Padp) -> float:
    """
    Omnidirectional received power in dBm: linear sum over the MPCs.

    Raises:
        NoSignalError: If the PADP is empty
    """
    if not padp.mpcs:
        raise NoSignalError("cannot compute received power of an empty PADP")
    return _sum_dbm(padp.powers)


def omni_rx_power_raw(beam_peaks: Sequence[BeamPeaks]) -> float:
    """
    Received power summed over every raw beam-pair detection, without
    removing the copies one path leaves in overlapping beams.

    Raises:
        NoSignalError: If no beam has a peak
    """
    powers = np.array([p for beam in beam_peaks for _, p in beam.peaks], dtype=float)
    if powers.size == 0:
        raise NoSignalError("no beam-pair detections to sum")
    return _sum_dbm(powers)


def path_loss(
    tx_power: float,
    p_rx: float,
    g_tx: float,
    g_rx: float,
    max_measurable_pl: float = SounderConfig.max_measurable_pl,
) -> PathLoss:
    """
    Path loss in dB from transmit power, received power and antenna gains.

    Results at or below 0 dB, above the sounder's measurable range or at
    250 dB and beyond are returned with ``suspicious`` set.

    Raises:
        ValidationError: If an input is not finite
    """
    for name, value in (("tx_power", tx_power), ("p_rx", p_rx), ("g_tx", g_tx), ("g_rx", g_rx)):
        validate_finite(name, value)

    pl = tx_power - p_rx + g_tx + g_rx
    suspicious = pl <= 0.0 or pl > max_measurable_pl or pl >= PL_UPPER_BOUND
    if suspicious:
        logger.warning(f"Suspicious path loss {pl:.2f} dB (measurable range up to {max_measurable_pl} dB)")
    return PathLoss(db=float(pl), suspicious=bool(suspicious))


def padp_path_loss(
    padp: Padp,
    config: SounderConfig,
    pattern: AntennaPattern,
    beam_peaks: Optional[Sequence[BeamPeaks]] = None,
) -> PathLossSample:
    """
    Path-loss sample of one link, using both horns' peak gains.

    Args:
        padp: Extracted PADP with link metadata
        config: Sounder configuration (transmit power, measurable range)
        pattern: Horn pattern
        beam_peaks: When given, received power is the raw sum over these

    Raises:
        NoSignalError: If there is no power to sum
        ValidationError: If metadata is missing or the loss is outside (0, 250) dB
    """
    if padp.meta is None:
        raise ValidationError("PADP has no link metadata")
    p_rx = omni_rx_power_raw(beam_peaks) if beam_peaks is not None else omni_rx_power(padp)
    pl = path_loss(config.tx_power, p_rx, pattern.peak_gain, pattern.peak_gain, config.max_measurable_pl)
    if pl.suspicious:
        logger.warning(f"Link {padp.meta.link_id}: path loss {pl.db:.2f} dB flagged as suspicious")
    return PathLossSample(
        link_id=padp.meta.link_id,
        distance=padp.meta.distance,
        scenario=padp.meta.scenario,
        path_loss=pl.db,
    )


def delay_stats(padp: Padp) -> DelayStats:
    """
    Power-weighted mean delay and RMS delay spread.

    Raises:
        NoSignalError: If the PADP is empty
    """
    if not padp.mpcs:
        raise NoSignalError("cannot compute delay statistics of an empty PADP")

    taus = padp.taus
    powers = padp.powers
    weights = np.power(10.0, (powers - powers.max()) / 10.0)
    total = weights.sum()

    tau_avg = float(np.sum(weights * taus) / total)
    second = float(np.sum(weights * (taus - tau_avg) ** 2) / total)
    tau_avg = min(max(tau_avg, float(taus.min())), float(taus.max()))
    return DelayStats(tau_avg=tau_avg, tau_rms=float(np.sqrt(max(second, 0.0))))


def empirical_cdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """
    Right-continuous empirical CDF: the i-th smallest value gets i/N.

    Raises:
        InsufficientDataError: If no values are given
        ValidationError: If a value is not finite
    """
    arr = np.sort(np.array([validate_finite("value", v) for v in values], dtype=float))
    if arr.size == 0:
        raise InsufficientDataError("empirical CDF needs at least one value")
    probs = np.arange(1, arr.size + 1) / arr.size
    return list(zip(arr.tolist(), probs.tolist()))


def fit_pool(scenario) -> Scenario:
    """Scenario pool a sample is fitted in (glass-obstructed links join NLOS)."""
    return parse_scenario(scenario).pool


def angular_power_map(
    padp: Padp,
    grid: AngleGrid,
    tx_el: float = 0.0,
    rx_el: float = 0.0,
) -> pd.DataFrame:
    """
    PADP power over TX azimuth (rows) and RX azimuth (columns).

    Each MPC is snapped to its nearest grid direction on both ends; MPCs whose
    snapped elevations match ``tx_el``/``rx_el`` are summed per cell. Empty
    cells hold -inf.
    """
    azimuths = np.asarray(grid.azimuths)
    elevations = np.asarray(grid.elevations)
    want_tx = elevations[np.argmin(np.abs(elevations - tx_el))]
    want_rx = elevations[np.argmin(np.abs(elevations - rx_el))]

    linear = np.zeros((azimuths.size, azimuths.size))
    for mpc in padp.mpcs:
        if elevations[np.argmin(np.abs(elevations - mpc.aod.el))] != want_tx:
            continue
        if elevations[np.argmin(np.abs(elevations - mpc.aoa.el))] != want_rx:
            continue
        i = int(np.argmin(np.abs((azimuths - mpc.aod.az + 180.0) % 360.0 - 180.0)))
        j = int(np.argmin(np.abs((azimuths - mpc.aoa.az + 180.0) % 360.0 - 180.0)))
        linear[i, j] += 10.0 ** (mpc.power / 10.0)

    with np.errstate(divide="ignore"):
        dbm = np.where(linear > 0, 10.0 * np.log10(np.where(linear > 0, linear, 1.0)), -np.inf)
    return pd.DataFrame(
        dbm,
        index=pd.Index(azimuths, name="tx_az"),
        columns=pd.Index(azimuths, name="rx_az"),
    )


def scenario_offsets(samples: Sequence[PathLossSample], fit: PathLossModel) -> pd.DataFrame:
    """
    Mean residual per scenario label against a pooled fit.

    Shows, for example, how much less glass-obstructed NLOS links lose than
    wall-obstructed ones under the common NLOS model.

    Returns:
        DataFrame with columns scenario, n_points, mean_residual_db
    """
    rows = []
    for label in Scenario:
        group = [s for s in samples if s.scenario is label]
        if not group:
            continue
        residuals = [s.path_loss - float(predict(fit, s.distance)) for s in group]
        rows.append([label.value, len(group), float(np.mean(residuals))])
    return pd.DataFrame(rows, columns=["scenario", "n_points", "mean_residual_db"])
