"""
Least-squares path-loss models.

CIM: close-in free-space reference model, PL = FSPL(d0) + 10·n·log10(d/d0).
FIM: floating-intercept model, PL = alpha + 10·beta·log10(d).
Shadowing sigma is the RMS residual with divisor K (number of samples).
"""

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from model import (
    CimFit,
    FimFit,
    PathLossModel,
    PathLossSample,
    Scenario,
    fspl,
)
from validation import DomainError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

MODEL_CHOICES = ("cim", "fim", "both")


def _arrays(samples: Sequence[PathLossSample]) -> tuple[np.ndarray, np.ndarray]:
    if len(samples) < 2:
        raise InsufficientDataError(f"need at least 2 path-loss samples, got {len(samples)}")
    d = np.array([s.distance for s in samples], dtype=float)
    pl = np.array([s.path_loss for s in samples], dtype=float)
    if np.unique(d).size < 2:
        raise InsufficientDataError("need at least two distinct distances")
    return d, pl


def fit_cim(samples: Sequence[PathLossSample], d0: float = 1.0, freq: float = 28e9) -> CimFit:
    """
    Fit the path-loss exponent of the close-in model.

    Args:
        samples: Path-loss samples
        d0: Reference distance in m
        freq: Carrier frequency in Hz

    Returns:
        CimFit with n, sigma and the number of samples used

    Raises:
        InsufficientDataError: Fewer than 2 samples or one distinct distance
        DomainError: A sample lies closer than d0
    """
    d, pl = _arrays(samples)
    if np.any(d < d0):
        raise DomainError(f"all distances must be >= d0 = {d0} m (min {d.min()} m)")

    fspl_d0 = fspl(freq, d0)
    a = pl - fspl_d0
    b = 10.0 * np.log10(d / d0)
    n = float(np.dot(a, b) / np.dot(b, b))
    sigma = float(np.sqrt(np.mean((a - n * b) ** 2)))

    logger.info(f"CIM fit over {d.size} samples: n={n:.4f}, sigma={sigma:.3f} dB")
    return CimFit(n=n, sigma=sigma, d0=d0, fspl_d0=fspl_d0, freq=freq, n_points=int(d.size))


def fit_fim(samples: Sequence[PathLossSample]) -> FimFit:
    """
    Ordinary least-squares fit of PL against 10·log10(d).

    Raises:
        InsufficientDataError: Fewer than 2 samples or one distinct distance
    """
    d, pl = _arrays(samples)
    x = 10.0 * np.log10(d)
    x_mean = x.mean()
    pl_mean = pl.mean()
    beta = float(np.dot(x - x_mean, pl - pl_mean) / np.dot(x - x_mean, x - x_mean))
    alpha = float(pl_mean - beta * x_mean)
    sigma = float(np.sqrt(np.mean((pl - alpha - beta * x) ** 2)))

    logger.info(f"FIM fit over {d.size} samples: alpha={alpha:.3f} dB, beta={beta:.4f}, sigma={sigma:.3f} dB")
    return FimFit(alpha=alpha, beta=beta, sigma=sigma, n_points=int(d.size))


def predict_cim(fit: CimFit, d):
    """
    CIM prediction in dB at distance(s) ``d``.

    Raises:
        DomainError: If any distance is below the fit's d0
    """
    arr = np.asarray(d, dtype=float)
    if np.any(~(arr >= fit.d0)):
        raise DomainError(f"CIM prediction needs d >= d0 = {fit.d0} m, got {d}")
    out = fit.fspl_d0 + 10.0 * fit.n * np.log10(arr / fit.d0)
    return float(out) if out.ndim == 0 else out


def predict_fim(fit: FimFit, d):
    """
    FIM prediction in dB at distance(s) ``d``.

    Raises:
        DomainError: If any distance is not positive
    """
    arr = np.asarray(d, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"FIM prediction needs d > 0, got {d}")
    out = fit.alpha + 10.0 * fit.beta * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def predict(fit: PathLossModel, d):
    """Prediction under either model type."""
    if isinstance(fit, CimFit):
        return predict_cim(fit, d)
    if isinstance(fit, FimFit):
        return predict_fim(fit, d)
    raise ValidationError(f"not a path-loss model: {fit!r}")


def model_name(fit: PathLossModel) -> str:
    return "CIM" if isinstance(fit, CimFit) else "FIM"


def fit_residuals(fit: PathLossModel, samples: Sequence[PathLossSample]) -> pd.DataFrame:
    """
    Per-sample residuals (measured minus predicted) under a fitted model.

    Returns:
        DataFrame with columns link_id, scenario, distance_m, path_loss_db,
        predicted_db, residual_db
    """
    rows = []
    for s in samples:
        predicted = float(predict(fit, s.distance))
        rows.append([s.link_id, s.scenario.value, s.distance, s.path_loss, predicted, s.path_loss - predicted])
    return pd.DataFrame(
        rows,
        columns=["link_id", "scenario", "distance_m", "path_loss_db", "predicted_db", "residual_db"],
    )


def fit_by_scenario(
    samples: Sequence[PathLossSample],
    model: str = "both",
    d0: float = 1.0,
    freq: float = 28e9,
    split_glass: bool = False,
    skip_insufficient: bool = False,
) -> dict[str, dict[str, PathLossModel]]:
    """
    Fit each scenario pool separately.

    Glass-obstructed links join the NLOS pool unless ``split_glass`` is set,
    in which case every label is fitted on its own.

    Args:
        samples: Path-loss samples of any scenarios
        model: "cim", "fim" or "both"
        d0: CIM reference distance in m
        freq: Carrier frequency in Hz
        split_glass: Fit NLOS_GLASS separately from NLOS
        skip_insufficient: Leave out pools that cannot be fitted instead of raising

    Returns:
        {pool label: {"CIM": CimFit, "FIM": FimFit}} for the requested models

    Raises:
        ValidationError: Unknown model name
        InsufficientDataError: A pool cannot be fitted and skip_insufficient is False
    """
    if model not in MODEL_CHOICES:
        raise ValidationError(f"model must be one of {', '.join(MODEL_CHOICES)}, got '{model}'")

    pools: dict[Scenario, list[PathLossSample]] = {}
    for s in samples:
        key = s.scenario if split_glass else s.scenario.pool
        pools.setdefault(key, []).append(s)

    fits: dict[str, dict[str, PathLossModel]] = {}
    for label in Scenario:
        group = pools.get(label)
        if not group:
            continue
        try:
            entry: dict[str, PathLossModel] = {}
            if model in ("cim", "both"):
                entry["CIM"] = fit_cim(group, d0=d0, freq=freq)
            if model in ("fim", "both"):
                entry["FIM"] = fit_fim(group)
        except InsufficientDataError as e:
            if not skip_insufficient:
                raise InsufficientDataError(f"{label.value}: {e}") from e
            logger.warning(f"Skipping {label.value} fit: {e}")
            continue
        fits[label.value] = entry
    return fits


def fit_line(fit: PathLossModel, distances: Sequence[float], points: int = 50) -> pd.DataFrame:
    """Fitted curve sampled log-uniformly over the span of ``distances``."""
    d = np.asarray(distances, dtype=float)
    low = d.min()
    if isinstance(fit, CimFit):
        low = max(low, fit.d0)
    grid = np.logspace(np.log10(low), np.log10(max(d.max(), low)), points)
    grid = np.clip(grid, low, None)
    return pd.DataFrame({"distance_m": grid, "path_loss_db": predict(fit, grid)})
