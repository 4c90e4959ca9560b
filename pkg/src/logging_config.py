"""
Logging configuration and run metrics for chankit.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from threading import Lock
from typing import Optional

from cache import calibration_cache, gain_cache

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(threadName)s | %(name)s:%(lineno)d | %(message)s"


def setup_logging(
    level: str = "WARNING",
    log_file: bool = False,
    log_dir: str = "logs"
) -> logging.Logger:
    """
    Configure logging for a CLI run.

    Every module logs under its own ``__name__``, so the handlers go on the
    root logger. Console output goes to stderr; stdout carries the paths of
    written files.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Whether to also write ``chankit_YYYYMMDD.log``
        log_dir: Directory for log files

    Returns:
        The configured root logger
    """
    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    root.addHandler(console)

    if log_file:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(directory / f"chankit_{datetime.now():%Y%m%d}.log")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    return root


class MetricsCollector:
    """
    Per-run bookkeeping: how often each pipeline stage ran and how long it
    took, which input files were skipped, which errors were raised, and how
    well the memo caches did. Safe to update from worker threads.
    """

    def __init__(self):
        self._lock = Lock()
        self.reset()

    def reset(self):
        with self._lock:
            self._stages: dict[str, dict] = {}
            self._errors: list[dict] = []
            self._skipped: list[dict] = []

    def record_stage(self, stage: str, success: bool, duration_ms: float):
        """Record one run of a stage (extract, path_loss, fit, ...)."""
        with self._lock:
            entry = self._stages.setdefault(
                stage, {"count": 0, "success": 0, "failed": 0, "total_time_ms": 0.0, "max_time_ms": 0.0}
            )
            entry["count"] += 1
            entry["success" if success else "failed"] += 1
            entry["total_time_ms"] += duration_ms
            entry["max_time_ms"] = max(entry["max_time_ms"], duration_ms)

    def record_error(self, error_type: str, message: str):
        with self._lock:
            self._errors.append({"type": error_type, "message": message})

    def record_skipped(self, path: str, reason: Optional[str] = None):
        """Record an input file left out of the results."""
        with self._lock:
            self._skipped.append({"path": path, "reason": reason or ""})

    @property
    def skipped(self) -> list[dict]:
        with self._lock:
            return list(self._skipped)

    def get_summary(self) -> dict:
        """Snapshot of the run so far."""
        with self._lock:
            stages = {name: dict(entry) for name, entry in self._stages.items()}
            runs = sum(s["count"] for s in stages.values())
            ok = sum(s["success"] for s in stages.values())
            return {
                "total_stage_runs": runs,
                "stage_breakdown": stages,
                "total_errors": len(self._errors),
                "recent_errors": self._errors[-5:],
                "skipped_files": len(self._skipped),
                "success_rate": round(ok / runs * 100, 2) if runs else 0.0,
                "cache_hit_rate": {
                    "gain": _hit_rate(gain_cache),
                    "calibration": _hit_rate(calibration_cache),
                },
                "cache_entries": {"gain": gain_cache.size, "calibration": calibration_cache.size},
            }


def _hit_rate(cache) -> float:
    lookups = cache.hits + cache.misses
    return round(cache.hits / lookups * 100, 2) if lookups else 0.0


run_metrics = MetricsCollector()
