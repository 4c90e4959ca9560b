"""
Readers and writers for sweep files, MPC lists and the CSV tables.

Every writer returns bytes and every parser takes bytes, so the codecs stay
pure; ``write_atomic`` is the only function that touches the filesystem for
writing.
"""

import io
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from model import (
    AngleGrid,
    AntennaPattern,
    CimFit,
    DelayStats,
    Direction,
    DirectionalPdp,
    FimFit,
    LinkMeta,
    Mpc,
    Padp,
    PathLossSample,
    SounderConfig,
    SweepRecord,
)
from validation import ParseError, ValidationError

logger = logging.getLogger(__name__)

MPC_COLUMNS = ["tau_ns", "power_dbm", "aod_az", "aod_el", "aoa_az", "aoa_el"]
PATHLOSS_COLUMNS = ["link_id", "distance_m", "scenario", "path_loss_db"]
FIT_REPORT_COLUMNS = ["model", "scenario", "param1", "param2", "sigma_db", "n_points"]
STATS_COLUMNS = ["link_id", "scenario", "tau_avg_ns", "tau_rms_ns"]
INDEX_COLUMNS = ["path", "link_id", "tx_id", "rx_id", "distance_m", "scenario"]

BEAM_TAG = "@beam"

# (header key, owner, attribute, converter); owners are built in this order
_SWEEP_HEADER = [
    ("freq_hz", "config", "carrier_freq", float),
    ("bandwidth_hz", "config", "bandwidth", float),
    ("sample_rate", "config", "sample_rate", float),
    ("delay_bin_ns", "config", "delay_bin", float),
    ("tx_power_dbm", "config", "tx_power", float),
    ("dynamic_range_db", "config", "dynamic_range", float),
    ("max_pl_db", "config", "max_measurable_pl", float),
    ("sequence_length", "config", "sequence_length", int),
    ("peak_gain_dbi", "pattern", "peak_gain", float),
    ("hpbw_az_deg", "pattern", "hpbw_az", float),
    ("hpbw_el_deg", "pattern", "hpbw_el", float),
    ("floor_gain_dbi", "pattern", "floor_gain", float),
    ("grid_az", "grid", "azimuths", "floats"),
    ("grid_el", "grid", "elevations", "floats"),
    ("link_id", "meta", "link_id", str),
    ("tx_id", "meta", "tx_id", str),
    ("rx_id", "meta", "rx_id", str),
    ("distance_m", "meta", "distance", float),
    ("scenario", "meta", "scenario", str),
    ("tx_height_m", "meta", "tx_height", float),
    ("rx_height_m", "meta", "rx_height", float),
    ("floor_tx", "meta", "floor_tx", int),
    ("floor_rx", "meta", "floor_rx", int),
]

_REQUIRED_HEADER_KEYS = {
    "freq_hz", "bandwidth_hz", "sample_rate", "delay_bin_ns", "tx_power_dbm",
    "peak_gain_dbi", "hpbw_az_deg", "hpbw_el_deg", "grid_az", "grid_el",
    "link_id", "distance_m", "scenario", "tx_height_m", "rx_height_m",
}

_MPC_META_KEYS = [
    "link_id", "tx_id", "rx_id", "distance_m", "scenario", "tx_height_m",
    "rx_height_m", "floor_tx", "floor_rx", "noise_floor_dbm",
]


def _fmt(value) -> str:
    """Canonical text for a header value (shortest round-tripping repr)."""
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(v)) for v in value)
    if hasattr(value, "value"):  # Scenario
        return value.value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(raw: str, converter, key: str, line: int):
    try:
        if converter == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if converter is int:
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError(raw)
            return int(as_float)
        if converter is float:
            return float(raw)
        return raw
    except ValueError:
        raise ParseError(f"cannot parse value '{raw}'", line=line, field=key)


# ---------------------------------------------------------------------------
# Sweep files
# ---------------------------------------------------------------------------

def write_sweep(rec: SweepRecord) -> bytes:
    """
    Serialize a sweep in the canonical text format.

    Raises:
        ValidationError: If the record has no PDPs or violates an invariant
    """
    rec.validate(require_pdps=True)

    owners = {"config": rec.config, "pattern": rec.pattern, "grid": rec.grid, "meta": rec.meta}
    lines = [f"{key} = {_fmt(getattr(owners[owner], attr))}" for key, owner, attr, _ in _SWEEP_HEADER]
    lines.append("")

    for pdp in rec.pdps:
        lines.append(
            f"{BEAM_TAG} {pdp.tx_dir.az!r} {pdp.tx_dir.el!r} "
            f"{pdp.rx_dir.az!r} {pdp.rx_dir.el!r} {float(pdp.capture_time)!r}"
        )
        lines.append("\n".join(f"{v:.4f}" for v in pdp.samples))

    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_samples(lines: list[str], first_line: int) -> np.ndarray:
    try:
        values = np.array(lines, dtype=float)
    except ValueError:
        values = None

    if values is None or not np.all(np.isfinite(values)):
        for offset, text in enumerate(lines):
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"invalid sample '{text}'", line=first_line + offset)
            if not np.isfinite(value):
                raise ParseError(f"non-finite sample '{text}'", line=first_line + offset)
    return values


def parse_sweep(data: bytes) -> SweepRecord:
    """
    Parse and validate a sweep file.

    Raises:
        ParseError: Malformed header or beam block (with line and field)
        ValidationError: Off-grid directions, duplicate beam pairs,
            mismatched PDP lengths, missing PDPs
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"sweep file is not UTF-8: {e}")

    lines = text.splitlines()
    spec = {key: (owner, attr, conv) for key, owner, attr, conv in _SWEEP_HEADER}
    values: dict[str, dict] = {"config": {}, "pattern": {}, "grid": {}, "meta": {}}
    seen = set()

    i = 0
    while i < len(lines) and lines[i].strip():
        line_no = i + 1
        raw = lines[i]
        if raw.startswith(BEAM_TAG):
            raise ParseError("beam block before the blank line ending the header", line=line_no)
        if "=" not in raw:
            raise ParseError(f"expected 'key = value', got '{raw}'", line=line_no)
        key, value = (part.strip() for part in raw.split("=", 1))
        if key not in spec:
            raise ParseError("unknown header key", line=line_no, field=key)
        if key in seen:
            raise ParseError("duplicate header key", line=line_no, field=key)
        seen.add(key)
        owner, attr, conv = spec[key]
        values[owner][attr] = _convert(value, conv, key, line_no)
        i += 1

    missing = sorted(_REQUIRED_HEADER_KEYS - seen)
    if missing:
        raise ParseError("missing header key", line=i + 1, field=missing[0])

    config = SounderConfig(**values["config"])
    pattern = AntennaPattern(**values["pattern"])
    grid = AngleGrid(**values["grid"])
    meta = LinkMeta(**values["meta"])

    pdps = []
    beam = None
    beam_line = 0
    block: list[str] = []

    def flush():
        if beam is None:
            return
        if not block:
            raise ParseError("beam block has no samples", line=beam_line)
        tx_az, tx_el, rx_az, rx_el, t_capture = beam
        try:
            pdps.append(DirectionalPdp(
                tx_dir=Direction(tx_az, tx_el),
                rx_dir=Direction(rx_az, rx_el),
                capture_time=t_capture,
                samples=_parse_samples(block, beam_line + 1),
            ))
        except ParseError:
            raise
        except ValidationError as e:
            raise ValidationError(f"line {beam_line}: {e}")

    for j in range(i, len(lines)):
        raw = lines[j].strip()
        if not raw:
            continue
        if raw.startswith(BEAM_TAG):
            flush()
            parts = raw.split()
            if len(parts) != 6:
                raise ParseError(f"expected 5 values after {BEAM_TAG}", line=j + 1)
            try:
                beam = tuple(float(p) for p in parts[1:])
            except ValueError:
                raise ParseError(f"invalid beam header '{raw}'", line=j + 1)
            beam_line = j + 1
            block = []
        else:
            if beam is None:
                raise ParseError("sample outside a beam block", line=j + 1)
            block.append(raw)
    flush()

    rec = SweepRecord(config=config, pattern=pattern, grid=grid, meta=meta, pdps=tuple(pdps))
    rec.validate(require_pdps=True)
    logger.debug(f"Parsed sweep {meta.link_id}: {len(pdps)} beam pairs x {rec.n_bins} bins")
    return rec


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _to_csv(df: pd.DataFrame) -> bytes:
    return df.to_csv(index=False, lineterminator="\n").encode("utf-8")


def _read_csv(text: str, columns: Sequence[str], first_line: int = 1) -> pd.DataFrame:
    """
    Read a CSV table as strings, checking header and column counts.

    Raises:
        ParseError: On a wrong header or a row with the wrong number of fields
    """
    rows = text.splitlines()
    if not rows or not rows[0].strip():
        raise ParseError("missing CSV header", line=first_line)

    header = [c.strip() for c in rows[0].split(",")]
    if header != list(columns):
        raise ParseError(f"expected header {','.join(columns)}, got {rows[0]}", line=first_line)

    for row_index, row in enumerate(rows[1:], start=1):
        if not row.strip():
            continue
        n_fields = len(row.split(","))
        if n_fields != len(columns):
            raise ParseError(
                f"expected {len(columns)} fields, got {n_fields}",
                line=first_line + row_index,
                row=row_index,
            )

    return pd.read_csv(
        io.StringIO(text), dtype=str, keep_default_na=False, na_filter=False, skip_blank_lines=True
    )


def _numeric_column(df: pd.DataFrame, column: str) -> np.ndarray:
    """Convert a column to floats, rejecting NaN, inf and garbage with the row index."""
    values = pd.to_numeric(df[column].str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        raise ParseError(f"invalid number '{df[column].iloc[row]}'", row=row + 1, field=column)
    return values


def _split_meta_lines(text: str) -> tuple[dict[str, str], str, int]:
    meta = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:]
        if "=" not in body:
            raise ParseError(f"expected '# key = value', got '{lines[i]}'", line=i + 1)
        key, value = (part.strip() for part in body.split("=", 1))
        meta[key] = value
        i += 1
    return meta, "\n".join(lines[i:]), i + 1


# ---------------------------------------------------------------------------
# MPC files
# ---------------------------------------------------------------------------

def write_mpcs(padp: Padp) -> bytes:
    """Serialize a PADP as CSV (metadata, when present, as leading '#' lines)."""
    head = ""
    if padp.meta is not None:
        m = padp.meta
        fields = {
            "link_id": m.link_id,
            "tx_id": m.tx_id,
            "rx_id": m.rx_id,
            "distance_m": repr(float(m.distance)),
            "scenario": m.scenario.value,
            "tx_height_m": repr(float(m.tx_height)),
            "rx_height_m": repr(float(m.rx_height)),
            "floor_tx": str(m.floor_tx),
            "floor_rx": str(m.floor_rx),
        }
        if padp.noise_floor is not None:
            fields["noise_floor_dbm"] = f"{padp.noise_floor:.4f}"
        head = "".join(f"# {k} = {v}\n" for k, v in fields.items())

    df = pd.DataFrame(
        [
            [
                f"{m.tau:.4f}",
                f"{m.power:.4f}",
                f"{m.aod.az:.6g}",
                f"{m.aod.el:.6g}",
                f"{m.aoa.az:.6g}",
                f"{m.aoa.el:.6g}",
            ]
            for m in padp.mpcs
        ],
        columns=MPC_COLUMNS,
    )
    return head.encode("utf-8") + _to_csv(df)


def parse_mpcs(data: bytes) -> Padp:
    """
    Parse an MPC CSV file.

    Raises:
        ParseError: Bad header, bad column count or unparseable number
            (with the data row index)
        ValidationError: Values violating the Mpc/Padp invariants
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"MPC file is not UTF-8: {e}")

    meta_fields, body, header_line = _split_meta_lines(text)
    unknown = set(meta_fields) - set(_MPC_META_KEYS)
    if unknown:
        raise ParseError("unknown metadata key", field=sorted(unknown)[0])

    df = _read_csv(body, MPC_COLUMNS, first_line=header_line)
    cols = {c: _numeric_column(df, c) for c in MPC_COLUMNS}

    mpcs = []
    for k in range(len(df)):
        try:
            mpcs.append(Mpc(
                tau=cols["tau_ns"][k],
                power=cols["power_dbm"][k],
                aod=Direction(cols["aod_az"][k], cols["aod_el"][k]),
                aoa=Direction(cols["aoa_az"][k], cols["aoa_el"][k]),
            ))
        except ValidationError as e:
            raise ValidationError(f"row {k + 1}: {e}")

    meta = None
    noise_floor = None
    if meta_fields:
        try:
            if "noise_floor_dbm" in meta_fields:
                noise_floor = float(meta_fields["noise_floor_dbm"])
            if "link_id" in meta_fields:
                meta = LinkMeta(
                    link_id=meta_fields["link_id"],
                    tx_id=meta_fields.get("tx_id", ""),
                    rx_id=meta_fields.get("rx_id", ""),
                    distance=float(meta_fields["distance_m"]),
                    scenario=meta_fields["scenario"],
                    tx_height=float(meta_fields.get("tx_height_m", 1.8)),
                    rx_height=float(meta_fields.get("rx_height_m", 1.5)),
                    floor_tx=int(meta_fields.get("floor_tx", 0)),
                    floor_rx=int(meta_fields.get("floor_rx", 0)),
                )
        except (KeyError, ValueError) as e:
            raise ParseError(f"bad MPC metadata: {e}")

    return Padp(mpcs=tuple(mpcs), meta=meta, noise_floor=noise_floor)


# ---------------------------------------------------------------------------
# Path-loss table, fit report, stats
# ---------------------------------------------------------------------------

def write_pathloss_table(samples: Iterable[PathLossSample]) -> bytes:
    df = pd.DataFrame(
        [[s.link_id, f"{s.distance:.4f}", s.scenario.value, f"{s.path_loss:.4f}"] for s in samples],
        columns=PATHLOSS_COLUMNS,
    )
    return _to_csv(df)


def parse_pathloss_table(data: bytes) -> list[PathLossSample]:
    """
    Parse a path-loss table.

    Raises:
        ParseError: Bad header, column count or number (with row index)
        ValidationError: Samples violating PathLossSample invariants
    """
    df = _read_csv(data.decode("utf-8"), PATHLOSS_COLUMNS)
    distance = _numeric_column(df, "distance_m")
    path_loss = _numeric_column(df, "path_loss_db")

    samples = []
    for k in range(len(df)):
        try:
            samples.append(PathLossSample(
                link_id=df["link_id"].iloc[k],
                distance=distance[k],
                scenario=df["scenario"].iloc[k],
                path_loss=path_loss[k],
            ))
        except ValidationError as e:
            raise ValidationError(f"row {k + 1}: {e}")
    return samples


def write_fit_report(rows: Iterable[tuple[str, object]]) -> bytes:
    """
    Serialize fitted models.

    Args:
        rows: (scenario label, CimFit or FimFit) pairs; CIM rows carry
            (n, d0) and FIM rows (alpha, beta) as (param1, param2)
    """
    records = []
    for label, fit in rows:
        if isinstance(fit, CimFit):
            records.append(["CIM", label, f"{fit.n:.6f}", f"{fit.d0:.6f}", f"{fit.sigma:.6f}", str(fit.n_points)])
        elif isinstance(fit, FimFit):
            records.append(["FIM", label, f"{fit.alpha:.6f}", f"{fit.beta:.6f}", f"{fit.sigma:.6f}", str(fit.n_points)])
        else:
            raise ValidationError(f"not a fit: {fit!r}")
    return _to_csv(pd.DataFrame(records, columns=FIT_REPORT_COLUMNS))


def parse_fit_report(data: bytes) -> pd.DataFrame:
    """Read a fit report back as a typed DataFrame."""
    df = _read_csv(data.decode("utf-8"), FIT_REPORT_COLUMNS)
    for column in ("param1", "param2", "sigma_db", "n_points"):
        df[column] = _numeric_column(df, column)
    df["n_points"] = df["n_points"].astype(int)
    return df


def write_stats_table(rows: Iterable[tuple[LinkMeta, DelayStats]]) -> bytes:
    df = pd.DataFrame(
        [[m.link_id, m.scenario.value, f"{s.tau_avg:.4f}", f"{s.tau_rms:.4f}"] for m, s in rows],
        columns=STATS_COLUMNS,
    )
    return _to_csv(df)


def write_frame(df: pd.DataFrame, float_format: str = "%.6f") -> bytes:
    """Serialize an arbitrary report table with fixed float formatting."""
    return df.to_csv(index=False, lineterminator="\n", float_format=float_format).encode("utf-8")


# ---------------------------------------------------------------------------
# Campaign index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignEntry:
    path: str
    meta: LinkMeta


@dataclass(frozen=True)
class CampaignIndex:
    entries: tuple[CampaignEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.meta.link_id for e in self.entries]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ValidationError(f"duplicate link ids in campaign index: {', '.join(duplicates)}")

    def missing_files(self, root: Path) -> list[str]:
        return [e.path for e in self.entries if not (Path(root) / e.path).is_file()]


def write_campaign_index(index: CampaignIndex) -> bytes:
    df = pd.DataFrame(
        [
            [e.path, e.meta.link_id, e.meta.tx_id, e.meta.rx_id, f"{e.meta.distance:.4f}", e.meta.scenario.value]
            for e in index.entries
        ],
        columns=INDEX_COLUMNS,
    )
    return _to_csv(df)


def parse_campaign_index(data: bytes) -> CampaignIndex:
    df = _read_csv(data.decode("utf-8"), INDEX_COLUMNS)
    distance = _numeric_column(df, "distance_m")
    entries = []
    for k in range(len(df)):
        try:
            meta = LinkMeta(
                link_id=df["link_id"].iloc[k],
                tx_id=df["tx_id"].iloc[k],
                rx_id=df["rx_id"].iloc[k],
                distance=distance[k],
                scenario=df["scenario"].iloc[k],
            )
        except ValidationError as e:
            raise ValidationError(f"row {k + 1}: {e}")
        entries.append(CampaignEntry(path=df["path"].iloc[k], meta=meta))
    return CampaignIndex(entries=tuple(entries))


def load_campaign(root: Path, index_name: str = "index.csv") -> CampaignIndex:
    """
    Load a campaign directory's index.

    Directories without an index are indexed from their ``*.sweep`` files
    (parsed headers only would need a full parse, so the sweep itself is read).

    Raises:
        ValidationError: Duplicate link ids or index entries naming missing files
    """
    root = Path(root)
    index_path = root / index_name
    if index_path.is_file():
        index = parse_campaign_index(index_path.read_bytes())
        missing = index.missing_files(root)
        if missing:
            raise ValidationError(f"campaign index references missing files: {', '.join(missing)}")
        return index

    entries = []
    for path in sorted(root.glob("*.sweep")):
        try:
            rec = parse_sweep(path.read_bytes())
        except (ParseError, ValidationError) as e:
            logger.warning(f"Skipping {path.name} while indexing: {e}")
            continue
        entries.append(CampaignEntry(path=path.name, meta=rec.meta))
    return CampaignIndex(entries=tuple(entries))


def write_atomic(path: Path, data: bytes) -> None:
    """Write bytes to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
