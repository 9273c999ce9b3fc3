"""Detector and beam-splitter calibration from laboratory measurements.

Converts dBm power readings and noise power spectral density levels into
model parameters: splitting ratios, insertion loss, electronic noise in
shot-noise units, and the trusted-noise transmittance eta_e = 1/(1+v_el).

All dBm <-> linear conversions use the 1 mW reference; the only subtraction
performed in the log domain is the electronic-to-shot-noise level
difference that defines v_el.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .protocols import DetectorParams

__all__ = [
    "PowerPair",
    "PsdRecord",
    "SplitterRow",
    "RatioDiscrepancyWarning",
    "CalibrationFormatError",
    "dbm_to_mw",
    "mw_to_dbm",
    "splitting_ratio",
    "insertion_loss",
    "v_el_from_psd",
    "eta_e_from_vel",
    "shot_noise_fit",
    "detector_params_from_calibration",
    "read_splitter_csv",
    "write_splitter_csv",
    "read_psd_csv",
    "write_psd_csv",
]

# warn when a user-supplied expected ratio deviates by > 0.2 percentage points
RATIO_TOLERANCE = 0.002

SPLITTER_COLUMNS = ("input_port", "input_dbm", "out1_dbm", "out2_dbm")
PSD_COLUMNS = (
    "detector_id",
    "quadrature",
    "lo_power_dbm",
    "freq_hz",
    "total_dbm",
    "electronic_dbm",
)


class RatioDiscrepancyWarning(UserWarning):
    """Measured splitting ratio disagrees with the stated expectation."""


class CalibrationFormatError(ValueError):
    """Calibration CSV violates the expected schema."""


@dataclass(frozen=True)
class PowerPair:
    """Optical powers at the two output ports of a beam splitter."""

    p1_dbm: float
    p2_dbm: float
    input_dbm: float | None = None

    def __post_init__(self):
        for name in ("p1_dbm", "p2_dbm"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PsdRecord:
    """Noise PSD levels of one homodyne detector at one LO power."""

    detector_id: str
    quadrature: str
    lo_power_dbm: float
    freq_hz: float
    total_dbm: float
    electronic_dbm: float

    def __post_init__(self):
        if self.quadrature not in ("x", "p"):
            raise ValueError(f"quadrature must be 'x' or 'p', got {self.quadrature!r}")
        if self.total_dbm < self.electronic_dbm:
            warnings.warn(
                f"total noise {self.total_dbm} dBm below electronic noise "
                f"{self.electronic_dbm} dBm for {self.detector_id}/{self.quadrature}",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class SplitterRow:
    """One measurement row of the splitter calibration table."""

    input_port: int
    input_dbm: float
    out1_dbm: float
    out2_dbm: float

    @property
    def pair(self) -> PowerPair:
        return PowerPair(
            p1_dbm=self.out1_dbm, p2_dbm=self.out2_dbm, input_dbm=self.input_dbm
        )


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        raise ValueError(f"power must be positive, got {mw} mW")
    return 10.0 * np.log10(mw)


def splitting_ratio(
    pair: PowerPair, expected_r1: float | None = None
) -> tuple[float, float]:
    """Linear-power splitting ratio (r1, r2) with r1 + r2 = 1.

    With expected_r1 given, a RatioDiscrepancyWarning is emitted when the
    measured ratio deviates by more than 0.2 percentage points; typeset
    ratio columns are not always reproducible from their own dBm readings.
    """
    p1 = dbm_to_mw(pair.p1_dbm)
    p2 = dbm_to_mw(pair.p2_dbm)
    r1 = p1 / (p1 + p2)
    r2 = 1.0 - r1
    if expected_r1 is not None and abs(r1 - expected_r1) > RATIO_TOLERANCE:
        warnings.warn(
            f"measured splitting ratio {r1:.4f} deviates from expected "
            f"{expected_r1:.4f} by more than {RATIO_TOLERANCE:.1%}",
            RatioDiscrepancyWarning,
            stacklevel=2,
        )
    return r1, r2


def insertion_loss(pair: PowerPair) -> float:
    """Insertion loss in dB: input power minus the summed output power."""
    if pair.input_dbm is None:
        raise ValueError("insertion loss requires the input power")
    total_out = dbm_to_mw(pair.p1_dbm) + dbm_to_mw(pair.p2_dbm)
    return pair.input_dbm - mw_to_dbm(total_out)


def v_el_from_psd(p_el_dbm: float, p_snu_dbm: float) -> float:
    """Electronic noise in SNU from PSD levels: 10^((P_el - P_SNU)/10).

    In the one-time-calibration model the shot-noise reference is the total
    noise level measured with the LO on.
    """
    return 10.0 ** ((p_el_dbm - p_snu_dbm) / 10.0)


def eta_e_from_vel(v_el: float) -> float:
    """Trusted-noise beam-splitter transmittance 1 / (1 + v_el)."""
    if v_el < 0.0:
        raise ValueError(f"v_el must be >= 0, got {v_el}")
    return 1.0 / (1.0 + v_el)


def shot_noise_fit(records) -> tuple[float, float, float]:
    """Least-squares line through shot-noise power versus LO power.

    Shot noise is total minus electronic noise in linear units (mW).
    Returns (slope, intercept, max relative residual).
    """
    records = list(records)
    lo = np.array([dbm_to_mw(r.lo_power_dbm) for r in records])
    shot = np.array(
        [dbm_to_mw(r.total_dbm) - dbm_to_mw(r.electronic_dbm) for r in records]
    )
    if len(records) < 2 or np.unique(lo).size < 2:
        raise ValueError("shot-noise fit needs at least two distinct LO powers")
    slope, intercept = np.polyfit(lo, shot, 1)
    fitted = slope * lo + intercept
    scale = max(np.abs(shot).max(), 1e-300)
    residual = float(np.abs(fitted - shot).max() / scale)
    return float(slope), float(intercept), residual


def detector_params_from_calibration(
    x_record: PsdRecord,
    p_record: PsdRecord,
    eta_d_x: float,
    eta_d_p: float,
    eta_bs: float = 0.5,
) -> DetectorParams:
    """Build DetectorParams from one PSD record per quadrature.

    Detection efficiencies are measured separately and passed through.
    """
    if x_record.quadrature != "x" or p_record.quadrature != "p":
        raise ValueError("records must be the x and p quadrature respectively")
    return DetectorParams(
        eta_d_x=eta_d_x,
        eta_d_p=eta_d_p,
        v_el_x=v_el_from_psd(x_record.electronic_dbm, x_record.total_dbm),
        v_el_p=v_el_from_psd(p_record.electronic_dbm, p_record.total_dbm),
        eta_bs=eta_bs,
    )


def _parse_float(value: str, row: int, column: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise CalibrationFormatError(
            f"row {row}, column {column!r}: cannot parse {value!r} as a number"
        ) from None
    if not np.isfinite(out):
        raise CalibrationFormatError(f"row {row}, column {column!r}: non-finite value")
    return out


def _check_header(reader: csv.DictReader, expected, path) -> None:
    got = tuple(reader.fieldnames or ())
    if got != tuple(expected):
        raise CalibrationFormatError(
            f"{path}: expected header {','.join(expected)}, got {','.join(got) or '<empty>'}"
        )


def read_splitter_csv(path) -> list[SplitterRow]:
    """Parse a splitter calibration file: input_port,input_dbm,out1_dbm,out2_dbm."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, SPLITTER_COLUMNS, path)
        rows = []
        for i, rec in enumerate(reader, start=1):
            try:
                port = int(rec["input_port"])
            except (TypeError, ValueError):
                raise CalibrationFormatError(
                    f"row {i}, column 'input_port': cannot parse "
                    f"{rec['input_port']!r} as an integer"
                ) from None
            rows.append(
                SplitterRow(
                    input_port=port,
                    input_dbm=_parse_float(rec["input_dbm"], i, "input_dbm"),
                    out1_dbm=_parse_float(rec["out1_dbm"], i, "out1_dbm"),
                    out2_dbm=_parse_float(rec["out2_dbm"], i, "out2_dbm"),
                )
            )
    if not rows:
        raise CalibrationFormatError(f"{path}: no data rows")
    return rows


def write_splitter_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPLITTER_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.input_port, f"{r.input_dbm:.17g}", f"{r.out1_dbm:.17g}", f"{r.out2_dbm:.17g}"]
            )


def read_psd_csv(path) -> list[PsdRecord]:
    """Parse a PSD calibration file:
    detector_id,quadrature,lo_power_dbm,freq_hz,total_dbm,electronic_dbm."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, PSD_COLUMNS, path)
        records = []
        for i, rec in enumerate(reader, start=1):
            quad = (rec["quadrature"] or "").strip()
            if quad not in ("x", "p"):
                raise CalibrationFormatError(
                    f"row {i}, column 'quadrature': expected 'x' or 'p', got {quad!r}"
                )
            records.append(
                PsdRecord(
                    detector_id=rec["detector_id"],
                    quadrature=quad,
                    lo_power_dbm=_parse_float(rec["lo_power_dbm"], i, "lo_power_dbm"),
                    freq_hz=_parse_float(rec["freq_hz"], i, "freq_hz"),
                    total_dbm=_parse_float(rec["total_dbm"], i, "total_dbm"),
                    electronic_dbm=_parse_float(rec["electronic_dbm"], i, "electronic_dbm"),
                )
            )
    if not records:
        raise CalibrationFormatError(f"{path}: no data rows")
    return records


def write_psd_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PSD_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.detector_id,
                    r.quadrature,
                    f"{r.lo_power_dbm:.17g}",
                    f"{r.freq_hz:.17g}",
                    f"{r.total_dbm:.17g}",
                    f"{r.electronic_dbm:.17g}",
                ]
            )
