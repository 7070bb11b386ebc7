"""Reading measurement files and writing result tables.

Every table is a delimited text file whose first line names its columns;
floats use one fixed format so identical runs give byte-identical files.
"""

import io
import json
import logging
import os
import re
import traceback
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from tacts.errors import DataError, ParseError, TactsError
from tacts.logistic_bench import BenchmarkReport
from tacts.recurrence import DetSeries, SDetSeries
from tacts.spectrum import Spectrum
from tacts.timeseries import IrregularSeries, make_series

logger = logging.getLogger("tacts.io")

FLOAT_FORMAT = "%.12g"
NAN_TOKENS = {"nan", "+nan", "-nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}
SEPARATOR = r"[,;\s]+"


def _data_lines(text: str) -> List[Tuple[int, str]]:
    lines = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            lines.append((number, stripped))
    return lines


def _is_number(token) -> bool:
    try:
        float(token)
        return True
    except (TypeError, ValueError):
        return False


def load_series(path: str, time_unit: str = "", value_unit: str = "") -> IrregularSeries:
    """Two-column (time, value) delimited text; '#' starts a comment.

    A single non-numeric first row is taken as a header. Rows are sorted by
    time if needed (with a warning); duplicate times are rejected.
    """
    if not os.path.isfile(path):
        raise DataError(f"input file {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        lines = _data_lines(f.read())
    if lines and not any(_is_number(tok) for tok in re.split(SEPARATOR, lines[0][1])):
        logger.debug(f"Treating line {lines[0][0]} of {path} as a header")
        lines = lines[1:]
    if not lines:
        raise DataError(f"{path} holds no data rows")

    try:
        raw = pd.read_csv(
            io.StringIO("\n".join(line for _, line in lines)),
            sep=SEPARATOR,
            engine="python",
            header=None,
            comment="#",
            dtype=str,
            keep_default_na=False,
        )
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line_no = lines[int(match.group(1)) - 1][0] if match and int(match.group(1)) <= len(lines) else None
        raise ParseError("expected two columns (time, value)", line_no) from e

    if raw.shape[1] < 2:
        raise ParseError("expected two columns (time, value)", lines[0][0])
    if raw.shape[1] > 2:
        extra = raw.iloc[:, 2:].replace("", np.nan).notna().any(axis=1).to_numpy()
        if extra.any():
            raise ParseError("expected two columns (time, value)", lines[int(np.argmax(extra))][0])
        raw = raw.iloc[:, :2]

    columns = []
    for col in range(2):
        cells = raw.iloc[:, col].fillna("").str.strip()
        numeric = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        unparsed = np.isnan(numeric) & ~cells.str.lower().isin(NAN_TOKENS).to_numpy()
        if unparsed.any():
            row = int(np.argmax(unparsed))
            token = cells.iloc[row] or "<missing>"
            raise ParseError(f"cannot parse {token!r} as a number", lines[row][0])
        columns.append(numeric)
    times, values = columns

    if np.any(np.diff(times) < 0):
        logger.warning(f"{path}: rows are not sorted by time, sorting")
        order = np.argsort(times, kind="stable")
        times, values = times[order], values[order]
    series = make_series(times, values, time_unit, value_unit)
    logger.info(f"Loaded {len(series)} points from {path} spanning {series.span[0]:g}..{series.span[1]:g}")
    return series


def omega_label(omega: float) -> str:
    return f"w{omega:.6g}"


def _write_table(df: pd.DataFrame, path: str) -> str:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    logger.info(f"Wrote {path} ({len(df)} rows)")
    return path


def spectrum_frame(spectrum: Spectrum) -> pd.DataFrame:
    data = {"t": spectrum.timeline.points()}
    for member in spectrum.members:
        data[f"cost_{omega_label(member.omega)}"] = member.costs
    for member in spectrum.members:
        data[f"gap_{omega_label(member.omega)}"] = member.gap_mask.astype(int)
    return pd.DataFrame(data)


def det_frame(dets: Sequence[DetSeries]) -> pd.DataFrame:
    data = {"t": dets[0].rec_timeline.points()}
    for det in dets:
        data[f"det_{omega_label(det.omega)}"] = det.values
    for det in dets:
        data[f"valid_{omega_label(det.omega)}"] = det.valid_mask.astype(int)
    return pd.DataFrame(data)


def sdet_frame(sd: SDetSeries) -> pd.DataFrame:
    count = sd.rec_timeline.count
    return pd.DataFrame({
        "t": sd.rec_timeline.points(),
        "sdet": sd.values,
        "ci_low": sd.ci_low if sd.ci_low is not None else np.full(count, np.nan),
        "ci_high": sd.ci_high if sd.ci_high is not None else np.full(count, np.nan),
        "flag": sd.flags if sd.flags is not None else np.full(count, "none", dtype=object),
        "members": sd.member_count,
    })


def write_spectrum(spectrum: Spectrum, out_dir: str) -> str:
    return _write_table(spectrum_frame(spectrum), os.path.join(out_dir, "spectrum.csv"))


def write_det(dets: Sequence[DetSeries], out_dir: str) -> str:
    return _write_table(det_frame(dets), os.path.join(out_dir, "det.csv"))


def write_sdet(sd: SDetSeries, out_dir: str) -> str:
    return _write_table(sdet_frame(sd), os.path.join(out_dir, "sdet.csv"))


def calibration_frame(spectrum: Spectrum) -> pd.DataFrame:
    rows = []
    for member in spectrum.members:
        p = member.params
        ks = np.nan if member.ks_stat is None else member.ks_stat
        rows.append((member.omega, p.lambda_x, p.lambda_t, p.lam, ks))
    return pd.DataFrame(rows, columns=["omega", "lambda_x", "lambda_t", "lambda", "ks"])


def write_calibration(spectrum: Spectrum, stream) -> None:
    calibration_frame(spectrum).to_csv(
        stream, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n"
    )


def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_manifest(entries: Iterable[Tuple[str, object]], out_dir: str) -> str:
    """key = value lines in the given order"""
    path = os.path.join(out_dir, "manifest.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# key = value\n")
        for key, value in entries:
            f.write(f"{key} = {_format_value(value)}\n")
    logger.info(f"Wrote {path}")
    return path


def read_manifest(path: str) -> Dict[str, str]:
    entries = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" = ")
            entries[key] = value
    return entries


def write_bench_report(report: BenchmarkReport, out_dir: str) -> List[str]:
    written = [_write_table(report.rows, os.path.join(out_dir, "bench_report.csv"))]
    written.append(_write_table(report.mean_errors(), os.path.join(out_dir, "bench_mean.csv")))
    for (cell, frame), dump in sorted(report.dumps.items()):
        written.append(_write_table(dump, os.path.join(out_dir, f"bench_cell{cell}_L{frame:g}.csv")))
    if report.bifurcation is not None:
        written.append(_write_table(report.bifurcation, os.path.join(out_dir, "bench_bifurcation.csv")))
    return written


def write_error(error: Exception, out_dir: str) -> str:
    """Machine-readable error record; unexpected exceptions get exit code 1"""
    if isinstance(error, TactsError):
        record = error.to_record()
    else:
        record = {"error": type(error).__name__, "message": str(error), "exit_code": 1}
    path = os.path.join(out_dir, "error.json")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(record, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        logger.error(f"Could not write {path}: {str(e)}\n{traceback.format_exc()}")
    return path
