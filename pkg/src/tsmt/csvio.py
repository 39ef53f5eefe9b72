"""CSV input and output: datasets, decisions, simulation results, thresholds, plot data.

Every float is written with 17 significant digits so that parsing the text
back recovers the exact double.
"""

import csv
import math

import numpy as np

from .errors import DataError

DECISION_COLUMNS = ("index", "S", "T", "p", "selected", "rejected")

RESULT_COLUMNS = (
    "scenario_id", "figure", "panel", "x_name", "x", "m", "n", "rho", "dependence",
    "variance_mode", "mean_mode", "signal_count", "method", "estimate", "value", "se",
    "replications",
)

THRESHOLD_COLUMNS = (
    "figure", "d", "method", "gamma", "r", "gamma_optimized", "mu2_threshold",
    "detection_branch", "selection_branch",
)

PLOT_COLUMNS = ("figure", "panel", "x", "series", "y", "se")

THRESHOLD_LABELS = {
    "two_stage": "TS",
    "bonferroni_t": "Bonf. (t)",
    "bonferroni_z": "Bonf. (z)",
    "split_sample": "SS",
}

# estimates plotted for each simulation figure; other figures plot everything but mean_selected
_FIGURE_ESTIMATES = {
    "fig8_1": {"null": ("type1_global",), "power": ("global_power",)},
    "fig8_2": {None: ("global_power",)},
    "fig8_3": {None: ("fwer", "avg_power")},
    "fig8_4": {None: ("fwer", "avg_power")},
}


def fmt(value):
    """Text form of one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def write_rows(handle, columns, rows):
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])


def read_dataset(source, skip_header=False):
    """Parse an ``m x n`` numeric matrix from CSV text (path or open file).

    Errors name the offending 1-based row and column.
    """
    if hasattr(source, "read"):
        return _parse_dataset(source, skip_header)
    try:
        with open(source, newline="") as handle:
            return _parse_dataset(handle, skip_header)
    except OSError as exc:
        raise DataError(f"cannot read dataset {source}: {exc.strerror or exc}") from None


def _parse_dataset(handle, skip_header):
    rows = []
    width = None
    for line_no, record in enumerate(csv.reader(handle), start=1):
        if skip_header and line_no == 1:
            continue
        if not record or all(not cell.strip() for cell in record):
            continue
        values = []
        for col, cell in enumerate(record, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"row {line_no}, column {col}: not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"row {line_no}, column {col}: non-finite value {cell!r}")
            values.append(value)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataError(f"row {line_no}: expected {width} columns, found {len(values)}")
        rows.append(values)
    if not rows:
        raise DataError("dataset is empty")
    if width < 2:
        raise DataError(f"need at least 2 observations per row, found {width}")
    return np.array(rows, dtype=float)


def decision_rows(stats, result):
    sel, rej = result.selected_mask, result.rejected_mask
    return [
        {"index": i, "S": stats.s[i], "T": stats.t[i], "p": stats.p[i],
         "selected": sel[i], "rejected": rej[i]}
        for i in range(stats.m)
    ]


def read_decisions(handle):
    """Inverse of the decisions writer; returns a dict of column arrays."""
    reader = csv.DictReader(handle)
    if tuple(reader.fieldnames or ()) != DECISION_COLUMNS:
        raise DataError(f"not a decisions file: header {reader.fieldnames}")
    cols = {c: [] for c in DECISION_COLUMNS}
    for row in reader:
        for c in DECISION_COLUMNS:
            cols[c].append(row[c])
    return {
        "index": np.array(cols["index"], dtype=int),
        "S": np.array(cols["S"], dtype=float),
        "T": np.array(cols["T"], dtype=float),
        "p": np.array(cols["p"], dtype=float),
        "selected": np.array(cols["selected"], dtype=int).astype(bool),
        "rejected": np.array(cols["rejected"], dtype=int).astype(bool),
    }


def result_rows(config, reports):
    """Long-format result rows, one per (procedure, estimate)."""
    base = {
        "scenario_id": config.scenario_id, "figure": config.figure, "panel": config.panel,
        "x_name": config.x_name, "x": config.x, "m": config.m, "n": config.n,
        "rho": config.rho, "dependence": config.dependence,
        "variance_mode": config.variance_mode, "mean_mode": config.mean_mode,
        "signal_count": config.signal_count,
    }
    rows = []
    for report in reports:
        for name, value, se in report.estimates():
            rows.append({**base, "method": report.method, "estimate": name, "value": value,
                         "se": se, "replications": report.replications_used})
    return rows


def threshold_rows(reports, figure=""):
    """``reports`` holds ``(d, gamma, r, optimized, ThresholdReport)`` tuples."""
    return [
        {"figure": figure, "d": d, "method": rep.method, "gamma": gamma, "r": r,
         "gamma_optimized": optimized if gamma is not None else None,
         "mu2_threshold": rep.mu_squared_threshold,
         "detection_branch": rep.detection_branch, "selection_branch": rep.selection_branch}
        for d, gamma, r, optimized, rep in reports
    ]


def _num(text):
    return float(text) if text not in ("", None) else None


def _plot_from_results(records):
    points = []
    for row in records:
        wanted = _FIGURE_ESTIMATES.get(row["figure"])
        if wanted is None:
            keep = row["estimate"] != "mean_selected"
        else:
            keep = row["estimate"] in wanted.get(row["panel"], wanted.get(None, ()))
        if not keep:
            continue
        panel = f"{row['panel']}/{row['estimate']}" if row["panel"] else row["estimate"]
        points.append({"figure": row["figure"], "panel": panel, "x": _num(row["x"]),
                       "series": row["method"], "y": _num(row["value"]), "se": _num(row["se"])})
    return points


def _plot_from_thresholds(records):
    points = []
    for row in records:
        d = _num(row["d"])
        figure = row["figure"] or "thresholds"
        label = THRESHOLD_LABELS.get(row["method"], row["method"])
        points.append({"figure": figure, "panel": "mu2_threshold", "x": d, "series": label,
                       "y": _num(row["mu2_threshold"]), "se": None})
        if row["method"] == "two_stage" and row["gamma_optimized"] == "1":
            points.append({"figure": figure, "panel": "gamma_star", "x": d, "series": label,
                           "y": _num(row["gamma"]), "se": None})
    return points


def plot_rows(handle):
    """Turn a results or thresholds CSV into plot points sorted deterministically."""
    reader = csv.DictReader(handle)
    header = tuple(reader.fieldnames or ())
    if not header:
        return []
    if header == RESULT_COLUMNS:
        points = _plot_from_results(reader)
    elif header == THRESHOLD_COLUMNS:
        points = _plot_from_thresholds(reader)
    else:
        raise DataError(f"unrecognized results schema: {list(header)}")
    points.sort(key=lambda p: (p["figure"], p["panel"], p["series"], p["x"]))
    return points
