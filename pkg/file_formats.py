##############################################################################
# Reading and writing every artifact the CLI touches: parameter documents
# (JSON), datasets (CSV with header x0..x{d-1}), label files (one integer per
# line), fit reports and experiment summaries (JSON) and the curve table (CSV).
# Numbers are written with '.17g' so values survive a round trip exactly and
# the output never depends on the locale.
##############################################################################
import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from errors import InvalidInput, StorageError
from GmmModel import Dataset, GmmParams, as_labels, validate
from logger_config import get_logger

logger = get_logger(__name__)

CURVE_COLUMNS = ["method", "iteration", "mean_h", "mean_ln_h", "n_zero_reps"]
TRUNCATION_PREFIX = "# truncated"


def format_float(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return format(float(value), ".17g")


def _prepare(path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(path, f"cannot create parent directory: {e}") from e
    return path


def write_json(document: dict, path) -> None:
    path = _prepare(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(document, f, indent=2, allow_nan=False)
            f.write("\n")
    except OSError as e:
        raise StorageError(path, f"cannot write: {e}") from e
    logger.info(f"Wrote {path}")


def read_json(path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise StorageError(path, f"cannot read: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidInput(f"{path}: invalid JSON: {e}") from e


def write_params(params: GmmParams, path) -> None:
    write_json(params.to_dict(), path)


def read_params(path) -> GmmParams:
    params = GmmParams.from_dict(read_json(path))
    validate(params)
    return params


def write_dataset(data, path) -> None:
    y = data.y if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    path = _prepare(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(y.shape[1])])
            for row in y:
                writer.writerow([format_float(v) for v in row])
    except OSError as e:
        raise StorageError(path, f"cannot write: {e}") from e
    logger.info(f"Wrote {y.shape[0]} x {y.shape[1]} dataset to {path}")


def read_dataset(path) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise StorageError(path, f"cannot read: {e}") from e
    if not rows:
        raise InvalidInput(f"{path}: empty dataset file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if header != [f"x{i}" for i in range(len(header))]:
        raise InvalidInput(f"{path}: header must be x0,...,x{{d-1}}")
    try:
        y = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as e:
        raise InvalidInput(f"{path}: malformed dataset row: {e}") from e
    return y


def write_labels(z, path) -> None:
    path = _prepare(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.writelines(f"{int(v)}\n" for v in np.asarray(z))
    except OSError as e:
        raise StorageError(path, f"cannot write: {e}") from e


def read_labels(path, k: Optional[int] = None, n: Optional[int] = None) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            tokens = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise StorageError(path, f"cannot read: {e}") from e
    try:
        z = np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as e:
        raise InvalidInput(f"{path}: labels must be integers: {e}") from e
    if k is None:
        k = int(z.max()) + 1 if z.size else 1
    return as_labels(z, k, n)


def write_curves(table, path) -> None:
    """
    One row per (method, iteration); a trailing comment marks truncated runs.

    The table is aggregated over replications, so it carries no exponent column:
    the per-replication SNR and optimal exponent -snr^2/8 live in the JSON
    summary written next to it (see summary_path).
    """
    path = _prepare(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CURVE_COLUMNS)
            for method, curve in table.curves.items():
                for t, (h, ln_h, zeros) in enumerate(zip(curve.mean_h, curve.mean_ln_h, curve.n_zero_reps)):
                    writer.writerow([method, t, format_float(h), format_float(ln_h), zeros])
            if table.truncated:
                f.write(f"{TRUNCATION_PREFIX}: completed={table.completed} requested={table.requested}\n")
    except OSError as e:
        raise StorageError(path, f"cannot write: {e}") from e
    logger.info(f"Wrote curves for {len(table.curves)} method(s) to {path}")


def read_curves(path) -> Dict[str, Dict[str, List]]:
    """method -> {"mean_h": [...], "mean_ln_h": [...], "n_zero_reps": [...]}, rows in file order."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            lines = [line for line in f if not line.startswith("#")]
    except OSError as e:
        raise StorageError(path, f"cannot read: {e}") from e
    reader = csv.DictReader(lines)
    if reader.fieldnames != CURVE_COLUMNS:
        raise InvalidInput(f"{path}: expected columns {','.join(CURVE_COLUMNS)}")
    curves: Dict[str, Dict[str, List]] = {}
    for row in reader:
        curve = curves.setdefault(row["method"], {"mean_h": [], "mean_ln_h": [], "n_zero_reps": []})
        if int(row["iteration"]) != len(curve["mean_h"]):
            raise InvalidInput(f"{path}: iterations of {row['method']} are not consecutive")
        curve["mean_h"].append(float(row["mean_h"]))
        curve["mean_ln_h"].append(float(row["mean_ln_h"]))
        curve["n_zero_reps"].append(int(row["n_zero_reps"]))
    return curves


def summary_path(curves_path) -> Path:
    """The JSON summary sits next to the curve CSV: out.csv -> out.csv.json."""
    curves_path = Path(curves_path)
    return curves_path.with_name(curves_path.name + ".json")
