import csv
import logging
import math
import re
import sys
from dataclasses import asdict, fields, is_dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from helpers.errors import DomainError, UsageError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# schema={SCHEMA_VERSION}"
_COORD = re.compile(r"^x(\d+)$")


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return f"{value:.17g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def row_fieldnames(rows):
    first = rows[0]
    if is_dataclass(first):
        return [f.name for f in fields(first)]
    return list(first.keys())


def write_rows(rows, out=None, fieldnames=None):
    """
    Write result rows as CSV with a leading schema comment.

    Rows may be dataclasses or dicts. ``out`` is a path, an open text stream,
    or None for stdout.
    """
    if not rows and fieldnames is None:
        raise UsageError("no rows to write")
    names = fieldnames or row_fieldnames(rows)

    def emit(handle):
        handle.write(SCHEMA_LINE + "\n")
        writer = csv.DictWriter(handle, fieldnames=names, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            record = asdict(row) if is_dataclass(row) else row
            writer.writerow({name: format_value(record.get(name)) for name in names})

    if out is None:
        emit(sys.stdout)
    elif hasattr(out, "write"):
        emit(out)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            emit(handle)
        logger.info(f"wrote {len(rows)} rows to {path}")


def read_rows(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", keep_default_na=True)


def coordinate_columns(frame: pd.DataFrame):
    indexed = sorted((int(m.group(1)), name) for name in frame.columns if (m := _COORD.match(str(name))))
    names = [name for _, name in indexed]
    if not names or [i for i, _ in indexed] != list(range(1, len(names) + 1)):
        raise UsageError("data file needs coordinate columns x1, ..., xd")
    return names


def read_points(path, dim: int | None = None):
    """
    Load user data with header x1,...,xd and optional y / sigma columns.

    Returns (points, y or None, sigma or None).
    """
    frame = pd.read_csv(path, comment="#")
    coords = coordinate_columns(frame)
    if dim is not None and len(coords) != dim:
        raise UsageError(f"data file has {len(coords)} coordinate columns, expected {dim}")
    if len(coords) not in (1, 2, 3):
        raise UsageError(f"only 1, 2 or 3 coordinates are supported, got {len(coords)}")

    try:
        points = frame[coords].to_numpy(dtype=float)
        y = frame["y"].to_numpy(dtype=float) if "y" in frame.columns else None
        sigma = frame["sigma"].to_numpy(dtype=float) if "sigma" in frame.columns else None
    except ValueError as e:
        raise UsageError(f"data file {path} has non-numeric entries: {e}") from e

    if not np.all(np.isfinite(points)):
        raise DomainError(f"data file {path} has missing or non-finite coordinates")
    logger.info(f"read {len(points)} points of dimension {len(coords)} from {path}")
    return points, y, sigma


def normalize_points(points):
    """
    Map points affinely into [-1, 1]^d with one isotropic scale.

    Returns (mapped points, center, scale) with mapped = (points - center) / scale.
    """
    points = np.asarray(points, dtype=float)
    low, high = points.min(axis=0), points.max(axis=0)
    center = (low + high) / 2.0
    scale = float(np.max((high - low) / 2.0))
    if scale == 0.0:
        scale = 1.0
    mapped = np.clip((points - center) / scale, -1.0, 1.0)
    return mapped, center, scale
