"""Table serialization: fixed-column CSV, JSON, and the metadata sidecar."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Dict, Mapping, Sequence

import numpy as np

DENSITY_COLUMNS = ("z", "p_numeric", "p_gauss", "p_asymptote")
OUTPUT_DIR_ENV = "SUMTAILS_OUTPUT_DIR"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def format_number(value) -> str:
    """17 significant digits; NaN and None become an empty cell."""
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return ""
    return "%.17g" % v


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(columns: Sequence[str], data: Mapping[str, Sequence]) -> str:
    n = len(data[columns[0]])
    lines = [",".join(columns)]
    for i in range(n):
        lines.append(",".join(format_number(None if data.get(c) is None else data[c][i])
                              for c in columns))
    return "\n".join(lines) + "\n"


def _json_value(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def render_json(columns: Sequence[str], data: Mapping[str, Sequence]) -> str:
    n = len(data[columns[0]])
    body = {c: (None if data.get(c) is None else [_json_value(data[c][i]) for i in range(n)])
            for c in columns}
    return json.dumps({"columns": list(columns), "data": body}, indent=1) + "\n"


def write_table(path: Path, columns: Sequence[str], data: Mapping[str, Sequence], fmt: str) -> None:
    text = render_csv(columns, data) if fmt == "csv" else render_json(columns, data)
    atomic_write(path, text)


def density_table_data(table) -> Dict[str, np.ndarray]:
    return {"z": table.z_grid, "p_numeric": table.p_numeric, "p_gauss": table.p_gauss,
            "p_asymptote": table.p_asymptote}


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_sidecar(path: Path, metadata: Mapping) -> Path:
    target = sidecar_path(path)
    atomic_write(target, json.dumps(metadata, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return target


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_csv(path: Path) -> Dict[str, np.ndarray]:
    """Parse a table written by :func:`render_csv`; empty cells read as NaN."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [[float(c) if c else float("nan") for c in line.split(",")] for line in lines[1:]]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
