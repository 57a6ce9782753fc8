"""
File helpers shared by datasets, checkpoints, reports and run history
"""
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

import numpy as np

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to a temporary file next to `path`, then rename it into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_json(path: PathLike, payload: Any) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, default=_json_default) + "\n")


def read_json(path: PathLike) -> Any:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def format_row(values: np.ndarray) -> str:
    """Render a 1-D array as space-separated 17-significant-digit decimals"""
    return " ".join(FLOAT_FORMAT % float(v) for v in np.ravel(values))


def parse_row(text: str) -> np.ndarray:
    if not text.strip():
        return np.zeros(0, dtype=np.float64)
    return np.array([float(tok) for tok in text.split()], dtype=np.float64)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'value'):
        # Enum members
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
