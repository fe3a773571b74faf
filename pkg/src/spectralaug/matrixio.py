"""Matrix CSV format shared across the CLI and bindings.

One matrix row per line, comma-separated decimal literals, no header.
Values are serialized with 17 significant digits so parsing the file back
recovers the exact doubles.  NaN/Inf tokens and ragged rows are rejected.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .validation import check_feature_map


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def dump_matrix(m, path) -> None:
    arr = check_feature_map(m)
    lines = [",".join(format_float(x) for x in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_matrix(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip() == "":
            continue
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise ValidationError(f"{path}: ragged row at line {lineno}")
        row = []
        for tok in tokens:
            try:
                val = float(tok)
            except ValueError as exc:
                raise ValidationError(f"{path}: bad token {tok!r} at line {lineno}") from exc
            if not math.isfinite(val):
                raise ValidationError(f"{path}: non-finite token {tok!r} at line {lineno}")
            row.append(val)
        rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=float)
