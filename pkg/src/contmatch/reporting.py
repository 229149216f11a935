"""Deterministic CSV/JSON emission.

Numbers are formatted with 17 significant digits in JSON (exact float
round-trip) and 9 in CSV (human-readable).  Every file starts with the
tool version and the full run configuration so a run is reconstructible
from any of its outputs.  Nothing here depends on wall-clock time, so
identical configurations produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Iterable, List, Optional, Sequence

import numpy as np

JSON_FLOAT_FORMAT = "%.17g"
CSV_FLOAT_FORMAT = "%.9g"


def _fmt_float(x: float, fmt: str) -> str:
    if np.isnan(x):
        return '"nan"' if fmt is JSON_FLOAT_FORMAT else "nan"
    if np.isinf(x):
        s = "inf" if x > 0 else "-inf"
        return f'"{s}"' if fmt is JSON_FLOAT_FORMAT else s
    return fmt % x


def _json_chunks(obj, fmt: str, indent: int, out: List[str]) -> None:
    pad = " " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj), fmt))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _json_chunks(obj.tolist(), fmt, indent, out)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, val) in enumerate(items):
            out.append(pad + "  " + json.dumps(str(key)) + ": ")
            _json_chunks(val, fmt, indent + 2, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, val in enumerate(obj):
            _json_chunks(val, fmt, indent, out)
            if i + 1 < len(obj):
                out.append(", ")
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_text(obj) -> str:
    out: List[str] = []
    _json_chunks(obj, JSON_FLOAT_FORMAT, 0, out)
    return "".join(out) + "\n"


def write_json(path: str, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(json_text(obj))


def csv_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _fmt_float(float(x), CSV_FLOAT_FORMAT)
    s = str(x)
    if "," in s or '"' in s or "\n" in s:
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    header_comments: Optional[Sequence[str]] = None,
) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_comments or ():
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(x) for x in row) + "\n")


def plain(obj):
    """Recursively convert numpy containers/scalars to plain python."""
    if isinstance(obj, np.ndarray):
        return [plain(x) for x in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    return obj


def config_comments(version: str, config: dict) -> List[str]:
    compact = json.dumps(plain(config), separators=(",", ":"), sort_keys=True)
    return [f"contmatch {version}", "config " + compact]
