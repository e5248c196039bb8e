"""File formats: design CSVs, binary responses, JSON and CSV emission.

Designs are comma-separated, one row per observation, no header. Responses
hold one 0/1 per line. Every float is written with 17 significant digits so
that loading an emitted file gives back the same doubles.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from .linalg import DesignMatrix, as_design


class InputError(ValueError):
    """A malformed input file; the message names the file and line."""


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _read_lines(path) -> list[str]:
    try:
        with open(path, "r", newline="") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror or exc})") from exc


def parse_design(text: str, source: str = "<design>") -> np.ndarray:
    rows, width = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = next(csv.reader([line]))
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise InputError(f"{source}:{lineno}: non-numeric entry in {line.strip()!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"{source}:{lineno}: NaN or infinite entry")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{source}:{lineno}: ragged row with {len(vals)} entries, expected {width}")
        rows.append(vals)
    if not rows:
        raise InputError(f"{source}: empty design")
    return np.array(rows, dtype=float)


def load_design(path) -> DesignMatrix:
    return as_design(parse_design("\n".join(_read_lines(path)), str(path)))


def parse_response(text: str, source: str = "<response>") -> np.ndarray:
    out = []
    lines = text.splitlines()
    # trailing blank lines are tolerated, interior ones are not
    while lines and not lines[-1].strip():
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        tok = line.strip()
        try:
            v = float(tok)
        except ValueError:
            v = math.nan
        if v not in (0.0, 1.0):
            raise InputError(f"{source}:{lineno}: response must be 0 or 1, got {tok!r}")
        out.append(int(v))
    if not out:
        raise InputError(f"{source}: empty response")
    return np.array(out, dtype=np.int64)


def load_response(path, n: int | None = None) -> np.ndarray:
    y = parse_response("\n".join(_read_lines(path)), str(path))
    if n is not None:
        check_lengths(n, y)
    return y


def check_lengths(n: int, y) -> None:
    if len(y) != n:
        raise InputError(f"response has {len(y)} entries but the design has {n} rows")


def design_to_csv(X) -> str:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return "".join(",".join(fmt_float(v) for v in row) + "\n" for row in X)


def response_to_text(y) -> str:
    return "".join(f"{int(v)}\n" for v in y)


def write_text(path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_design(path, X) -> None:
    write_text(path, design_to_csv(X))


def write_response(path, y) -> None:
    write_text(path, response_to_text(y))


def table_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_table(path, header, rows) -> None:
    write_text(path, table_to_csv(header, rows))


def to_jsonable(obj):
    """Plain containers of str, int, float, bool and None."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        # non-finite values have no JSON literal
        out.append(fmt_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(_json_str(obj))
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (list, dict)) for v in obj):
            parts: list[str] = []
            for v in obj:
                _dump(v, indent, level + 1, parts)
            out.append("[" + ", ".join(parts) + "]")
        else:
            out.append("[\n")
            for k, v in enumerate(obj):
                out.append(pad)
                _dump(v, indent, level + 1, out)
                out.append(",\n" if k < len(obj) - 1 else "\n")
            out.append(end + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for k, (key, v) in enumerate(items):
            out.append(pad + _json_str(key) + ": ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(end + "}")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json_str(s: str) -> str:
    return json.dumps(s)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats and ``null`` for NaN/inf."""
    out: list[str] = []
    _dump(to_jsonable(obj), indent, 0, out)
    return "".join(out) + "\n"


def write_json(path, obj) -> None:
    write_text(path, dumps(obj))
