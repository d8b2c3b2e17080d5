"""Deterministic serialization of results.

Every numeric value is written with 17 significant digits via the same
formatter, so repeated runs with identical inputs produce byte-identical
files. The JSON writer is hand-rolled for exactly that reason: it pins
float formatting (the stdlib writer uses repr) and emits non-finite values
as null to stay within the JSON grammar.
"""

from __future__ import annotations

import json
import math

import numpy as np

FORMAT_VERSION = 1

__all__ = ["FORMAT_VERSION", "format_float", "dumps", "write_json",
           "write_csv", "path_tidy_rows", "criteria_rows"]


def format_float(x) -> str:
    """17-significant-digit decimal; 'nan'/'inf' spelled out for CSV cells."""
    f = float(x)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return f"{f:.17g}"


def _dump(obj, parts: list) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        f = float(obj)
        parts.append("null" if not math.isfinite(f) else f"{f:.17g}")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                parts.append(",")
            parts.append(json.dumps(str(k), ensure_ascii=True))
            parts.append(":")
            _dump(v, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        parts.append("[")
        for i, v in enumerate(np.asarray(obj).tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                parts.append(",")
            _dump(v, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    parts: list = []
    _dump(obj, parts)
    return "".join(parts)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_float(v)


def write_csv(path, header, rows) -> None:
    """Comma-separated output; callers guarantee comma-free string cells."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def path_tidy_rows(fit):
    """(tau, coefficient_name, value) rows for plotting a PathFit."""
    for k in range(fit.n_points):
        for j, name in enumerate(fit.column_names):
            yield (fit.taus[k], name, fit.coefs[k, j])


def criteria_rows(table):
    """(tau, loglik, dof, cbic, ceric, converged) rows for a CriterionTable."""
    for k in range(table.taus.size):
        yield (table.taus[k], table.loglik[k], table.dof[k],
               table.cbic[k], table.ceric[k], bool(table.converged[k]))
