"""CSV ingestion of basket trial outcomes."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

from .core import TrialData

_BASKET_COLUMNS = ("basket", "baskets")


class DataFormatError(ValueError):
    pass


def _header_map(header: list[str], path) -> dict[str, int]:
    cols = {h.strip().lower(): k for k, h in enumerate(header)}
    if len(cols) != len(header):
        raise DataFormatError(f"{path}: duplicate column names in header")
    return cols


def _basket_column(cols: dict[str, int], path) -> int:
    for name in _BASKET_COLUMNS:
        if name in cols:
            return cols[name]
    raise DataFormatError(f"{path}: missing required column 'basket'")


def _parse_int(text: str, column: str, line: int, path) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise DataFormatError(f"{path}, line {line}: column {column!r} must be an integer, got {text!r}") from None
    if value < 0:
        raise DataFormatError(f"{path}, line {line}: column {column!r} must be nonnegative, got {value}")
    return value


def _rows(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        body = [(reader.line_num, row) for row in reader if any(cell.strip() for cell in row)]
    return header, body


def ingest_csv(path) -> TrialData:
    """Read one row per basket with columns basket, responders, evaluable.

    Column names are matched case-insensitively and may appear in any order;
    ``baskets`` is accepted for ``basket``.
    """
    header, body = _rows(path)
    cols = _header_map(header, path)
    b_col = _basket_column(cols, path)
    for need in ("responders", "evaluable"):
        if need not in cols:
            raise DataFormatError(f"{path}: missing required column {need!r}")
    names, responses, sizes, seen = [], [], [], {}
    for line, row in body:
        if len(row) < len(header):
            raise DataFormatError(f"{path}, line {line}: expected {len(header)} fields, got {len(row)}")
        name = row[b_col].strip()
        if not name:
            raise DataFormatError(f"{path}, line {line}: empty basket name")
        if name in seen:
            raise DataFormatError(f"{path}, line {line}: duplicate basket {name!r} (first on line {seen[name]})")
        seen[name] = line
        s = _parse_int(row[cols["responders"]], "responders", line, path)
        n = _parse_int(row[cols["evaluable"]], "evaluable", line, path)
        if n == 0:
            raise DataFormatError(f"{path}, line {line}: basket {name!r} has no evaluable patients")
        if s > n:
            raise DataFormatError(
                f"{path}, line {line}: basket {name!r} has responders={s} > evaluable={n}")
        names.append(name)
        responses.append(s)
        sizes.append(n)
    if not names:
        raise DataFormatError(f"{path}: no data rows")
    return TrialData(tuple(names), tuple(responses), tuple(sizes))


def ingest_long_csv(path) -> TrialData:
    """Read one row per patient (columns basket, response in {0, 1}) and aggregate.

    Baskets keep their order of first appearance.
    """
    header, body = _rows(path)
    cols = _header_map(header, path)
    b_col = _basket_column(cols, path)
    r_name = next((c for c in ("response", "responder", "responders") if c in cols), None)
    if r_name is None:
        raise DataFormatError(f"{path}: missing required column 'response'")
    counts: dict[str, list[int]] = {}
    for line, row in body:
        name = row[b_col].strip()
        if not name:
            raise DataFormatError(f"{path}, line {line}: empty basket name")
        y = _parse_int(row[cols[r_name]], r_name, line, path)
        if y > 1:
            raise DataFormatError(f"{path}, line {line}: response must be 0 or 1, got {y}")
        tally = counts.setdefault(name, [0, 0])
        tally[0] += y
        tally[1] += 1
    if not counts:
        raise DataFormatError(f"{path}: no data rows")
    return TrialData(tuple(counts), tuple(v[0] for v in counts.values()), tuple(v[1] for v in counts.values()))


def read_prior_matrix(path, J: int) -> np.ndarray:
    """J x J prior exchangeability matrix; a leading label row/column is skipped."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]

    def numeric(cells):
        try:
            [float(c) for c in cells]
            return True
        except ValueError:
            return False

    if rows and not numeric(rows[0]) and not numeric(rows[0][1:]):
        rows = rows[1:]
    rows = [row[1:] if not numeric(row) else row for row in rows]
    try:
        m = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise DataFormatError(f"{path}: prior matrix must be numeric ({exc})") from None
    if m.shape != (J, J):
        raise DataFormatError(f"{path}: prior matrix must be {J}x{J}, got shape {m.shape}")
    return m


def vemu_wide_path() -> Path:
    return Path(str(resources.files("basket_mem") / "data" / "vemu_wide.csv"))


def load_vemu_wide() -> TrialData:
    """The bundled six-basket vemurafenib trial outcomes."""
    return ingest_csv(vemu_wide_path())
