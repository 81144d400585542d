"""Readers for the simulator's CSV outputs.

Three file kinds are consumed, all produced by the `consensus-cards` CLI:

* failure curves: tau,failures,runs,p,se,n,c,strategy,beta,topology,seed
* eta tables:     tau_eval,eta,se,runs,n,c,strategy,beta,topology,seed
* fit reports:    n,c,strategy,beta,a,tau_c,residual,points_used

Lines starting with `#` are comments.  Anything else that deviates from the
documented schema raises `SchemaError` naming the offending column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CURVE_COLUMNS = ("tau", "failures", "runs", "p", "se", "n", "c",
                 "strategy", "beta", "topology", "seed")
ETA_COLUMNS = ("tau_eval", "eta", "se", "runs", "n", "c",
               "strategy", "beta", "topology", "seed")
FIT_COLUMNS = ("n", "c", "strategy", "beta", "a", "tau_c", "residual", "points_used")

_INT_COLUMNS = {"tau", "failures", "runs", "n", "c", "seed", "tau_eval", "points_used"}
_FLOAT_COLUMNS = {"p", "se", "eta", "a", "tau_c", "residual"}


class SchemaError(ValueError):
    """A CSV does not conform to the documented simulator schemas."""


@dataclass(frozen=True)
class Record:
    path: str
    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)


def _convert(path, column, raw):
    raw = raw.strip()
    if column == "beta":
        if raw == "":
            return None
        try:
            return float(raw)
        except ValueError:
            raise SchemaError(f"{path}: column 'beta' has non-numeric value {raw!r}")
    if column in _INT_COLUMNS:
        try:
            return int(raw)
        except ValueError:
            raise SchemaError(f"{path}: column {column!r} has non-integer value {raw!r}")
    if column in _FLOAT_COLUMNS:
        try:
            return float(raw)
        except ValueError:
            raise SchemaError(f"{path}: column {column!r} has non-numeric value {raw!r}")
    return raw


def read_rows(path, columns) -> list[Record]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(columns)}")
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        extra = [c for c in header if c not in columns]
        if extra:
            raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
        index = {c: header.index(c) for c in columns}
        records = []
        for lineno, row in enumerate(reader, 2):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = {c: _convert(path, c, row[index[c]]) for c in columns}
            records.append(Record(path=str(path), values=values))
    if not records:
        raise SchemaError(f"{path}: no data rows")
    return records


def read_curve(path) -> list[Record]:
    return read_rows(path, CURVE_COLUMNS)


def read_eta(path) -> list[Record]:
    return read_rows(path, ETA_COLUMNS)


def read_fits(path) -> list[Record]:
    return read_rows(path, FIT_COLUMNS)
