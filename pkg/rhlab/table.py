from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable
from numbers import Integral, Number, Real
from pathlib import Path
from typing import Any

import numpy as np

from rhlab.errors import PreconditionError

logger = logging.getLogger(__name__)


class Table:
    def __init__(self, columns: Iterable[str], rows: Iterable[dict] | None = None, name: str = "table"):
        self.columns = list(columns)
        self.name = name
        self.rows: list[dict] = []
        for row in rows or ():
            self.append(row)

    @staticmethod
    def format_cell(value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, str):
            return value
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, Integral):
            return str(value)
        if isinstance(value, Real):
            return format(value, ".17g")
        if isinstance(value, Number):
            return f"{Table.format_cell(value.real)}{value.imag:+.17g}j"
        if isinstance(value, Iterable):
            return ";".join(Table.format_cell(v) for v in value)
        return str(value)

    @staticmethod
    def parse_cell(text: str) -> Any:
        if text == "":
            return None
        if text in ("true", "false"):
            return text == "true"
        for kind in (int, float):
            try:
                return kind(text)
            except ValueError:
                pass
        return text

    def append(self, row: dict):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise PreconditionError(f"{self.name}: unknown columns {sorted(unknown)}")
        self.rows.append(dict(row))

    def column(self, name: str) -> list:
        return [row.get(name) for row in self.rows]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([self.format_cell(row.get(c)) for c in self.columns])
        logger.debug("wrote %d rows to %s", len(self.rows), path)
        return path

    @classmethod
    def read_csv(cls, path: str | Path, **kwargs) -> Table:
        path = Path(path)
        with path.open(encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            columns = next(reader)
            rows = [{c: cls.parse_cell(v) for c, v in zip(columns, line)} for line in reader]
        return cls(columns, rows, name=kwargs.get("name", path.stem))


class SweepTable(Table):
    """A table keyed by M, rows kept in strictly increasing M."""

    key = "M"

    def __init__(self, columns: Iterable[str], rows: Iterable[dict] | None = None, name: str = "sweep"):
        columns = list(columns)
        if self.key not in columns:
            columns.insert(0, self.key)
        super().__init__(columns, rows, name)

    def append(self, row: dict):
        if self.rows and not row[self.key] > self.rows[-1][self.key]:
            raise PreconditionError(
                f"{self.name}: M must be strictly increasing, got {row[self.key]} after {self.rows[-1][self.key]}"
            )
        super().append(row)

    @classmethod
    def merged(cls, columns: Iterable[str], rows: Iterable[dict], name: str = "sweep") -> SweepTable:
        return cls(columns, sorted(rows, key=lambda r: r[cls.key]), name)

    def values(self, name: str) -> np.ndarray:
        return np.array([math.nan if v is None or isinstance(v, str) else v for v in self.column(name)], dtype=float)

    def ok_rows(self) -> list[dict]:
        return [row for row in self.rows if row.get("status", "ok") == "ok"]

    def trend(self, name: str) -> list[float]:
        """Values of one column over the successful rows, in M order."""
        return [float(row[name]) for row in self.ok_rows()]

    def decreases(self, name: str, inversions: int = 1) -> bool:
        """True when the column ends below where it starts with at most ``inversions`` local rises."""
        values = self.trend(name)
        if len(values) < 2:
            return False
        rises = sum(b > a for a, b in zip(values, values[1:]))
        return values[-1] < values[0] and rises <= inversions

    def longest_rise(self, name: str) -> int:
        """Length of the longest run of consecutive increases between neighbouring rows."""
        values = self.trend(name)
        best = run = 0
        for a, b in zip(values, values[1:]):
            run = run + 1 if b > a else 0
            best = max(best, run)
        return best
