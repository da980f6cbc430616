import math

import numpy as np
import pytest

from rhlab.errors import PreconditionError
from rhlab.table import SweepTable, Table


@pytest.mark.parametrize(
    "value, text",
    [
        (None, ""),
        (True, "true"),
        (3, "3"),
        (np.int64(7), "7"),
        (0.5, "0.5"),
        (0.1, "0.10000000000000001"),
        (complex(1, -2), "1-2j"),
        ([1, 2], "1;2"),
        ("failed: x", "failed: x"),
    ],
)
def test__format_cell(value, text):
    assert Table.format_cell(value) == text


def test__parse_cell():
    assert Table.parse_cell("") is None
    assert Table.parse_cell("false") is False
    assert Table.parse_cell("12") == 12
    assert isinstance(Table.parse_cell("12"), int)
    assert Table.parse_cell("0.10000000000000001") == 0.1
    assert math.isnan(Table.parse_cell("nan"))
    assert Table.parse_cell("ok") == "ok"


def test__table__when__unknown_column():
    table = Table(["a", "b"])

    with pytest.raises(PreconditionError, match="unknown columns"):
        table.append({"a": 1, "c": 2})


def test__table__when__csv_written_and_read(tmp_path):
    table = Table(["s", "D", "status"], name="blocks")
    table.append({"s": 64, "D": 1 / 3, "status": "ok"})
    table.append({"s": 128, "status": "ok"})

    path = table.to_csv(tmp_path / "blocks.csv")
    again = Table.read_csv(path)

    assert path.read_text().splitlines()[0] == "s,D,status"
    assert again.name == "blocks"
    assert again.column("s") == [64, 128]
    assert again.column("D") == [1 / 3, None]
    assert len(again) == 2


def test__table__when__written_twice(tmp_path):
    table = Table(["x"], [{"x": math.pi}])

    first = table.to_csv(tmp_path / "a.csv").read_bytes()
    second = table.to_csv(tmp_path / "b.csv").read_bytes()

    assert first == second


def test__sweep_table__when__key_column_missing():
    table = SweepTable(["weak_l1"])

    assert table.columns == ["M", "weak_l1"]


def test__sweep_table__when__M_not_increasing():
    table = SweepTable(["x"], [{"M": 2048, "x": 1.0}])

    with pytest.raises(PreconditionError, match="strictly increasing"):
        table.append({"M": 1024, "x": 2.0})

    with pytest.raises(PreconditionError):
        table.append({"M": 2048, "x": 2.0})


def test__sweep_table__when__merged():
    rows = [{"M": 4096, "x": 3.0, "status": "ok"}, {"M": 1024, "x": "bad", "status": "failed: x"}]

    table = SweepTable.merged(["x", "status"], rows)

    assert table.column("M") == [1024, 4096]
    assert np.isnan(table.values("x")[0])
    assert table.values("x")[1] == 3.0
    assert table.ok_rows() == [rows[0]]


@pytest.mark.parametrize(
    "values, inversions, expected",
    [
        ([5.0, 4.0, 3.0, 2.0], 0, True),
        ([5.0, 4.0, 4.5, 2.0], 1, True),
        ([5.0, 4.0, 4.5, 2.0], 0, False),
        ([5.0, 6.0, 4.0, 4.5, 2.0], 1, False),
        ([2.0, 1.0, 3.0], 1, False),
        ([1.0], 1, False),
    ],
)
def test__sweep_table__decreases(values, inversions, expected):
    table = SweepTable(["x", "status"], [{"M": 2 ** (10 + i), "x": v, "status": "ok"} for i, v in enumerate(values)])

    assert table.decreases("x", inversions) is expected


def test__sweep_table__decreases__when__failed_row_skipped():
    rows = [
        {"M": 1024, "x": 3.0, "status": "ok"},
        {"M": 2048, "x": math.nan, "status": "failed: MarginError: close"},
        {"M": 4096, "x": 1.0, "status": "ok"},
    ]

    table = SweepTable(["x", "status"], rows)

    assert table.trend("x") == [3.0, 1.0]
    assert table.decreases("x", inversions=0)


def test__sweep_table__longest_rise():
    values = [1.0, 2.0, 1.5, 1.6, 1.7, 1.8, 1.9, 1.0]
    table = SweepTable(["x"], [{"M": 2 ** (10 + i), "x": v} for i, v in enumerate(values)])

    assert table.longest_rise("x") == 4
    assert SweepTable(["x"], [{"M": 1024, "x": 1.0}]).longest_rise("x") == 0
