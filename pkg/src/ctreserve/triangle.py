"""Cumulative run-off triangles: data model, CSV ingestion and built-in datasets.

Indices are 1-based on the public surface (``t[i, j]`` is C_{i,j}); the
backing array is 0-based with NaN below the latest diagonal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


class TriangleError(ValueError):
    """Raised when a triangle fails validation.

    ``cell`` holds the offending 1-based (accident, development) pair when
    the error can be pinned to a single cell.
    """

    def __init__(self, message: str, cell: tuple[int, int] | None = None):
        if cell is not None:
            message = f"cell ({cell[0]},{cell[1]}): {message}"
        super().__init__(message)
        self.cell = cell


@dataclass(frozen=True, eq=False)
class Triangle:
    """Upper-left staircase of cumulative claims, C_{i,j} for i + j <= n + 1."""

    values: np.ndarray
    label: str = ""
    n: int = field(init=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise TriangleError(f"expected a square n x n array, got shape {arr.shape}")
        n = arr.shape[0]
        if n < 3:
            raise TriangleError(f"need at least 3 accident years, got {n}")
        for i in range(n):
            for j in range(n):
                v = arr[i, j]
                if i + j <= n - 1:
                    if np.isnan(v):
                        raise TriangleError("missing value inside the staircase", (i + 1, j + 1))
                    if not np.isfinite(v) or v <= 0:
                        raise TriangleError(f"value must be strictly positive and finite, got {v}", (i + 1, j + 1))
                elif not np.isnan(v):
                    raise TriangleError("value below the latest diagonal", (i + 1, j + 1))
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "n", n)

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        if not (1 <= i <= self.n and 1 <= j <= self.n + 1 - i):
            raise IndexError(f"({i},{j}) is not an observed cell of a {self.n}-year triangle")
        return float(self.values[i - 1, j - 1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Triangle):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values, equal_nan=True)

    def __hash__(self):
        return hash((self.n, np.nan_to_num(self.values).tobytes()))

    def row(self, i: int) -> np.ndarray:
        """Observed cells of accident year ``i`` (1-based)."""
        return self.values[i - 1, : self.n + 1 - i].copy()

    def column(self, j: int) -> np.ndarray:
        """Observed cells of development year ``j`` (1-based)."""
        return self.values[: self.n + 1 - j, j - 1].copy()

    def latest_diagonal(self) -> np.ndarray:
        """C_{i, n-i+1} for i = 1..n, in accident-year order."""
        n = self.n
        return np.array([self.values[i, n - 1 - i] for i in range(n)])

    def scaled(self, c: float) -> Triangle:
        return Triangle(self.values * c, label=self.label)

    def with_cell(self, i: int, j: int, value: float) -> Triangle:
        """Copy with observed cell (i, j) replaced."""
        self[i, j]  # bounds check
        arr = self.values.copy()
        arr[i - 1, j - 1] = value
        return Triangle(arr, label=self.label)

    def to_csv(self) -> str:
        return serialize(self)


def latest_diagonal(t: Triangle) -> list[tuple[int, float]]:
    return [(i + 1, float(v)) for i, v in enumerate(t.latest_diagonal())]


def from_rows(rows, label: str = "") -> Triangle:
    """Build a triangle from ragged rows, row i holding n - i + 1 values."""
    n = len(rows)
    arr = np.full((n, n), np.nan)
    for i, r in enumerate(rows):
        if len(r) != n - i:
            raise TriangleError(f"row {i + 1} has {len(r)} values, expected {n - i}")
        arr[i, : len(r)] = r
    return Triangle(arr, label=label)


def parse_triangle(source: str, label: str = "") -> Triangle:
    """Parse the triangle CSV format.

    Header ``dev,1,2,...,n`` then one line per accident year ``i,v1,...``
    holding exactly n - i + 1 values.
    """
    lines = [ln.strip() for ln in io.StringIO(source).read().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TriangleError("empty triangle source")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "dev":
        raise TriangleError(f"header must start with 'dev', got {header[0]!r}")
    try:
        devs = [int(h) for h in header[1:]]
    except ValueError as exc:
        raise TriangleError(f"non-integer development index in header: {exc}") from None
    n = len(devs)
    if devs != list(range(1, n + 1)):
        raise TriangleError("header development indices must be 1..n")
    if n < 3:
        raise TriangleError(f"need at least 3 accident years, got {n}")
    body = lines[1:]
    if len(body) != n:
        raise TriangleError(f"expected {n} accident-year rows, got {len(body)}")

    arr = np.full((n, n), np.nan)
    for k, line in enumerate(body):
        fields = [x.strip() for x in line.split(",")]
        i = k + 1
        try:
            row_id = int(fields[0])
        except ValueError:
            raise TriangleError(f"row {i}: accident index {fields[0]!r} is not an integer") from None
        if row_id != i:
            raise TriangleError(f"row {i}: accident index {row_id} out of order")
        cells = fields[1:]
        while cells and cells[-1] == "":
            cells.pop()
        expected = n - i + 1
        for j, raw in enumerate(cells, start=1):
            if j > expected:
                raise TriangleError("extra value below the latest diagonal", (i, j))
            if raw == "":
                raise TriangleError("missing value inside the staircase", (i, j))
            try:
                v = float(raw)
            except ValueError:
                raise TriangleError(f"non-numeric value {raw!r}", (i, j)) from None
            if not np.isfinite(v) or v <= 0:
                raise TriangleError(f"value must be strictly positive and finite, got {raw}", (i, j))
            arr[i - 1, j - 1] = v
        if len(cells) < expected:
            raise TriangleError("missing value inside the staircase", (i, len(cells) + 1))
    return Triangle(arr, label=label)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def serialize(t: Triangle) -> str:
    n = t.n
    out = ["dev," + ",".join(str(j) for j in range(1, n + 1))]
    for i in range(1, n + 1):
        out.append(f"{i}," + ",".join(_fmt(v) for v in t.row(i)))
    return "\n".join(out) + "\n"


TAYLOR_ASHE = [
    [357848, 1124788, 1735330, 2218270, 2745596, 3319994, 3466336, 3606286, 3833515, 3901463],
    [352118, 1236139, 2170033, 3353322, 3799067, 4120063, 4647867, 4914039, 5339085],
    [290507, 1292306, 2218525, 3235179, 3985995, 4132918, 4628910, 4909315],
    [310608, 1418858, 2195047, 3757447, 4029929, 4381982, 4588268],
    [443160, 1136350, 2128333, 2897821, 3402672, 3873311],
    [396132, 1333217, 2180715, 2985752, 3691712],
    [440832, 1288463, 2419861, 3483130],
    [359480, 1421128, 2864494],
    [376686, 1363294],
    [344014],
]

# mortgage guarantee business
MORTGAGE = [
    [58046, 127970, 476599, 1027692, 1360489, 1647310, 1819179, 1906852, 1950105],
    [24492, 141767, 984288, 2142656, 2961978, 3683940, 4048898, 4115760],
    [32848, 274682, 1522637, 3203427, 4445927, 5158781, 5342585],
    [21439, 529828, 2900301, 4999019, 6460112, 6853904],
    [40397, 763394, 2920745, 4989572, 5648563],
    [90748, 951994, 4210640, 5866482],
    [62096, 868480, 1954797],
    [24983, 284441],
    [13121],
]

DATASETS = {"taylor_ashe": TAYLOR_ASHE, "mortgage": MORTGAGE}


def builtin_dataset(name: str) -> Triangle:
    try:
        rows = DATASETS[name]
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}") from None
    return from_rows(rows, label=name)
