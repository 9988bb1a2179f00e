"""Grouped CSV input.

The expected layout is a header ``group,x1,...,xd`` followed by one row per
point. Group labels are integers forming the contiguous range ``1..s``.
Row order is preserved, since the weighted estimator depends on it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from gmmd.errors import InputError
from gmmd.estimators import GroupedSample


class ParseError(InputError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(InputError):
    pass


@dataclass(frozen=True)
class InputTable:
    labels: np.ndarray  # (rows,) int
    coords: np.ndarray  # (rows, d) float

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def s(self) -> int:
        return int(self.labels.max())

    def to_sample(self) -> GroupedSample:
        return GroupedSample([self.coords[self.labels == g] for g in range(1, self.s + 1)])

    def to_csv(self) -> str:
        """Serialize back with shortest round-trip float formatting."""
        lines = ["group," + ",".join(f"x{k}" for k in range(1, self.d + 1))]
        for label, row in zip(self.labels, self.coords):
            lines.append(",".join([str(int(label))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


def parse_grouped_csv(data: bytes | str) -> InputTable:
    text = data.decode("utf-8-sig") if isinstance(data, (bytes, bytearray)) else data
    reader = csv.reader(io.StringIO(text))
    header = None
    labels: list[int] = []
    rows: list[list[float]] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if header is None:
            expected = ["group"] + [f"x{k}" for k in range(1, len(cells))]
            if len(cells) < 2 or [c.lower() for c in cells] != expected:
                raise ParseError("missing or malformed header; expected 'group,x1,...,xd'", line)
            header = cells
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} columns, found {len(cells)}", line)
        try:
            label = int(cells[0])
        except ValueError:
            raise ParseError(f"group label {cells[0]!r} is not an integer", line) from None
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError:
            raise ParseError("non-numeric coordinate", line) from None
        if not np.all(np.isfinite(values)):
            raise ParseError("non-finite coordinate", line)
        labels.append(label)
        rows.append(values)
    if header is None:
        raise ParseError("missing header row 'group,x1,...,xd'", 1)
    if not rows:
        raise ValidationError("no data rows")
    present = sorted(set(labels))
    if present != list(range(1, len(present) + 1)):
        raise ValidationError(f"labels must be contiguous 1..s; found {present}")
    if len(present) < 2:
        raise ValidationError(f"need at least 2 groups; found {present}")
    return InputTable(labels=np.asarray(labels, dtype=np.int64), coords=np.asarray(rows, dtype=np.float64))
