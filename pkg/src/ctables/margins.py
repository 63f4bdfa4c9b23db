"""Margin vectors and the two-level Barvinok margin family."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath

from .errors import DegenerateMargin, DomainError, EmptyMargin, InvalidMargins, SumMismatch


@dataclass(frozen=True)
class MarginPair:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    total: int

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.cols)

    def transpose(self) -> "MarginPair":
        return MarginPair(self.cols, self.rows, self.total)

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "cols": list(self.cols)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        """One CSV record: two fields, entries separated by ``;``."""
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [";".join(map(str, self.rows)), ";".join(map(str, self.cols))]
        )
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "MarginPair":
        try:
            return validate(data["rows"], data["cols"])
        except KeyError as exc:
            raise InvalidMargins(f"missing key {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "MarginPair":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(cls, line: str) -> "MarginPair":
        fields = next(csv.reader([line.strip()]))
        if len(fields) != 2:
            raise InvalidMargins("expected two CSV fields: rows, cols")
        return validate(_parse_int_list(fields[0], ";"), _parse_int_list(fields[1], ";"))


def _parse_int_list(text: str, sep: str = ",") -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(sep)]
    except ValueError:
        raise InvalidMargins(f"not an integer list: {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    return _parse_int_list(text, ",")


def validate(rows: Iterable[int], cols: Iterable[int]) -> MarginPair:
    rows = tuple(rows)
    cols = tuple(cols)
    if not rows or not cols:
        raise EmptyMargin("margins must be nonempty")
    for v in rows + cols:
        if isinstance(v, bool) or int(v) != v:
            raise InvalidMargins(f"margin {v!r} is not an integer")
        if v < 0:
            raise InvalidMargins(f"negative margin {v}")
    rows = tuple(int(v) for v in rows)
    cols = tuple(int(v) for v in cols)
    if sum(rows) != sum(cols):
        raise SumMismatch(f"row total {sum(rows)} != column total {sum(cols)}")
    return MarginPair(rows, cols, sum(rows))


@dataclass(frozen=True)
class BarvinokParams:
    n: int
    delta: float
    B: float
    C: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if not 0 <= self.delta < 1:
            raise DomainError(f"delta must lie in [0, 1), got {self.delta}")
        if not self.B > 0 or not self.C > 0:
            raise DomainError("B and C must be positive")
        if math.floor(self.C * self.n) < 1:
            raise DegenerateMargin(f"floor(C*n) = 0 for C={self.C}, n={self.n}")

    @property
    def n_big(self) -> int:
        """Number of large margins, floor(n**delta)."""
        return floor_power(self.n, self.delta)

    @property
    def big(self) -> int:
        return math.floor(self.B * self.C * self.n)

    @property
    def small(self) -> int:
        return math.floor(self.C * self.n)

    @property
    def size(self) -> int:
        return self.n_big + self.n

    def with_n(self, n: int) -> "BarvinokParams":
        return BarvinokParams(n, self.delta, self.B, self.C)


def floor_power(n: int, delta: float) -> int:
    # n**delta near an integer snaps to it; avoids platform-dependent floors
    with mpmath.workdps(50):
        v = mpmath.power(mpmath.mpf(n), mpmath.mpf(delta))
        k = int(mpmath.nint(v))
        if abs(v - k) < 1e-9:
            return k
        return int(mpmath.floor(v))


def barvinok_margins(params: BarvinokParams) -> MarginPair:
    big, small, k = params.big, params.small, params.n_big
    if big == 0 or small == 0:
        raise DegenerateMargin("Barvinok margins must be positive")
    side = (big,) * k + (small,) * params.n
    return MarginPair(side, side, sum(side))


def total_sum_expansion(params: BarvinokParams) -> int:
    """Exact total N = floor(Cn)*n + floor(BCn)*floor(n**delta) of the margins.

    Asymptotically N = C n^2 + B C n^(1+delta) + O(n).
    """
    return params.small * params.n + params.big * params.n_big


def is_valid(rows: Sequence[int], cols: Sequence[int]) -> bool:
    try:
        validate(rows, cols)
    except InvalidMargins:
        return False
    return True


def random_margins(rng, max_rows: int, max_cols: int, max_margin: int, min_margin: int = 1) -> MarginPair:
    """Uniform test fixture: random dimensions and margins in [min_margin, max_margin]."""
    while True:
        m = int(rng.integers(1, max_rows + 1))
        n = int(rng.integers(1, max_cols + 1))
        rows = [int(x) for x in rng.integers(min_margin, max_margin + 1, size=m)]
        N = sum(rows)
        if n * min_margin <= N <= n * max_margin:
            break
    cols = [min_margin] * n
    left = N - n * min_margin
    while left:
        open_ = [j for j in range(n) if cols[j] < max_margin]
        j = open_[int(rng.integers(len(open_)))]
        step = min(left, max_margin - cols[j], int(rng.integers(1, max(2, left // n + 1))))
        cols[j] += step
        left -= step
    return validate(rows, cols)
