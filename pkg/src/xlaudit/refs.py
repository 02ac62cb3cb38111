"""Cell and range addresses in A1 notation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

MAX_ROW = 1_048_576
MAX_COL = 16_384

_A1_CELL = re.compile(r"^\$?([A-Za-z]{1,3})\$?(\d+)$")
_A1_COLS = re.compile(r"^\$?([A-Za-z]{1,3}):\$?([A-Za-z]{1,3})$")
_A1_ROWS = re.compile(r"^\$?(\d+):\$?(\d+)$")


class AddressError(ValueError):
    pass


def col_to_index(letters: str) -> int:
    """'A' -> 1, 'Z' -> 26, 'AA' -> 27."""
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - 64)
    return n


def index_to_col(index: int) -> str:
    if index < 1:
        raise AddressError(f"column index {index} out of range")
    letters = []
    while index:
        index, rem = divmod(index - 1, 26)
        letters.append(chr(65 + rem))
    return "".join(reversed(letters))


def in_grid(row: int, col: int) -> bool:
    return 1 <= row <= MAX_ROW and 1 <= col <= MAX_COL


def quote_sheet(name: str) -> str:
    """Sheet name as it must appear in a formula prefix (without the '!')."""
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", name) and not _A1_CELL.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


@dataclass(frozen=True, order=True)
class CellAddr:
    sheet: str
    row: int
    col: int

    def __post_init__(self):
        if not in_grid(self.row, self.col):
            raise AddressError(f"cell ({self.row}, {self.col}) outside the grid")

    @property
    def a1(self) -> str:
        return f"{index_to_col(self.col)}{self.row}"

    def __str__(self) -> str:
        return f"{self.sheet}!{self.a1}"

    @classmethod
    def parse(cls, sheet: str, text: str) -> "CellAddr":
        m = _A1_CELL.match(text.strip())
        if not m:
            raise AddressError(f"not an A1 cell address: {text!r}")
        return cls(sheet, int(m.group(2)), col_to_index(m.group(1)))


@dataclass(frozen=True, order=True)
class RangeAddr:
    sheet: str
    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        if not (in_grid(self.top, self.left) and in_grid(self.bottom, self.right)):
            raise AddressError("range corner outside the grid")
        if self.top > self.bottom or self.left > self.right:
            raise AddressError(f"inverted range {self.top},{self.left}:{self.bottom},{self.right}")

    @classmethod
    def from_cell(cls, addr: CellAddr) -> "RangeAddr":
        return cls(addr.sheet, addr.row, addr.col, addr.row, addr.col)

    @classmethod
    def parse(cls, sheet: str, text: str) -> "RangeAddr":
        """Parse 'A1', 'A1:C3', 'A:C' or '1:3'."""
        text = text.strip()
        m = _A1_COLS.match(text)
        if m:
            a, b = col_to_index(m.group(1)), col_to_index(m.group(2))
            return cls(sheet, 1, min(a, b), MAX_ROW, max(a, b))
        m = _A1_ROWS.match(text)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            return cls(sheet, min(a, b), 1, max(a, b), MAX_COL)
        first, _, second = text.partition(":")
        c1 = CellAddr.parse(sheet, first)
        c2 = CellAddr.parse(sheet, second) if second else c1
        return cls(sheet, min(c1.row, c2.row), min(c1.col, c2.col),
                   max(c1.row, c2.row), max(c1.col, c2.col))

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def size(self) -> int:
        return self.height * self.width

    @property
    def a1(self) -> str:
        if self.top == 1 and self.bottom == MAX_ROW:
            return f"{index_to_col(self.left)}:{index_to_col(self.right)}"
        if self.left == 1 and self.right == MAX_COL:
            return f"{self.top}:{self.bottom}"
        first = f"{index_to_col(self.left)}{self.top}"
        if self.top == self.bottom and self.left == self.right:
            return first
        return f"{first}:{index_to_col(self.right)}{self.bottom}"

    def __str__(self) -> str:
        return f"{self.sheet}!{self.a1}"

    def contains(self, addr: CellAddr) -> bool:
        return (addr.sheet == self.sheet and self.top <= addr.row <= self.bottom
                and self.left <= addr.col <= self.right)

    def intersects(self, other: "RangeAddr") -> bool:
        return (self.sheet == other.sheet and self.top <= other.bottom and other.top <= self.bottom
                and self.left <= other.right and other.left <= self.right)

    def intersection(self, other: "RangeAddr") -> "RangeAddr | None":
        if not self.intersects(other):
            return None
        return RangeAddr(self.sheet, max(self.top, other.top), max(self.left, other.left),
                         min(self.bottom, other.bottom), min(self.right, other.right))

    def cells(self) -> Iterator[CellAddr]:
        for r in range(self.top, self.bottom + 1):
            for c in range(self.left, self.right + 1):
                yield CellAddr(self.sheet, r, c)


def rectangles(cells: set[tuple[int, int]]) -> list[tuple[int, int, int, int]]:
    """Greedy row-major cover of ``cells`` by maximal disjoint rectangles.

    Returns (top, left, bottom, right) tuples in the order their top-left
    corners are met in a row-major scan.
    """
    remaining = set(cells)
    out = []
    for r, c in sorted(cells):
        if (r, c) not in remaining:
            continue
        right = c
        while (r, right + 1) in remaining:
            right += 1
        bottom = r
        while all((bottom + 1, k) in remaining for k in range(c, right + 1)):
            bottom += 1
        for rr in range(r, bottom + 1):
            for cc in range(c, right + 1):
                remaining.discard((rr, cc))
        out.append((r, c, bottom, right))
    return out
