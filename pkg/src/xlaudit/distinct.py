"""Distinct-formula grouping, block starts, inconsistency runs and formula maps."""

from __future__ import annotations

import colorsys
import html
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator

from .formula import LexError, OutOfGrid, complexity, to_r1c1
from .model import CellData, SheetModel, ValueKind
from .refs import CellAddr, RangeAddr, rectangles

Key = tuple[int, int]


@dataclass(frozen=True)
class DistinctGroup:
    sheet: str
    r1c1_root: str
    representative_a1: str
    members: tuple[CellAddr, ...]
    areas: tuple[RangeAddr, ...]
    is_array: bool = False

    @property
    def count(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class BlockStart:
    addr: CellAddr
    r1c1_root: str
    frequency: int
    complexity: int
    formula_a1: str = ""


@dataclass(frozen=True)
class Inconsistency:
    addr: CellAddr
    expected_r1c1: str
    actual_r1c1: str
    run: RangeAddr


@dataclass(frozen=True)
class Ambiguous:
    """A run with no strict-majority root; cells are not flagged individually."""

    run: RangeAddr
    roots: tuple[tuple[str, int], ...]


def _array_anchor(sheet: SheetModel, cell: CellData) -> CellAddr:
    # array formulas are stored once per block; anchor at the block's top-left cell
    r, c = cell.addr.row, cell.addr.col

    def same(rr: int, cc: int) -> bool:
        other = sheet.cell(rr, cc)
        return other is not None and other.is_array_formula and other.formula_a1 == cell.formula_a1

    while r > 1 and same(r - 1, c):
        r -= 1
    while c > 1 and same(r, c - 1):
        c -= 1
    return CellAddr(sheet.name, r, c)


def r1c1_forms(sheet: SheetModel) -> dict[Key, tuple[str, bool]]:
    """Canonical R1C1 text and array flag of every well-formed formula cell."""
    out: dict[Key, tuple[str, bool]] = {}
    for cell in sheet.formula_cells():
        anchor = _array_anchor(sheet, cell) if cell.is_array_formula else cell.addr
        try:
            text = to_r1c1(cell.formula_a1, anchor).r1c1
        except (LexError, OutOfGrid):
            continue
        out[(cell.addr.row, cell.addr.col)] = (text, cell.is_array_formula)
    return out


def group_distinct(sheet: SheetModel) -> list[DistinctGroup]:
    forms = r1c1_forms(sheet)
    buckets: dict[tuple[str, bool], list[Key]] = {}
    for key in sorted(forms):
        buckets.setdefault(forms[key], []).append(key)
    groups = []
    for (root, is_array), keys in buckets.items():
        first = sheet.cells[keys[0]]
        areas = tuple(RangeAddr(sheet.name, *rect) for rect in rectangles(set(keys)))
        groups.append(DistinctGroup(
            sheet=sheet.name,
            r1c1_root=root,
            representative_a1=first.formula_a1,
            members=tuple(CellAddr(sheet.name, r, c) for r, c in keys),
            areas=areas,
            is_array=is_array,
        ))
    return groups


def _run_length(forms: dict[Key, tuple[str, bool]], start: Key, dr: int, dc: int) -> int:
    root = forms[start]
    n, (r, c) = 1, start
    while forms.get((r + dr * n, c + dc * n)) == root:
        n += 1
    return n


def block_starts(sheet: SheetModel) -> list[BlockStart]:
    forms = r1c1_forms(sheet)
    out = []
    for key in sorted(forms):
        r, c = key
        if forms.get((r - 1, c)) == forms[key] or forms.get((r, c - 1)) == forms[key]:
            continue
        down = _run_length(forms, key, 1, 0)
        freq = down if down > 1 else _run_length(forms, key, 0, 1)
        cell = sheet.cells[key]
        try:
            score = complexity(cell.formula_a1.lstrip("{").rstrip("}") if cell.is_array_formula else cell.formula_a1)
        except LexError:
            score = 1
        out.append(BlockStart(cell.addr, forms[key][0], freq, score, cell.formula_a1))
    return out


def _runs(keys: set[Key], vertical: bool) -> Iterator[list[Key]]:
    """Maximal straight runs of contiguous keys, column-wise or row-wise."""
    major = (lambda k: (k[1], k[0])) if vertical else (lambda k: k)
    ordered = sorted(keys, key=major)
    run: list[Key] = []
    for k in ordered:
        if run:
            p = run[-1]
            adjacent = (k[1] == p[1] and k[0] == p[0] + 1) if vertical else (k[0] == p[0] and k[1] == p[1] + 1)
            if not adjacent:
                yield run
                run = []
        run.append(k)
    if run:
        yield run


def _scan(sheet: SheetModel, min_run: int) -> tuple[list[Inconsistency], list[Ambiguous]]:
    forms = r1c1_forms(sheet)
    found: dict[Key, Inconsistency] = {}
    ambiguous: list[Ambiguous] = []
    for vertical in (True, False):
        for run in _runs(set(forms), vertical):
            if len(run) < min_run:
                continue
            rng = RangeAddr(sheet.name, run[0][0], run[0][1], run[-1][0], run[-1][1])
            tally = Counter(forms[k][0] for k in run)
            root, votes = tally.most_common(1)[0]
            if votes * 2 <= len(run):
                ambiguous.append(Ambiguous(rng, tuple(sorted(tally.items()))))
                continue
            for k in run:
                actual = forms[k][0]
                if actual != root and k not in found:
                    found[k] = Inconsistency(CellAddr(sheet.name, *k), root, actual, rng)
    return [found[k] for k in sorted(found)], ambiguous


def find_inconsistencies(sheet: SheetModel, min_run: int = 3) -> list[Inconsistency]:
    return _scan(sheet, min_run)[0]


def ambiguous_runs(sheet: SheetModel, min_run: int = 3) -> list[Ambiguous]:
    return _scan(sheet, min_run)[1]


# --- formula maps ------------------------------------------------------------

class Coloring(str, Enum):
    DISTINCT_GROUP = "distinct_group"
    DATA_TYPE = "data_type"
    DEPENDENTS_COUNT = "dependents_count"


CLASS_CHARS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"


@dataclass(frozen=True)
class LegendEntry:
    class_id: int
    char: str
    label: str
    color: str


@dataclass(frozen=True)
class GridMap:
    sheet: str
    top: int
    left: int
    matrix: tuple[tuple[int | None, ...], ...]
    legend: tuple[LegendEntry, ...]
    coloring: Coloring = Coloring.DISTINCT_GROUP

    @property
    def area(self) -> RangeAddr | None:
        if not self.matrix:
            return None
        return RangeAddr(self.sheet, self.top, self.left,
                         self.top + len(self.matrix) - 1, self.left + len(self.matrix[0]) - 1)

    def class_at(self, addr: CellAddr) -> int | None:
        r, c = addr.row - self.top, addr.col - self.left
        if 0 <= r < len(self.matrix) and 0 <= c < len(self.matrix[r]):
            return self.matrix[r][c]
        return None

    def to_json(self) -> dict:
        area = self.area
        return {
            "sheet": self.sheet,
            "coloring": self.coloring.value,
            "range": area.a1 if area else None,
            "matrix": [list(row) for row in self.matrix],
            "legend": [{"class": e.class_id, "char": e.char, "label": e.label, "color": e.color}
                       for e in self.legend],
        }

    def to_text(self) -> str:
        chars = {e.class_id: e.char for e in self.legend}
        lines = ["".join("." if v is None else chars[v] for v in row) for row in self.matrix]
        if self.legend:
            lines.append("")
            lines.extend(f"{e.char}  {e.label}" for e in self.legend)
        return "\n".join(lines) + "\n"

    def to_html(self) -> str:
        from .refs import index_to_col

        colors = {e.class_id: e.color for e in self.legend}
        rows = []
        if self.matrix:
            head = "".join(f"<th>{index_to_col(self.left + j)}</th>" for j in range(len(self.matrix[0])))
            rows.append(f"<tr><th></th>{head}</tr>")
        for i, row in enumerate(self.matrix):
            cells = "".join(
                "<td></td>" if v is None else f'<td class="c{v}" style="background:{colors[v]}"></td>'
                for v in row)
            rows.append(f"<tr><th>{self.top + i}</th>{cells}</tr>")
        legend = "".join(
            f'<li><span style="background:{e.color}">&nbsp;{html.escape(e.char)}&nbsp;</span> '
            f"{html.escape(e.label)}</li>" for e in self.legend)
        return (f'<table class="gridmap"><caption>{html.escape(self.sheet)}</caption>'
                f"{''.join(rows)}</table><ul class=\"legend\">{legend}</ul>")


def class_color(i: int) -> str:
    """Distinct, stable pastel color for class ``i`` (golden-ratio hue spacing)."""
    hue = (i * 0.618033988749895) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.72, 0.65)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def _data_type_label(cell: CellData) -> str:
    origin = "formula" if cell.is_formula else "constant"
    kind = cell.value.kind
    if kind is ValueKind.BLANK:
        kind_text = "blank"
    else:
        kind_text = kind.value
    return f"{origin}: {kind_text}"


def formula_map(sheet: SheetModel, coloring: Coloring | str = Coloring.DISTINCT_GROUP,
                index=None) -> GridMap:
    """Color-class matrix over the sheet's used range.

    ``index`` (a dependents index from :mod:`xlaudit.graph`) is required for
    ``dependents_count`` coloring.
    """
    coloring = Coloring(coloring)
    used = sheet.used_range
    if used is None:
        return GridMap(sheet.name, 1, 1, (), (), coloring)

    label_of: Callable[[CellData], str]
    if coloring is Coloring.DISTINCT_GROUP:
        forms = r1c1_forms(sheet)

        def label_of(cell: CellData) -> str:
            key = (cell.addr.row, cell.addr.col)
            if key in forms:
                root, is_array = forms[key]
                return ("{" + root + "}") if is_array else root
            return "malformed formula" if cell.is_formula else "constant"
    elif coloring is Coloring.DATA_TYPE:
        label_of = _data_type_label
    else:
        if index is None:
            raise ValueError("dependents_count coloring needs a dependents index")

        def label_of(cell: CellData) -> str:
            n = index.count(cell.addr)
            return f"{n} dependent" + ("" if n == 1 else "s")

    ids: dict[str, int] = {}
    matrix = []
    for r in range(used.top, used.bottom + 1):
        row: list[int | None] = []
        for c in range(used.left, used.right + 1):
            cell = sheet.cell(r, c)
            if cell is None or not cell.is_occupied:
                row.append(None)
                continue
            label = label_of(cell)
            row.append(ids.setdefault(label, len(ids)))
        matrix.append(tuple(row))
    legend = tuple(
        LegendEntry(i, CLASS_CHARS[i] if i < len(CLASS_CHARS) else "#", label, class_color(i))
        for label, i in ids.items())
    return GridMap(sheet.name, used.top, used.left, tuple(matrix), legend, coloring)
