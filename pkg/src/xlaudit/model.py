"""Immutable in-memory workbook model shared by every analysis module."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from types import MappingProxyType
from typing import Iterator, Mapping

from .formula import LexError, TokenKind, tokenize, token_range
from .refs import CellAddr, RangeAddr


class ErrorCode(str, Enum):
    DIV0 = "#DIV/0!"
    NA = "#N/A"
    NAME = "#NAME?"
    NULL = "#NULL!"
    NUM = "#NUM!"
    REF = "#REF!"
    VALUE = "#VALUE!"

    @classmethod
    def parse(cls, text: str) -> "ErrorCode":
        for code in cls:
            if code.value == text.strip().upper():
                return code
        raise ValueError(f"unknown error literal {text!r}")


class ValueKind(str, Enum):
    BLANK = "blank"
    NUMBER = "number"
    TEXT = "text"
    BOOLEAN = "boolean"
    ERROR = "error"
    DATETIME = "datetime"


@dataclass(frozen=True)
class CellValue:
    kind: ValueKind = ValueKind.BLANK
    value: float | str | bool | ErrorCode | None = None

    @property
    def is_blank(self) -> bool:
        return self.kind is ValueKind.BLANK

    @property
    def is_numeric(self) -> bool:
        return self.kind in (ValueKind.NUMBER, ValueKind.DATETIME)

    def render(self) -> str:
        if self.kind is ValueKind.BLANK:
            return ""
        if self.kind is ValueKind.ERROR:
            return self.value.value
        if self.kind is ValueKind.BOOLEAN:
            return "TRUE" if self.value else "FALSE"
        if self.is_numeric:
            return format_general(self.value)
        return str(self.value)


BLANK = CellValue()


def number(x: float) -> CellValue:
    return CellValue(ValueKind.NUMBER, float(x))


def text(s: str) -> CellValue:
    return CellValue(ValueKind.TEXT, s)


def format_general(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


_DATE_STRIP = re.compile(r'"[^"]*"|\\.|\[(?!h\]|m\]|s\]|hh\]|mm\]|ss\])[^\]]*\]', re.IGNORECASE)


def is_date_format(nf: str) -> bool:
    """True when a number format displays values as dates or times."""
    if not nf or nf.lower() == "general":
        return False
    core = _DATE_STRIP.sub("", nf.split(";")[0])
    return bool(re.search(r"[dmyhs]", core, re.IGNORECASE)) and "@" not in core


def is_hiding_format(nf: str) -> bool:
    """Custom formats whose sections are all empty (";;;") display nothing."""
    parts = nf.split(";")
    return len(parts) >= 3 and all(not p.strip() for p in parts)


class SheetKind(str, Enum):
    WORKSHEET = "worksheet"
    CHART = "chart"
    MACRO = "macro"
    DIALOG = "dialog"


class Visibility(str, Enum):
    VISIBLE = "visible"
    HIDDEN = "hidden"
    VERY_HIDDEN = "very_hidden"


class NameKind(str, Enum):
    RANGE = "range"
    FORMULA = "formula"
    ERROR = "error"


class LinkKind(str, Enum):
    WORKBOOK = "workbook"
    DDE = "dde"
    DATA_CONNECTION = "data_connection"


@dataclass(frozen=True)
class DocProperties:
    title: str | None = None
    author: str | None = None
    last_author: str | None = None
    created: datetime | None = None
    modified: datetime | None = None
    last_printed: datetime | None = None
    file_size_bytes: int = 0
    custom: Mapping[str, str] = field(default_factory=lambda: MappingProxyType({}))


@dataclass(frozen=True)
class CellData:
    addr: CellAddr
    value: CellValue = BLANK
    formula_a1: str | None = None
    is_array_formula: bool = False
    number_format: str = "General"
    locked: bool = True
    format_hidden: bool = False
    entered_as_text: bool = False
    has_comment: bool = False
    comment_author: str | None = None
    comment_text: str | None = None
    validation: str | None = None
    cond_format_count: int = 0
    align: str | None = None

    @property
    def is_formula(self) -> bool:
        return self.formula_a1 is not None

    @property
    def is_constant(self) -> bool:
        return self.formula_a1 is None and not self.value.is_blank

    @property
    def is_occupied(self) -> bool:
        return self.formula_a1 is not None or not self.value.is_blank


@dataclass(frozen=True)
class SheetModel:
    name: str
    kind: SheetKind = SheetKind.WORKSHEET
    visibility: Visibility = Visibility.VISIBLE
    cells: Mapping[tuple[int, int], CellData] = field(default_factory=lambda: MappingProxyType({}))
    merged_areas: tuple[RangeAddr, ...] = ()
    hidden_rows: frozenset[int] = frozenset()
    hidden_cols: frozenset[int] = frozenset()
    protected: bool = False
    used_range: RangeAddr | None = None
    formatted_range: RangeAddr | None = None

    def cell(self, row: int, col: int) -> CellData | None:
        return self.cells.get((row, col))

    def formula_cells(self) -> Iterator[CellData]:
        for key in sorted(self.cells):
            c = self.cells[key]
            if c.formula_a1 is not None:
                yield c

    def iter_cells(self) -> Iterator[CellData]:
        for key in sorted(self.cells):
            yield self.cells[key]

    def is_hidden_cell(self, row: int, col: int) -> bool:
        return row in self.hidden_rows or col in self.hidden_cols


@dataclass(frozen=True)
class Geometry:
    top: int
    bottom: int
    height: int
    left: int
    right: int
    width: int


@dataclass(frozen=True)
class DefinedName:
    name: str
    refers_to: str
    scope: str | None = None  # None = workbook scope, else the owning sheet name
    visible: bool = True
    kind: NameKind = NameKind.FORMULA
    geometry: Geometry | None = None
    target: RangeAddr | None = None

    @property
    def full_name(self) -> str:
        if self.scope is None:
            return self.name
        from .refs import quote_sheet
        return f"{quote_sheet(self.scope)}!{self.name}"

    @property
    def builtin(self) -> bool:
        return self.name.lower().startswith("_xlnm.")


def make_name(name: str, refers_to: str, scope: str | None = None, visible: bool = True) -> DefinedName:
    """Build a DefinedName, classifying it and computing geometry for single-area ranges."""
    if not refers_to.startswith("="):
        refers_to = "=" + refers_to
    try:
        tokens = [t for t in tokenize(refers_to) if t.kind is not TokenKind.WHITESPACE]
    except LexError:
        return DefinedName(name, refers_to, scope, visible, NameKind.ERROR)
    body = tokens[1:]
    if any(t.kind is TokenKind.ERROR and t.bare.upper() == "#REF!" for t in body):
        return DefinedName(name, refers_to, scope, visible, NameKind.ERROR)
    refs = [t for t in body if t.is_ref]
    only_refs = body and all(t.is_ref or t.kind is TokenKind.ARG_SEP
                             or (t.kind is TokenKind.PAREN) for t in body)
    if refs and only_refs and not any(t.prefix and (t.prefix.external or t.prefix.is_3d) for t in refs):
        if len(refs) == 1:
            rng = token_range(refs[0], scope or "")
            geo = Geometry(rng.top, rng.bottom, rng.height, rng.left, rng.right, rng.width)
            return DefinedName(name, refers_to, scope, visible, NameKind.RANGE, geo, rng)
        return DefinedName(name, refers_to, scope, visible, NameKind.RANGE)
    return DefinedName(name, refers_to, scope, visible, NameKind.FORMULA)


@dataclass(frozen=True)
class LinkRef:
    target: str
    kind: LinkKind = LinkKind.WORKBOOK
    found_in: tuple[str, ...] = ()
    target_exists: bool | None = None


class CalcMode(str, Enum):
    AUTOMATIC = "automatic"
    MANUAL = "manual"


class DateSystem(str, Enum):
    D1900 = "d1900"
    D1904 = "d1904"


@dataclass(frozen=True)
class WorkbookModel:
    path: str = ""
    properties: DocProperties = DocProperties()
    sheets: tuple[SheetModel, ...] = ()
    names: tuple[DefinedName, ...] = ()
    external_links: tuple[LinkRef, ...] = ()
    calc_mode: CalcMode = CalcMode.AUTOMATIC
    iteration_enabled: bool = False
    precision_as_displayed: bool = False
    r1c1_display_mode: bool = False
    date_system: DateSystem = DateSystem.D1900
    has_vba: bool = False
    style_count: int = 0

    def sheet(self, name: str) -> SheetModel | None:
        for s in self.sheets:
            if s.name == name:
                return s
        lowered = name.lower()
        for s in self.sheets:
            if s.name.lower() == lowered:
                return s
        return None

    def sheet_index(self, name: str) -> int:
        for i, s in enumerate(self.sheets):
            if s.name == name:
                return i
        return len(self.sheets)

    def cell(self, addr: CellAddr) -> CellData | None:
        sheet = self.sheet(addr.sheet)
        return None if sheet is None else sheet.cell(addr.row, addr.col)


def bounding_range(sheet: str, keys) -> RangeAddr | None:
    keys = list(keys)
    if not keys:
        return None
    rows = [r for r, _ in keys]
    cols = [c for _, c in keys]
    return RangeAddr(sheet, min(rows), min(cols), max(rows), max(cols))


def union_range(a: RangeAddr | None, b: RangeAddr | None) -> RangeAddr | None:
    if a is None:
        return b
    if b is None:
        return a
    return RangeAddr(a.sheet, min(a.top, b.top), min(a.left, b.left),
                     max(a.bottom, b.bottom), max(a.right, b.right))
