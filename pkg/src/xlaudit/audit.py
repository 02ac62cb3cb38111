"""Workbook analysis report: category findings, warnings, names, checks, excess formatting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

from .distinct import find_inconsistencies
from .formula import (
    LOOKUP_FUNCTIONS,
    VOLATILE_FUNCTIONS,
    FormulaMetrics,
    LexError,
    TokenKind,
    extract_refs,
    function_calls,
    metrics,
    tokenize,
)
from .graph import DependentsIndex, build_index, find_cycle
from .model import (
    CalcMode,
    CellData,
    DefinedName,
    DocProperties,
    Geometry,
    LinkKind,
    NameKind,
    SheetKind,
    SheetModel,
    ValueKind,
    Visibility,
    WorkbookModel,
    is_hiding_format,
)
from .refs import CellAddr, RangeAddr, index_to_col, quote_sheet


class Category(str, Enum):
    LINKED_WORKBOOKS = "linked_workbooks"
    DDE_LINKS = "dde_links"
    DATA_CONNECTIONS = "data_connections"
    VISIBLE_SHEETS = "visible_sheets"
    HIDDEN_SHEETS = "hidden_sheets"
    VERY_HIDDEN_SHEETS = "very_hidden_sheets"
    ALL_FORMULAS = "all_formulas"
    ARRAY_FORMULAS = "array_formulas"
    ERROR_FORMULAS = "error_formulas"
    LOGICAL_FORMULAS = "logical_formulas"
    NUMERIC_FORMULAS = "numeric_formulas"
    DATETIME_FORMULAS = "datetime_formulas"
    TEXTUAL_FORMULAS = "textual_formulas"
    NUMERIC_CONSTANT_FORMULAS = "numeric_constant_formulas"
    TEXTUAL_CONSTANT_FORMULAS = "textual_constant_formulas"
    NESTED_IFS = "nested_ifs"
    NO_CELL_REFS = "no_cell_refs"
    BLANK_CELL_REFS = "blank_cell_refs"
    HIDDEN_CELL_REFS = "hidden_cell_refs"
    TEXT_CELL_REFS = "text_cell_refs"
    EXTERNAL_REFS = "external_refs"
    FORMATTED_AS_TEXT = "formatted_as_text"
    POSITIVE_FORMULAS = "positive_formulas"
    NEGATIVE_FORMULAS = "negative_formulas"
    UNIQUE_FORMULAS_A1 = "unique_formulas_a1"
    DUPLICATE_FORMULAS = "duplicate_formulas"
    INCONSISTENT_FORMULAS = "inconsistent_formulas"
    CELLS_WITH_DEPENDENTS = "cells_with_dependents"
    TEXTUAL_CONSTANTS = "textual_constants"
    NUMERIC_CONSTANTS = "numeric_constants"
    COMMENTS = "comments"
    VALIDATION_CRITERIA = "validation_criteria"
    CONDITIONAL_FORMATTING = "conditional_formatting"
    NUMERICS_AS_TEXT = "numerics_as_text"
    INVISIBLE_CELLS = "invisible_cells"
    USED_INPUT_CELLS = "used_input_cells"
    UNUSED_INPUT_CELLS = "unused_input_cells"
    OCCUPIED_CELLS = "occupied_cells"
    MERGED_CELLS = "merged_cells"
    BLANK_CELLS = "blank_cells"
    BLANK_REFERENCED_CELLS = "blank_referenced_cells"
    UNLOCKED_CELLS = "unlocked_cells"
    HIDDEN_ROWS_AND_COLUMNS = "hidden_rows_and_columns"
    NAMED_ITEMS = "named_items"
    NAMED_ITEMS_WITH_ERRORS = "named_items_with_errors"
    WARNINGS = "warnings"
    # extensions
    CHART_SHEETS = "chart_sheets"
    MACRO_SHEETS = "macro_sheets"
    DIALOG_SHEETS = "dialog_sheets"
    VOLATILE_FORMULAS = "volatile_formulas"
    INVISIBLE_BY_FORMAT = "invisible_by_format"
    CIRCULAR_REFERENCES = "circular_references"
    PROTECTED_SHEETS = "protected_sheets"

    @property
    def extended(self) -> bool:
        return self in _EXTENDED

    @property
    def title(self) -> str:
        return _TITLES.get(self, self.value.replace("_", " ").title())


_EXTENDED = frozenset({
    Category.CHART_SHEETS, Category.MACRO_SHEETS, Category.DIALOG_SHEETS, Category.VOLATILE_FORMULAS,
    Category.INVISIBLE_BY_FORMAT, Category.CIRCULAR_REFERENCES, Category.PROTECTED_SHEETS,
})

_TITLES = {
    Category.DDE_LINKS: "DDE Links",
    Category.DATETIME_FORMULAS: "Date/Time Formulas",
    Category.NESTED_IFS: "Nested Ifs",
    Category.EXTERNAL_REFS: "External Workbook Refs",
    Category.UNIQUE_FORMULAS_A1: "Unique Formulas (A1)",
    Category.HIDDEN_ROWS_AND_COLUMNS: "Hidden Rows and Columns",
}

DEPRECATED = frozenset({Category.UNIQUE_FORMULAS_A1})

LIMITATIONS = (
    "Data lists, pivot tables, scenarios and custom views are not inspected.",
    "References built with OFFSET or INDIRECT are not followed.",
    "Formulas are not recalculated; cached values from the file are reported.",
)


@dataclass(frozen=True)
class Finding:
    category: Category
    sheet: str | None = None
    addr: str | None = None
    formula: str | None = None
    value: str | None = None
    detail: str | None = None

    @property
    def location(self) -> str:
        if self.sheet is None:
            return self.addr or ""
        return f"{quote_sheet(self.sheet)}!{self.addr}" if self.addr else self.sheet


@dataclass(frozen=True)
class Warning:
    code: int
    message: str
    details: tuple[str, ...] = ()


WARNING_MESSAGES = {
    1: "Workbook is setup to change results to same precision as display.",
    2: "Workbook contains formulas with errors.",
    3: "Workbook contains hidden rows or columns.",
    4: "Workbook contains hidden sheets.",
    5: "Workbook contains invisible cells.",
    6: "Workbook contains unlocked cells.",
    7: "Workbook contains duplicate named ranges.",
    8: "Workbook Title has not been set.",
    9: "Workbook Author has not been set.",
    10: "Workbook is setup for R1C1 reference style.",
    11: "Workbook contains sheet names with leading and/or trailing blanks. The sheet names are:",
}


@dataclass(frozen=True)
class SummaryReport:
    properties: DocProperties
    counts: dict[Category, int]
    calc_mode: CalcMode
    iteration_enabled: bool
    precision_as_displayed: bool
    circular_reference_present: bool
    style_count: int
    has_vba: bool
    sheet_kind_counts: dict[str, int]
    limitations: tuple[str, ...] = LIMITATIONS


@dataclass(frozen=True)
class AnalysisReport:
    path: str
    summary: SummaryReport
    findings: dict[Category, list[Finding]]
    warnings: list[Warning]


# --- helpers -----------------------------------------------------------------

def _render(cell: CellData | None) -> str:
    return "" if cell is None else cell.value.render()


def _is_numeric_text(text: str) -> bool:
    t = text.strip().replace(",", "")
    if not t:
        return False
    try:
        float(t)
    except ValueError:
        return False
    return t.lower() not in ("nan", "inf", "-inf", "+inf", "infinity")


class _Context:
    """Per-model caches shared by the category builders."""

    def __init__(self, model: WorkbookModel, index: DependentsIndex | None):
        self.model = model
        self.index = index if index is not None else build_index(model)
        self.metrics: dict[CellAddr, FormulaMetrics] = {}
        self.malformed: dict[CellAddr, LexError] = {}
        self.refs: dict[CellAddr, list[RangeAddr]] = {}
        self.has_external: set[CellAddr] = set()
        for sheet in model.sheets:
            for cell in sheet.formula_cells():
                try:
                    self.metrics[cell.addr] = metrics(cell.formula_a1)
                    found = extract_refs(cell.formula_a1, cell.addr, model.names)
                except LexError as exc:
                    self.malformed[cell.addr] = exc
                    continue
                self.refs[cell.addr] = [self._canon(r) for r in found.ranges]
                if any(t.prefix is not None and t.prefix.external for t in found.unresolved):
                    self.has_external.add(cell.addr)
                elif _tokens_external(cell.formula_a1):
                    self.has_external.add(cell.addr)
        self._kind_cache: dict[tuple, bool] = {}

    def _canon(self, rng: RangeAddr) -> RangeAddr:
        sheet = self.model.sheet(rng.sheet)
        if sheet is None or sheet.name == rng.sheet:
            return rng
        return RangeAddr(sheet.name, rng.top, rng.left, rng.bottom, rng.right)

    def range_has(self, rng: RangeAddr, test: Callable[[CellData], bool], tag: str) -> bool:
        key = (tag, rng)
        if key in self._kind_cache:
            return self._kind_cache[key]
        sheet = self.model.sheet(rng.sheet)
        hit = False
        if sheet is not None:
            if rng.size <= len(sheet.cells):
                hit = any(test(c) for a in rng.cells() if (c := sheet.cell(a.row, a.col)) is not None)
            else:
                hit = any(test(c) for k, c in sheet.cells.items()
                          if rng.top <= k[0] <= rng.bottom and rng.left <= k[1] <= rng.right)
        self._kind_cache[key] = hit
        return hit

    def range_hidden(self, rng: RangeAddr) -> bool:
        sheet = self.model.sheet(rng.sheet)
        if sheet is None:
            return False
        return (any(rng.top <= r <= rng.bottom for r in sheet.hidden_rows)
                or any(rng.left <= c <= rng.right for c in sheet.hidden_cols))


def _tokens_external(formula: str) -> bool:
    try:
        return any(t.prefix is not None and t.prefix.external for t in tokenize(formula))
    except LexError:
        return False


def _cell_finding(cat: Category, cell: CellData, detail: str | None = None) -> Finding:
    return Finding(cat, cell.addr.sheet, cell.addr.a1, cell.formula_a1, _render(cell), detail)


def _blank_bands(sheet: SheetModel) -> list[tuple[RangeAddr, int]]:
    """Blank positions of the used range as row bands of identical column gaps."""
    used = sheet.used_range
    if used is None:
        return []
    occupied: dict[int, list[int]] = {}
    for (r, c), cell in sheet.cells.items():
        if cell.is_occupied:
            occupied.setdefault(r, []).append(c)

    def gaps(row: int) -> tuple[tuple[int, int], ...]:
        cols = sorted(occupied.get(row, ()))
        out, start = [], used.left
        for c in cols:
            if c > start:
                out.append((start, c - 1))
            start = c + 1
        if start <= used.right:
            out.append((start, used.right))
        return tuple(out)

    bands: list[tuple[RangeAddr, int]] = []
    prev, first = None, used.top
    for r in range(used.top, used.bottom + 2):
        g = gaps(r) if r <= used.bottom else None
        if g != prev:
            if prev:
                for left, right in prev:
                    rng = RangeAddr(sheet.name, first, left, r - 1, right)
                    bands.append((rng, rng.size))
            prev, first = g, r
    bands.sort(key=lambda b: (b[0].top, b[0].left))
    return bands


# --- analysis ----------------------------------------------------------------

def analyze(model: WorkbookModel, index: DependentsIndex | None = None) -> AnalysisReport:
    ctx = _Context(model, index)
    F: dict[Category, list[Finding]] = {c: [] for c in Category}
    add = lambda cat, f: F[cat].append(f)  # noqa: E731

    for link in model.external_links:
        cat = {LinkKind.WORKBOOK: Category.LINKED_WORKBOOKS, LinkKind.DDE: Category.DDE_LINKS,
               LinkKind.DATA_CONNECTION: Category.DATA_CONNECTIONS}[link.kind]
        add(cat, Finding(cat, value=link.target, detail=", ".join(link.found_in) or None))

    vis_cat = {Visibility.VISIBLE: Category.VISIBLE_SHEETS, Visibility.HIDDEN: Category.HIDDEN_SHEETS,
               Visibility.VERY_HIDDEN: Category.VERY_HIDDEN_SHEETS}
    kind_cat = {SheetKind.CHART: Category.CHART_SHEETS, SheetKind.MACRO: Category.MACRO_SHEETS,
                SheetKind.DIALOG: Category.DIALOG_SHEETS}
    for sheet in model.sheets:
        add(vis_cat[sheet.visibility], Finding(vis_cat[sheet.visibility], sheet.name, detail=sheet.kind.value))
        if sheet.kind in kind_cat:
            add(kind_cat[sheet.kind], Finding(kind_cat[sheet.kind], sheet.name, detail=sheet.visibility.value))
        if sheet.protected:
            add(Category.PROTECTED_SHEETS, Finding(Category.PROTECTED_SHEETS, sheet.name))

    value_cat = {ValueKind.ERROR: Category.ERROR_FORMULAS, ValueKind.BOOLEAN: Category.LOGICAL_FORMULAS,
                 ValueKind.NUMBER: Category.NUMERIC_FORMULAS, ValueKind.DATETIME: Category.DATETIME_FORMULAS,
                 ValueKind.TEXT: Category.TEXTUAL_FORMULAS}

    for sheet in model.sheets:
        a1_counts = Counter(c.formula_a1 for c in sheet.formula_cells())
        for cell in sheet.formula_cells():
            addr = cell.addr
            add(Category.ALL_FORMULAS, _cell_finding(Category.ALL_FORMULAS, cell))
            if cell.is_array_formula:
                add(Category.ARRAY_FORMULAS, _cell_finding(Category.ARRAY_FORMULAS, cell))
            if cell.value.kind in value_cat:
                cat = value_cat[cell.value.kind]
                detail = cell.value.render() if cat is Category.ERROR_FORMULAS else None
                add(cat, _cell_finding(cat, cell, detail))
            n = a1_counts[cell.formula_a1]
            if n > 1:
                add(Category.DUPLICATE_FORMULAS, _cell_finding(Category.DUPLICATE_FORMULAS, cell, f"{n} copies"))
            else:
                add(Category.UNIQUE_FORMULAS_A1, _cell_finding(Category.UNIQUE_FORMULAS_A1, cell))
            m = ctx.metrics.get(addr)
            if m is None:
                continue
            if m.numeric_constants:
                add(Category.NUMERIC_CONSTANT_FORMULAS,
                    _cell_finding(Category.NUMERIC_CONSTANT_FORMULAS, cell, f"{m.numeric_constants} constants"))
            if m.text_constants:
                add(Category.TEXTUAL_CONSTANT_FORMULAS,
                    _cell_finding(Category.TEXTUAL_CONSTANT_FORMULAS, cell, f"{m.text_constants} constants"))
            if m.nested_if_depth > 1:
                add(Category.NESTED_IFS, _cell_finding(Category.NESTED_IFS, cell, f"depth {m.nested_if_depth}"))
            if not m.has_cell_refs and not m.has_name_refs:
                add(Category.NO_CELL_REFS, _cell_finding(Category.NO_CELL_REFS, cell))
            if m.starts_with_plus:
                add(Category.POSITIVE_FORMULAS, _cell_finding(Category.POSITIVE_FORMULAS, cell))
            if m.starts_with_minus:
                add(Category.NEGATIVE_FORMULAS, _cell_finding(Category.NEGATIVE_FORMULAS, cell))
            if m.volatile:
                vol = sorted(f for f in m.functions if f in VOLATILE_FUNCTIONS)
                add(Category.VOLATILE_FORMULAS, _cell_finding(Category.VOLATILE_FORMULAS, cell, ", ".join(vol)))
            if addr in ctx.has_external:
                add(Category.EXTERNAL_REFS, _cell_finding(Category.EXTERNAL_REFS, cell))

            refs = ctx.refs.get(addr, [])
            blanks = [r for r in refs if r.size == 1 and _blank_at(model, r)]
            if blanks:
                add(Category.BLANK_CELL_REFS,
                    _cell_finding(Category.BLANK_CELL_REFS, cell, ", ".join(_loc(r, addr.sheet) for r in blanks)))
            hidden = [r for r in refs if ctx.range_hidden(r)]
            if hidden:
                add(Category.HIDDEN_CELL_REFS,
                    _cell_finding(Category.HIDDEN_CELL_REFS, cell, ", ".join(_loc(r, addr.sheet) for r in hidden)))
            texty = [r for r in refs if ctx.range_has(r, lambda c: c.value.kind is ValueKind.TEXT, "text")]
            if texty:
                add(Category.TEXT_CELL_REFS,
                    _cell_finding(Category.TEXT_CELL_REFS, cell, ", ".join(_loc(r, addr.sheet) for r in texty)))

        for inc in find_inconsistencies(sheet):
            cell = sheet.cell(inc.addr.row, inc.addr.col)
            add(Category.INCONSISTENT_FORMULAS, _cell_finding(
                Category.INCONSISTENT_FORMULAS, cell, f"expected {inc.expected_r1c1} in {inc.run.a1}"))

    for dn in model.names:
        if _tokens_external(dn.refers_to):
            add(Category.EXTERNAL_REFS, Finding(Category.EXTERNAL_REFS, dn.scope, dn.full_name, dn.refers_to,
                                                detail="defined name"))

    for sheet in model.sheets:
        occupied_keys = [k for k, c in sheet.cells.items() if c.is_occupied]
        dep_counts = ctx.index.counts(sheet.name, sorted(set(occupied_keys) | ctx.index.referenced_cells(sheet.name)))
        for key in sorted(dep_counts):
            n = dep_counts[key]
            if n:
                cell = sheet.cell(*key)
                addr = CellAddr(sheet.name, *key)
                add(Category.CELLS_WITH_DEPENDENTS, Finding(
                    Category.CELLS_WITH_DEPENDENTS, sheet.name, addr.a1,
                    cell.formula_a1 if cell else None, _render(cell), f"{n} dependent" + ("s" if n > 1 else "")))
        for cell in sheet.iter_cells():
            key = (cell.addr.row, cell.addr.col)
            hidden_pos = sheet.is_hidden_cell(*key)
            if cell.is_occupied:
                add(Category.OCCUPIED_CELLS, _cell_finding(Category.OCCUPIED_CELLS, cell))
                if hidden_pos:
                    add(Category.INVISIBLE_CELLS, _cell_finding(Category.INVISIBLE_CELLS, cell, "hidden row or column"))
                if is_hiding_format(cell.number_format):
                    add(Category.INVISIBLE_BY_FORMAT,
                        _cell_finding(Category.INVISIBLE_BY_FORMAT, cell, f"number format {cell.number_format}"))
            if cell.is_constant:
                kind = cell.value.kind
                if kind is ValueKind.TEXT:
                    add(Category.TEXTUAL_CONSTANTS, _cell_finding(Category.TEXTUAL_CONSTANTS, cell))
                    text = str(cell.value.value)
                    if _is_numeric_text(text):
                        add(Category.NUMERICS_AS_TEXT, _cell_finding(Category.NUMERICS_AS_TEXT, cell))
                    if text.lstrip().startswith("=") and (cell.entered_as_text or cell.number_format == "@"):
                        add(Category.FORMATTED_AS_TEXT, _cell_finding(Category.FORMATTED_AS_TEXT, cell))
                elif cell.value.is_numeric:
                    add(Category.NUMERIC_CONSTANTS, _cell_finding(Category.NUMERIC_CONSTANTS, cell))
                used = dep_counts.get(key, 0) > 0
                cat = Category.USED_INPUT_CELLS if used else Category.UNUSED_INPUT_CELLS
                add(cat, _cell_finding(cat, cell))
            if cell.has_comment:
                add(Category.COMMENTS, _cell_finding(
                    Category.COMMENTS, cell, f"{cell.comment_author or ''}: {cell.comment_text or ''}"))
            if cell.validation:
                add(Category.VALIDATION_CRITERIA, _cell_finding(Category.VALIDATION_CRITERIA, cell, cell.validation))
            if cell.cond_format_count:
                add(Category.CONDITIONAL_FORMATTING, _cell_finding(
                    Category.CONDITIONAL_FORMATTING, cell, f"{cell.cond_format_count} rules"))
            if not cell.locked:
                add(Category.UNLOCKED_CELLS, _cell_finding(Category.UNLOCKED_CELLS, cell))
        for area in sheet.merged_areas:
            add(Category.MERGED_CELLS, Finding(Category.MERGED_CELLS, sheet.name, area.a1,
                                               value=_render(sheet.cell(area.top, area.left)),
                                               detail=f"{area.size} cells"))
        for rng, size in _blank_bands(sheet):
            add(Category.BLANK_CELLS, Finding(Category.BLANK_CELLS, sheet.name, rng.a1, detail=f"{size} cells"))
        for r in sorted(sheet.hidden_rows):
            add(Category.HIDDEN_ROWS_AND_COLUMNS, Finding(Category.HIDDEN_ROWS_AND_COLUMNS, sheet.name,
                                                         f"{r}:{r}", detail="row"))
        for c in sorted(sheet.hidden_cols):
            col = index_to_col(c)
            add(Category.HIDDEN_ROWS_AND_COLUMNS, Finding(Category.HIDDEN_ROWS_AND_COLUMNS, sheet.name,
                                                         f"{col}:{col}", detail="column"))

    referenced_blank: dict[CellAddr, int] = {}
    for addr, refs in ctx.refs.items():
        for r in refs:
            if r.size == 1 and _blank_at(model, r):
                target = CellAddr(r.sheet, r.top, r.left)
                referenced_blank[target] = referenced_blank.get(target, 0) + 1
    order = {s.name: i for i, s in enumerate(model.sheets)}
    for target in sorted(referenced_blank, key=lambda a: (order.get(a.sheet, len(order)), a.row, a.col)):
        n = referenced_blank[target]
        add(Category.BLANK_REFERENCED_CELLS, Finding(Category.BLANK_REFERENCED_CELLS, target.sheet, target.a1,
                                                     detail=f"referenced by {n} formula" + ("s" if n > 1 else "")))

    for dn in model.names:
        add(Category.NAMED_ITEMS, Finding(Category.NAMED_ITEMS, dn.scope, dn.full_name, dn.refers_to,
                                          detail=f"{'visible' if dn.visible else 'hidden'}, {dn.kind.value}"))
        if dn.kind is NameKind.ERROR:
            add(Category.NAMED_ITEMS_WITH_ERRORS,
                Finding(Category.NAMED_ITEMS_WITH_ERRORS, dn.scope, dn.full_name, dn.refers_to))

    cycle = find_cycle(model, ctx.index)
    if cycle:
        first = cycle[0]
        cell = model.cell(first)
        add(Category.CIRCULAR_REFERENCES, Finding(
            Category.CIRCULAR_REFERENCES, first.sheet, first.a1, cell.formula_a1 if cell else None,
            _render(cell), " -> ".join(str(a) for a in [*cycle, cycle[0]])))

    warns = warnings(model, F)
    for w in warns:
        detail = ", ".join(repr(d) for d in w.details) or None
        add(Category.WARNINGS, Finding(Category.WARNINGS, value=w.message, detail=detail))

    sheet_kinds = Counter(s.kind.value for s in model.sheets)
    summary = SummaryReport(
        properties=model.properties,
        counts={c: len(F[c]) for c in Category},
        calc_mode=model.calc_mode,
        iteration_enabled=model.iteration_enabled,
        precision_as_displayed=model.precision_as_displayed,
        circular_reference_present=bool(cycle),
        style_count=model.style_count,
        has_vba=model.has_vba,
        sheet_kind_counts={k.value: sheet_kinds.get(k.value, 0) for k in SheetKind},
    )
    return AnalysisReport(model.path, summary, F, warns)


def _blank_at(model: WorkbookModel, rng: RangeAddr) -> bool:
    sheet = model.sheet(rng.sheet)
    if sheet is None:
        return False
    cell = sheet.cell(rng.top, rng.left)
    return cell is None or not cell.is_occupied


def _loc(rng: RangeAddr, home: str) -> str:
    return rng.a1 if rng.sheet == home else f"{quote_sheet(rng.sheet)}!{rng.a1}"


# --- warnings ----------------------------------------------------------------

def _duplicate_names(names: Iterable[DefinedName]) -> list[str]:
    counts = Counter(dn.name.upper() for dn in names if not dn.builtin)
    seen, out = set(), []
    for dn in names:
        key = dn.name.upper()
        if counts.get(key, 0) > 1 and key not in seen:
            seen.add(key)
            out.append(dn.name)
    return out


def warnings(model: WorkbookModel, findings: dict[Category, list[Finding]] | None = None) -> list[Warning]:
    """Evaluate the eleven workbook warnings in code order."""
    def any_cell(pred: Callable[[SheetModel, CellData], bool]) -> bool:
        return any(pred(s, c) for s in model.sheets for c in s.cells.values())

    out = []
    if model.precision_as_displayed:
        out.append(Warning(1, WARNING_MESSAGES[1]))
    if any_cell(lambda s, c: c.is_formula and c.value.kind is ValueKind.ERROR):
        out.append(Warning(2, WARNING_MESSAGES[2]))
    if any(s.hidden_rows or s.hidden_cols for s in model.sheets):
        out.append(Warning(3, WARNING_MESSAGES[3]))
    hidden = [s.name for s in model.sheets if s.visibility is not Visibility.VISIBLE]
    if hidden:
        out.append(Warning(4, WARNING_MESSAGES[4], tuple(hidden)))
    if any_cell(lambda s, c: c.is_occupied and s.is_hidden_cell(c.addr.row, c.addr.col)):
        out.append(Warning(5, WARNING_MESSAGES[5]))
    if any_cell(lambda s, c: not c.locked):
        out.append(Warning(6, WARNING_MESSAGES[6]))
    dupes = _duplicate_names(model.names)
    if dupes:
        out.append(Warning(7, WARNING_MESSAGES[7], tuple(dupes)))
    if not model.properties.title:
        out.append(Warning(8, WARNING_MESSAGES[8]))
    if not model.properties.author:
        out.append(Warning(9, WARNING_MESSAGES[9]))
    if model.r1c1_display_mode:
        out.append(Warning(10, WARNING_MESSAGES[10]))
    blanks = [s.name for s in model.sheets if s.name != s.name.strip()]
    if blanks:
        out.append(Warning(11, WARNING_MESSAGES[11], tuple(blanks)))
    return out


# --- names -------------------------------------------------------------------

@dataclass(frozen=True)
class NameFinding:
    full_name: str
    name: str
    scope: str | None
    refers_to: str
    visible: bool
    kind: NameKind
    geometry: Geometry | None
    value: str | None
    duplicate: bool
    external: bool


@dataclass(frozen=True)
class NamesReport:
    names: list[NameFinding]
    overlaps: list[tuple[str, str]]
    duplicates: list[str]


def analyze_names(model: WorkbookModel) -> NamesReport:
    dupes = {d.upper() for d in _duplicate_names(model.names)}
    rows = []
    for dn in model.names:
        value = None
        if dn.target is not None and dn.target.size == 1:
            cell = model.cell(CellAddr(dn.target.sheet, dn.target.top, dn.target.left))
            value = _render(cell)
        elif dn.kind is NameKind.ERROR:
            value = "#REF!"
        rows.append(NameFinding(
            full_name=dn.full_name, name=dn.name, scope=dn.scope, refers_to=dn.refers_to,
            visible=dn.visible, kind=dn.kind, geometry=dn.geometry, value=value,
            duplicate=dn.name.upper() in dupes, external=_tokens_external(dn.refers_to)))
    ranged = [dn for dn in model.names if dn.target is not None]
    overlaps = []
    for i, a in enumerate(ranged):
        for b in ranged[i + 1:]:
            if _same_sheet(model, a.target, b.target) and a.target.intersects(_rebase(a.target, b.target)):
                overlaps.append((a.full_name, b.full_name))
    return NamesReport(rows, overlaps, [d for d in _duplicate_names(model.names)])


def _same_sheet(model: WorkbookModel, a: RangeAddr, b: RangeAddr) -> bool:
    sa, sb = model.sheet(a.sheet), model.sheet(b.sheet)
    if sa is not None and sb is not None:
        return sa.name == sb.name
    return a.sheet == b.sheet


def _rebase(a: RangeAddr, b: RangeAddr) -> RangeAddr:
    return RangeAddr(a.sheet, b.top, b.left, b.bottom, b.right)


# --- checks ------------------------------------------------------------------

class Check(str, Enum):
    OVERFLOW_ERROR = "overflow_error"
    FORMULA_TOO_LONG = "formula_too_long"
    DOUBLE_MINUS = "double_minus"
    NUMERIC_TEXT_RIGHT_ALIGNED = "numeric_text_right_aligned"
    RANGE_LOOKUP_MISSING_4TH = "range_lookup_missing_4th"
    FORMULA_HIDDEN = "formula_hidden"
    FORMULA_UNLOCKED = "formula_unlocked"
    MALFORMED_FORMULA = "malformed_formula"


MAX_DATE_SERIAL = 2958465  # 9999-12-31


@dataclass(frozen=True)
class CheckConfig:
    max_len: int = 1024
    enabled: frozenset[Check] = frozenset(Check)

    @classmethod
    def from_mapping(cls, raw: dict | None) -> "CheckConfig":
        raw = raw or {}
        enabled = raw.get("enabled")
        return cls(
            max_len=int(raw.get("max_len", 1024)),
            enabled=frozenset(Check(e) for e in enabled) if enabled is not None else frozenset(Check),
        )


@dataclass(frozen=True)
class CheckFinding:
    check: Check
    addr: CellAddr
    detail: str


def run_checks(model: WorkbookModel, config: CheckConfig | None = None) -> list[CheckFinding]:
    config = config or CheckConfig()
    out: list[CheckFinding] = []

    def emit(check: Check, addr: CellAddr, detail: str) -> None:
        if check in config.enabled:
            out.append(CheckFinding(check, addr, detail))

    for sheet in model.sheets:
        for cell in sheet.iter_cells():
            addr = cell.addr
            if cell.value.kind is ValueKind.DATETIME:
                serial = float(cell.value.value)
                if serial < 0 or serial > MAX_DATE_SERIAL:
                    emit(Check.OVERFLOW_ERROR, addr, f"date serial {cell.value.render()} cannot be displayed")
            if cell.is_constant and cell.value.kind is ValueKind.TEXT and cell.align == "right" \
                    and _is_numeric_text(str(cell.value.value)):
                emit(Check.NUMERIC_TEXT_RIGHT_ALIGNED, addr, f"text {cell.value.value!r} is right aligned")
            if not cell.is_formula:
                continue
            formula = cell.formula_a1
            if len(formula) > config.max_len:
                emit(Check.FORMULA_TOO_LONG, addr, f"{len(formula)} characters (limit {config.max_len})")
            if sheet.protected and cell.format_hidden:
                emit(Check.FORMULA_HIDDEN, addr, "formula hidden on a protected sheet")
            if not sheet.protected and not cell.locked:
                emit(Check.FORMULA_UNLOCKED, addr, "formula cell is unlocked")
            try:
                tokens = tokenize(formula)
                m = metrics(formula)
            except LexError as exc:
                emit(Check.MALFORMED_FORMULA, addr, f"position {exc.position}: {exc.reason}")
                continue
            if m.has_double_minus:
                emit(Check.DOUBLE_MINUS, addr, "formula contains a double minus")
            sig = [t for t in tokens if t.kind is not TokenKind.WHITESPACE]
            for call in function_calls(sig):
                if call.name in LOOKUP_FUNCTIONS and call.argc == 3:
                    emit(Check.RANGE_LOOKUP_MISSING_4TH, addr, f"{call.name} has no range_lookup argument")
    return out


# --- excess formatting -------------------------------------------------------

@dataclass(frozen=True)
class ExcessFormatting:
    sheet: str
    excess_rows: tuple[RangeAddr, ...] = ()
    excess_cols: tuple[RangeAddr, ...] = ()

    @property
    def est_cells(self) -> int:
        return sum(r.size for r in self.excess_rows) + sum(r.size for r in self.excess_cols)


def detect_excess_formatting(model: WorkbookModel) -> dict[str, ExcessFormatting]:
    """Formatted-but-empty trailing bands of each sheet (reported, never removed)."""
    out = {}
    for sheet in model.sheets:
        fmt, used = sheet.formatted_range, sheet.used_range
        if fmt is None:
            out[sheet.name] = ExcessFormatting(sheet.name)
            continue
        if used is None:
            out[sheet.name] = ExcessFormatting(sheet.name, (fmt,))
            continue
        rows, cols = [], []
        if fmt.bottom > used.bottom:
            rows.append(RangeAddr(sheet.name, used.bottom + 1, fmt.left, fmt.bottom, fmt.right))
        if fmt.right > used.right:
            cols.append(RangeAddr(sheet.name, fmt.top, used.right + 1, used.bottom, fmt.right))
        out[sheet.name] = ExcessFormatting(sheet.name, tuple(rows), tuple(cols))
    return out
