"""Structural workbook comparison with SysGen classification.

Sheets are paired by exact name. Within a pair, rows and columns are aligned
by a weighted longest common subsequence over content signatures, then every
aligned cell pair is classified.
"""

from __future__ import annotations

import difflib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Sequence

from .formula import REF_KINDS, LexError, Token, canonical, remap_tokens, skeleton, tokenize
from .model import (CellData, CellValue, DefinedName, LinkKind, SheetModel, ValueKind,
                    WorkbookModel, format_general)
from .numfmt import format_number
from .refs import MAX_COL, MAX_ROW, CellAddr, index_to_col

# full DP is quadratic; above this many signature pairs fall back to exact matching
DP_LIMIT = 250_000


class ChangeKind(str, Enum):
    STRUCTURAL_COL_INSERT = "structural_col_insert"
    STRUCTURAL_COL_DELETE = "structural_col_delete"
    STRUCTURAL_ROW_INSERT = "structural_row_insert"
    STRUCTURAL_ROW_DELETE = "structural_row_delete"
    SHEET_INSERT = "sheet_insert"
    SHEET_DELETE = "sheet_delete"
    FORMULA = "formula"
    SYSGEN_FORMULA = "sysgen_formula"
    ENTERED_VALUE = "entered_value"
    CALCULATED_VALUE = "calculated_value"
    CELL_FORMAT = "cell_format"
    PROTECTION = "protection"
    NAME_CHANGED = "name_changed"
    SYSGEN_NAME = "sysgen_name"
    MACRO_PRESENCE = "macro_presence"
    CONNECTION = "connection"

    @property
    def sysgen(self) -> bool:
        return self in (ChangeKind.SYSGEN_FORMULA, ChangeKind.SYSGEN_NAME)

    @property
    def structural(self) -> bool:
        return self.value.startswith("structural_") or self.value.startswith("sheet_")

    @property
    def mirror(self) -> "ChangeKind":
        """Kind of the same change seen from the other direction."""
        swaps = {"insert": "delete", "delete": "insert"}
        head, _, tail = self.value.rpartition("_")
        if tail in swaps:
            return ChangeKind(f"{head}_{swaps[tail]}")
        return self


_KIND_ORDER = {k: i for i, k in enumerate(ChangeKind)}


@dataclass(frozen=True)
class ChangeRecord:
    sheet: str
    range: str
    kind: ChangeKind
    old: str | None
    new: str | None
    description: str

    @property
    def sysgen(self) -> bool:
        return self.kind.sysgen

    def to_dict(self) -> dict:
        return {"sheet": self.sheet, "range": self.range, "kind": self.kind.value,
                "old": self.old, "new": self.new, "description": self.description,
                "sysgen": self.sysgen}


@dataclass(frozen=True)
class DiffOptions:
    """Comparison switches.

    ``include_sysgen`` is the master switch for system-generated changes.
    ``sysgen_formulas`` and ``sysgen_names`` refine it per family; their
    defaults reproduce the usual export where reference renumbering in
    formulas is hidden but built-in name adjustments are shown.
    """

    include_sysgen: bool = True
    sysgen_formulas: bool = False
    sysgen_names: bool = True
    case_sensitive_values: bool = True
    compare_formats: bool = False

    def keeps(self, kind: ChangeKind) -> bool:
        if kind is ChangeKind.SYSGEN_FORMULA:
            return self.include_sysgen and self.sysgen_formulas
        if kind is ChangeKind.SYSGEN_NAME:
            return self.include_sysgen and self.sysgen_names
        return True


@dataclass(frozen=True)
class DiffResult:
    records: tuple[ChangeRecord, ...]
    counts: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records], "counts": dict(self.counts),
                "total": len(self.records)}


# --- alignment ----------------------------------------------------------------

@dataclass(frozen=True)
class Alignment:
    row_map: Mapping[int, int]
    col_map: Mapping[int, int]
    inserted_rows: tuple[int, ...] = ()
    deleted_rows: tuple[int, ...] = ()
    inserted_cols: tuple[int, ...] = ()
    deleted_cols: tuple[int, ...] = ()
    old_rows: int = 0
    old_cols: int = 0
    new_rows: int = 0
    new_cols: int = 0

    @classmethod
    def identity(cls, rows: int = 0, cols: int = 0) -> "Alignment":
        return cls(MappingProxyType({r: r for r in range(1, rows + 1)}),
                   MappingProxyType({c: c for c in range(1, cols + 1)}),
                   old_rows=rows, old_cols=cols, new_rows=rows, new_cols=cols)

    def map_row(self, r: int) -> int | None:
        return _map_index(r, self.row_map, self.old_rows, self.new_rows, MAX_ROW)

    def map_col(self, c: int) -> int | None:
        return _map_index(c, self.col_map, self.old_cols, self.new_cols, MAX_COL)

    def inverse(self) -> "Alignment":
        return Alignment(MappingProxyType({v: k for k, v in self.row_map.items()}),
                         MappingProxyType({v: k for k, v in self.col_map.items()}),
                         self.deleted_rows, self.inserted_rows, self.deleted_cols, self.inserted_cols,
                         self.new_rows, self.new_cols, self.old_rows, self.old_cols)


def _map_index(i: int, mapping: Mapping[int, int], old_n: int, new_n: int, limit: int) -> int | None:
    if i <= old_n:
        return mapping.get(i)
    # past the aligned extent everything shifts by the net insert/delete count
    j = i + new_n - old_n
    return j if 1 <= j <= limit else None


def _span(lo: int, hi: int, mapper, old_n: int) -> tuple[int, int] | None:
    """Map an inclusive index span, shrinking past deleted endpoints."""
    a = lo
    while a <= hi and a <= old_n and mapper(a) is None:
        a += 1
    b = hi
    while b >= a and b <= old_n and mapper(b) is None:
        b -= 1
    if a > hi or b < a:
        return None
    na, nb = mapper(a), mapper(b)
    if na is None or nb is None:
        return None
    return na, nb


def _content(cell: CellData) -> str | None:
    if cell.formula_a1 is not None:
        return "=" + skeleton(cell.formula_a1)
    if cell.value.is_blank:
        return None
    return f"{cell.value.kind.value}:{cell.value.render()}"


def _weight(a: Counter, b: Counter) -> int:
    """Match weight of two signatures, or 0 when they are too dissimilar to pair."""
    na, nb = sum(a.values()), sum(b.values())
    if na == 0 and nb == 0:
        return 1
    shared = sum((a & b).values())
    if 2 * shared < max(na, nb):
        return 0
    return shared + 1


def _lcs(a: Sequence[Counter], b: Sequence[Counter]) -> list[tuple[int, int]]:
    """Weighted LCS; returns matched (i, j) pairs, ties broken toward the earliest match."""
    pairs: list[tuple[int, int]] = []
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        pairs.append((lo, lo))
        lo += 1
    hi_a, hi_b = len(a), len(b)
    tail = []
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
        tail.append((hi_a, hi_b))
    mid_a, mid_b = a[lo:hi_a], b[lo:hi_b]
    n, m = len(mid_a), len(mid_b)
    if n and m:
        if n * m <= DP_LIMIT:
            middle = _lcs_dp(mid_a, mid_b)
        else:
            keys_a = [frozenset(x.items()) for x in mid_a]
            keys_b = [frozenset(x.items()) for x in mid_b]
            sm = difflib.SequenceMatcher(None, keys_a, keys_b, autojunk=False)
            middle = [(blk.a + k, blk.b + k) for blk in sm.get_matching_blocks() for k in range(blk.size)]
        pairs.extend((i + lo, j + lo) for i, j in middle)
    pairs.extend(reversed(tail))
    return _pair_gaps(pairs, len(a), len(b))


def _pair_gaps(pairs: list[tuple[int, int]], n: int, m: int) -> list[tuple[int, int]]:
    """Pair equal-length unmatched runs between the same anchors: edited, not replaced."""
    out = []
    prev = (-1, -1)
    for nxt in pairs + [(n, m)]:
        ga, gb = nxt[0] - prev[0] - 1, nxt[1] - prev[1] - 1
        if ga == gb:
            out.extend((prev[0] + k, prev[1] + k) for k in range(1, ga + 1))
        if nxt != (n, m):
            out.append(nxt)
        prev = nxt
    return out


def _lcs_dp(a: Sequence[Counter], b: Sequence[Counter]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    w = [[_weight(x, y) for y in b] for x in a]
    # suffix table so the forward walk can prefer the earliest match
    s = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below, wi = s[i], s[i + 1], w[i]
        for j in range(m - 1, -1, -1):
            best = below[j] if below[j] > row[j + 1] else row[j + 1]
            if wi[j] and wi[j] + below[j + 1] > best:
                best = wi[j] + below[j + 1]
            row[j] = best
    out = []
    i = j = 0
    while i < n and j < m:
        if w[i][j] and s[i][j] == w[i][j] + s[i + 1][j + 1]:
            out.append((i, j))
            i += 1
            j += 1
        elif s[i][j] == s[i + 1][j]:
            i += 1
        else:
            j += 1
    return out


def _extent(sheet: SheetModel) -> tuple[int, int]:
    u = sheet.used_range
    return (u.bottom, u.right) if u is not None else (0, 0)


def _grid(sheet: SheetModel, rows: int, cols: int) -> dict[tuple[int, int], str]:
    out = {}
    for (r, c), cell in sheet.cells.items():
        if r <= rows and c <= cols:
            token = _content(cell)
            if token is not None:
                out[(r, c)] = token
    return out


def _signatures(grid, n: int, axis: int, tag=None) -> list[Counter]:
    sigs = [Counter() for _ in range(n)]
    other = 1 - axis
    for key, token in grid.items():
        t = key[other] if tag is None else tag(key[other])
        sigs[key[axis] - 1][token if tag is None else (t, token)] += 1
    return sigs


def _as_map(pairs) -> dict[int, int]:
    return {i + 1: j + 1 for i, j in pairs}


def align(old: SheetModel, new: SheetModel) -> Alignment:
    """Align rows and columns of two versions of a sheet.

    LCS ties are broken toward the earliest match, which depends on argument
    order; aligning in a content-defined orientation keeps ``align(b, a)``
    exactly the inverse of ``align(a, b)``.
    """
    orows, ocols = _extent(old)
    nrows, ncols = _extent(new)
    og, ng = _grid(old, orows, ocols), _grid(new, nrows, ncols)
    if (nrows, ncols, sorted(ng.items())) < (orows, ocols, sorted(og.items())):
        return _align(ng, og, nrows, ncols, orows, ocols).inverse()
    return _align(og, ng, orows, ocols, nrows, ncols)


def _align(og, ng, orows: int, ocols: int, nrows: int, ncols: int) -> Alignment:

    col_map = _as_map(_lcs(_signatures(og, ocols, 1), _signatures(ng, ncols, 1)))
    row_map = _as_map(_lcs(
        _signatures(og, orows, 0, tag=lambda c: col_map.get(c, ("old", c))),
        _signatures(ng, nrows, 0, tag=lambda c: c)))
    col_map = _as_map(_lcs(
        _signatures(og, ocols, 1, tag=lambda r: row_map.get(r, ("old", r))),
        _signatures(ng, ncols, 1, tag=lambda r: r)))

    def unmapped(n: int, used) -> tuple[int, ...]:
        return tuple(i for i in range(1, n + 1) if i not in used)

    return Alignment(
        MappingProxyType(row_map), MappingProxyType(col_map),
        inserted_rows=unmapped(nrows, set(row_map.values())),
        deleted_rows=unmapped(orows, row_map),
        inserted_cols=unmapped(ncols, set(col_map.values())),
        deleted_cols=unmapped(ocols, col_map),
        old_rows=orows, old_cols=ocols, new_rows=nrows, new_cols=ncols,
    )


# --- SysGen ------------------------------------------------------------------

def _strip_array(f: str) -> str:
    return f[1:-1] if f.startswith("{") and f.endswith("}") else f


def _remapper(default_sheet: str, alignments: Mapping[str, Alignment]):
    lowered = {k.lower(): v for k, v in alignments.items()}

    def remap(tok: Token) -> Token | None:
        p = tok.prefix
        if p is not None and (p.external or p.is_3d):
            return tok
        sheet = p.sheet if p is not None else default_sheet
        al = alignments.get(sheet) or lowered.get((sheet or "").lower())
        if al is None:
            return tok
        s, e = tok.start, tok.end
        if e is None:
            r, c = al.map_row(s.row), al.map_col(s.col)
            if r is None or c is None:
                return None
            return replace(tok, start=replace(s, row=r, col=c))
        new_s, new_e = s, e
        if s.row is not None:
            lo, hi = sorted((s.row, e.row))
            got = _span(lo, hi, al.map_row, al.old_rows)
            if got is None:
                return None
            a, b = got if s.row <= e.row else got[::-1]
            new_s, new_e = replace(new_s, row=a), replace(new_e, row=b)
        if s.col is not None:
            lo, hi = sorted((s.col, e.col))
            got = _span(lo, hi, al.map_col, al.old_cols)
            if got is None:
                return None
            a, b = got if s.col <= e.col else got[::-1]
            new_s, new_e = replace(new_s, col=a), replace(new_e, col=b)
        return replace(tok, start=new_s, end=new_e)

    return remap


def remap_formula(formula: str, anchor: CellAddr,
                  alignment: Alignment | Mapping[str, Alignment]) -> str:
    """Render ``formula`` with every reference adjusted for the alignment's inserts and deletes."""
    alignments = alignment if isinstance(alignment, Mapping) else {anchor.sheet: alignment}
    tokens = tokenize(_strip_array(formula))
    return "".join(t.text for t in remap_tokens(tokens, _remapper(anchor.sheet, alignments)))


def classify_sysgen(old_formula: str, new_formula: str, old_anchor: CellAddr, new_anchor: CellAddr,
                    alignment: Alignment | Mapping[str, Alignment]) -> bool:
    """True when ``new_formula`` is exactly what reference adjustment makes of ``old_formula``."""
    try:
        tokenize(_strip_array(new_formula))
        adjusted = remap_formula(old_formula, old_anchor, alignment)
    except LexError:
        return False
    return adjusted == _strip_array(new_formula)


# --- comparison --------------------------------------------------------------

def render_value(cell: CellData | None) -> str:
    """Formatted text plus raw value for numbers, e.g. ``10 (9.75)``."""
    if cell is None:
        return ""
    v = cell.value
    if v.is_numeric:
        return f"{format_number(v.value, cell.number_format)} ({format_general(v.value)})"
    return v.render()


def _same_value(a: CellValue, b: CellValue, case_sensitive: bool) -> bool:
    if a.kind is not b.kind:
        return False
    if a.kind is ValueKind.TEXT and not case_sensitive:
        return str(a.value).casefold() == str(b.value).casefold()
    return a.value == b.value


def _same_formula(a: str, b: str) -> bool:
    if a == b:
        return True
    try:
        return canonical(tokenize(_strip_array(a))) == canonical(tokenize(_strip_array(b))) \
            and a.startswith("{") == b.startswith("{")
    except LexError:
        return False


def _format_key(cell: CellData | None) -> tuple:
    if cell is None:
        return ("General", True, False, None)
    return (cell.number_format or "General", cell.locked, cell.format_hidden, cell.align)


def _cell_records(name: str, old: SheetModel, new: SheetModel, al: Alignment,
                  alignments: Mapping[str, Alignment], opts: DiffOptions) -> list[tuple[tuple, ChangeRecord]]:
    inv = al.inverse()
    pairs: dict[tuple[int, int], tuple[CellData | None, CellData | None]] = {}
    for (r, c), cell in old.cells.items():
        nr, nc = al.map_row(r), al.map_col(c)
        if nr is not None and nc is not None:
            pairs[(nr, nc)] = (cell, new.cells.get((nr, nc)))
    for (r, c), cell in new.cells.items():
        if (r, c) in pairs:
            continue
        if inv.map_row(r) is not None and inv.map_col(c) is not None:
            pairs[(r, c)] = (None, cell)

    out = []

    def emit(kind: ChangeKind, key, old_text, new_text, desc):
        a1 = CellAddr(name, *key).a1
        out.append(((_KIND_ORDER[kind], key), ChangeRecord(name, a1, kind, old_text, new_text, desc)))

    for key in sorted(pairs):
        oc, nc = pairs[key]
        of = oc.formula_a1 if oc is not None else None
        nf = nc.formula_a1 if nc is not None else None
        ov = oc.value if oc is not None else CellValue()
        nv = nc.value if nc is not None else CellValue()
        if of is None and nf is None:
            if not _same_value(ov, nv, opts.case_sensitive_values):
                emit(ChangeKind.ENTERED_VALUE, key, render_value(oc), render_value(nc),
                     "Entered Value Changed.")
        elif of is not None and nf is not None:
            if not _same_formula(of, nf):
                old_addr = CellAddr(name, inv.map_row(key[0]), inv.map_col(key[1]))
                sysgen = classify_sysgen(of, nf, old_addr, CellAddr(name, *key), alignments)
                if sysgen:
                    emit(ChangeKind.SYSGEN_FORMULA, key, of, nf, "Formula Changed By System.")
                else:
                    emit(ChangeKind.FORMULA, key, of, nf, "Formula Changed.")
            if not _same_value(ov, nv, opts.case_sensitive_values):
                emit(ChangeKind.CALCULATED_VALUE, key, render_value(oc), render_value(nc),
                     "Calculated Value Changed.")
        else:
            emit(ChangeKind.FORMULA, key, of if of is not None else render_value(oc),
                 nf if nf is not None else render_value(nc), "Formula Changed.")
        if opts.compare_formats and _format_key(oc) != _format_key(nc):
            emit(ChangeKind.CELL_FORMAT, key, ", ".join(map(str, _format_key(oc))),
                 ", ".join(map(str, _format_key(nc))), "Cell Format Changed.")
    return out


def _structural_records(name: str, al: Alignment) -> list[tuple[tuple, ChangeRecord]]:
    out = []
    spec = ((ChangeKind.STRUCTURAL_COL_INSERT, al.inserted_cols, "Added Column {}."),
            (ChangeKind.STRUCTURAL_COL_DELETE, al.deleted_cols, "Deleted Column {}."),
            (ChangeKind.STRUCTURAL_ROW_INSERT, al.inserted_rows, "Added Row {}."),
            (ChangeKind.STRUCTURAL_ROW_DELETE, al.deleted_rows, "Deleted Row {}."))
    for kind, indices, template in spec:
        is_col = "col" in kind.value
        for i in indices:
            label = index_to_col(i) if is_col else str(i)
            out.append(((_KIND_ORDER[kind], (i, 0)),
                        ChangeRecord(name, "", kind, None, None, template.format(label))))
    return out


def _name_key(dn: DefinedName) -> tuple[str, str]:
    return ((dn.scope or "").lower(), dn.name.lower())


def _name_records(old: WorkbookModel, new: WorkbookModel,
                  alignments: Mapping[str, Alignment]) -> list[ChangeRecord]:
    olds = {_name_key(n): n for n in old.names}
    news = {_name_key(n): n for n in new.names}
    out = []
    for key in sorted(set(olds) | set(news)):
        o, n = olds.get(key), news.get(key)
        ref = n or o
        sheet = ref.scope or ""
        if o is None:
            out.append(ChangeRecord(sheet, n.name, ChangeKind.NAME_CHANGED, None, n.refers_to,
                                    f"Named Item: {n.name} Added."))
        elif n is None:
            out.append(ChangeRecord(sheet, o.name, ChangeKind.NAME_CHANGED, o.refers_to, None,
                                    f"Named Item: {o.name} Deleted."))
        elif not _same_formula(o.refers_to, n.refers_to):
            anchor_sheet = o.scope or (old.sheets[0].name if old.sheets else "")
            anchor = CellAddr(anchor_sheet, 1, 1)
            if o.builtin and classify_sysgen(o.refers_to, n.refers_to, anchor, anchor, alignments):
                out.append(ChangeRecord(sheet, n.name, ChangeKind.SYSGEN_NAME, o.refers_to, n.refers_to,
                                        f"Named Item: {n.name} Definition Changed By System."))
            else:
                out.append(ChangeRecord(sheet, n.name, ChangeKind.NAME_CHANGED, o.refers_to, n.refers_to,
                                        f"Named Item: {n.name} Definition Changed."))
    return out


def _connections(model: WorkbookModel) -> set[str]:
    return {link.target for link in model.external_links if link.kind is LinkKind.DATA_CONNECTION}


def _presence(flag: bool) -> str:
    return "present" if flag else "absent"


def compare(old: WorkbookModel, new: WorkbookModel, opts: DiffOptions | None = None) -> DiffResult:
    """Classified, deterministically ordered differences from ``old`` to ``new``."""
    opts = opts or DiffOptions()
    new_names = [s.name for s in new.sheets]
    old_names = [s.name for s in old.sheets]
    paired = [n for n in new_names if n in old_names]
    order = {n: i for i, n in enumerate(new_names)}
    for n in old_names:
        order.setdefault(n, len(order))

    def work(name: str):
        o, n = old.sheet(name), new.sheet(name)
        return name, o, n, align(o, n)

    if len(paired) > 1:
        with ThreadPoolExecutor() as pool:
            aligned = list(pool.map(work, paired))
    else:
        aligned = [work(n) for n in paired]
    alignments = {name: al for name, _, _, al in aligned}

    keyed: list[tuple[tuple, ChangeRecord]] = []
    for name in new_names:
        if name not in old_names:
            keyed.append(((order[name], _KIND_ORDER[ChangeKind.SHEET_INSERT], (0, 0)),
                          ChangeRecord(name, "", ChangeKind.SHEET_INSERT, None, None, f"Added Sheet {name}.")))
    for name in old_names:
        if name not in new_names:
            keyed.append(((order[name], _KIND_ORDER[ChangeKind.SHEET_DELETE], (0, 0)),
                          ChangeRecord(name, "", ChangeKind.SHEET_DELETE, None, None, f"Deleted Sheet {name}.")))
    for name, o, n, al in aligned:
        local = _structural_records(name, al) + _cell_records(name, o, n, al, alignments, opts)
        keyed.extend(((order[name],) + k, rec) for k, rec in local)
        if o.protected != n.protected:
            keyed.append(((order[name], _KIND_ORDER[ChangeKind.PROTECTION], (0, 0)),
                          ChangeRecord(name, "", ChangeKind.PROTECTION,
                                       "protected" if o.protected else "unprotected",
                                       "protected" if n.protected else "unprotected",
                                       "Sheet Protection Changed.")))

    tail = len(order)
    for i, rec in enumerate(_name_records(old, new, alignments)):
        pos = order.get(rec.sheet, tail) if rec.sheet else tail
        keyed.append(((pos, _KIND_ORDER[rec.kind], (i, 0)), rec))
    if old.has_vba != new.has_vba:
        keyed.append(((tail, _KIND_ORDER[ChangeKind.MACRO_PRESENCE], (0, 0)),
                      ChangeRecord("", "", ChangeKind.MACRO_PRESENCE, _presence(old.has_vba),
                                   _presence(new.has_vba),
                                   "VBA Project Added." if new.has_vba else "VBA Project Removed.")))
    oc, nc = _connections(old), _connections(new)
    for i, target in enumerate(sorted(oc ^ nc)):
        added = target in nc
        keyed.append(((tail, _KIND_ORDER[ChangeKind.CONNECTION], (i, 0)),
                      ChangeRecord("", target, ChangeKind.CONNECTION, None if added else target,
                                   target if added else None,
                                   "Data Connection Added." if added else "Data Connection Removed.")))

    keyed.sort(key=lambda kr: kr[0])
    records = tuple(rec for _, rec in keyed if opts.keeps(rec.kind))
    tally = Counter(r.kind for r in records)
    counts = {k.value: tally.get(k, 0) for k in ChangeKind}
    return DiffResult(records, MappingProxyType(counts))
