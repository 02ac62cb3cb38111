"""Reader for XLSX/XLSM containers (Office Open XML spreadsheet packages)."""

from __future__ import annotations

import io
import posixpath
import re
import zipfile
from datetime import datetime
from types import MappingProxyType
from typing import Iterable
from xml.etree import ElementTree as ET

from .errors import CorruptContainer, NotASpreadsheet
from .formula import LexError, OutOfGrid, from_r1c1, to_r1c1, tokenize
from .links import discover_links
from .model import (
    BLANK,
    CalcMode,
    CellData,
    CellValue,
    DateSystem,
    DocProperties,
    ErrorCode,
    LinkKind,
    LinkRef,
    SheetKind,
    SheetModel,
    ValueKind,
    Visibility,
    WorkbookModel,
    bounding_range,
    is_date_format,
    make_name,
    union_range,
)
from .refs import AddressError, CellAddr, RangeAddr, quote_sheet

M = "{http://schemas.openxmlformats.org/spreadsheetml/2006/main}"
R = "{http://schemas.openxmlformats.org/officeDocument/2006/relationships}"
PR = "{http://schemas.openxmlformats.org/package/2006/relationships}"
CP = "{http://schemas.openxmlformats.org/package/2006/metadata/core-properties}"
DC = "{http://purl.org/dc/elements/1.1/}"
DCT = "{http://purl.org/dc/terms/}"
CUSTOM = "{http://schemas.openxmlformats.org/officeDocument/2006/custom-properties}"

BUILTIN_FORMATS = {
    0: "General", 1: "0", 2: "0.00", 3: "#,##0", 4: "#,##0.00", 9: "0%", 10: "0.00%",
    11: "0.00E+00", 12: "# ?/?", 13: "# ??/??", 14: "m/d/yyyy", 15: "d-mmm-yy", 16: "d-mmm",
    17: "mmm-yy", 18: "h:mm AM/PM", 19: "h:mm:ss AM/PM", 20: "h:mm", 21: "h:mm:ss",
    22: "m/d/yyyy h:mm", 37: "#,##0 ;(#,##0)", 38: "#,##0 ;[Red](#,##0)",
    39: "#,##0.00;(#,##0.00)", 40: "#,##0.00;[Red](#,##0.00)", 45: "mm:ss", 46: "[h]:mm:ss",
    47: "mmss.0", 48: "##0.0E+0", 49: "@",
}

_SHEET_KINDS = {
    "worksheet": SheetKind.WORKSHEET,
    "chartsheet": SheetKind.CHART,
    "xlMacrosheet": SheetKind.MACRO,
    "macrosheet": SheetKind.MACRO,
    "dialogsheet": SheetKind.DIALOG,
    "xlIntlMacrosheet": SheetKind.MACRO,
}

# a blank cell is kept in the model only when one of these differs from the default
_NOTABLE = ("locked", "format_hidden", "has_comment", "validation", "cond_format_count")


class _Xf:
    __slots__ = ("nf", "locked", "hidden", "align", "quote_prefix")

    def __init__(self, nf="General", locked=True, hidden=False, align=None, quote_prefix=False):
        self.nf, self.locked, self.hidden = nf, locked, hidden
        self.align, self.quote_prefix = align, quote_prefix


def _bool(v: str | None, default: bool = False) -> bool:
    if v is None:
        return default
    return v.lower() in ("1", "true")


class _Package:
    def __init__(self, data: bytes):
        try:
            self.zf = zipfile.ZipFile(io.BytesIO(data))
            bad = self.zf.testzip()
        except zipfile.BadZipFile as exc:
            raise CorruptContainer(f"bad zip archive: {exc}") from None
        if bad is not None:
            raise CorruptContainer(f"checksum error in member {bad}")
        self.names = set(self.zf.namelist())

    def has(self, part: str) -> bool:
        return part in self.names

    def xml(self, part: str) -> ET.Element | None:
        if part not in self.names:
            return None
        try:
            return ET.fromstring(self.zf.read(part))
        except ET.ParseError as exc:
            raise CorruptContainer(f"{part}: {exc}") from None

    def rels(self, part: str) -> dict[str, tuple[str, str, str]]:
        """rId -> (type suffix, resolved target, target mode)."""
        folder, base = posixpath.split(part)
        root = self.xml(posixpath.join(folder, "_rels", base + ".rels"))
        out = {}
        if root is None:
            return out
        for rel in root.iter(PR + "Relationship"):
            target = rel.get("Target", "")
            mode = rel.get("TargetMode", "Internal")
            if mode != "External":
                if target.startswith("/"):
                    target = target[1:]
                else:
                    target = posixpath.normpath(posixpath.join(folder, target))
            out[rel.get("Id")] = (rel.get("Type", "").rsplit("/", 1)[-1], target, mode)
        return out


def _text(el: ET.Element | None) -> str:
    """Concatenated text of <t> runs, skipping phonetic runs."""
    if el is None:
        return ""
    parts = []
    for child in el.iter():
        if child.tag == M + "rPh":
            continue
        if child.tag == M + "t" and child.text:
            parts.append(child.text)
    if el.find(M + "rPh") is not None:
        parts = [t.text or "" for t in el.findall(M + "t")]
        for r in el.findall(M + "r"):
            parts.extend(t.text or "" for t in r.findall(M + "t"))
    return "".join(parts)


def _timestamp(text: str | None) -> datetime | None:
    if not text:
        return None
    text = text.strip().replace("Z", "+00:00")
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return None


def _sqref(sheet: str, sqref: str) -> list[RangeAddr]:
    out = []
    for part in sqref.split():
        try:
            out.append(RangeAddr.parse(sheet, part))
        except AddressError:
            continue
    return out


def _strip_future_prefixes(formula: str) -> str:
    return re.sub(r"_xl(?:fn|ws)\.", "", formula)


def _resolve_external_indices(formula: str, books: dict[int, str]) -> str:
    """Rewrite stored '[1]Sheet!A1' prefixes to the displayed 'path[Book]Sheet' form."""
    if "[" not in formula or not books:
        return formula
    try:
        tokens = tokenize(formula)
    except LexError:
        return formula
    out = []
    for tok in tokens:
        p = tok.prefix
        if p is not None and p.book is not None and p.book.isdigit() and int(p.book) in books:
            target = books[int(p.book)]
            folder, _, book = target.replace("/", "\\").rpartition("\\")
            folder = folder + "\\" if folder else ""
            if p.sheet is None:
                new_prefix = f"{book}!"
            else:
                sheet = p.sheet + (":" + p.sheet_end if p.sheet_end else "")
                inner = f"{folder}[{book}]{sheet}"
                new_prefix = "'" + inner.replace("'", "''") + "'!"
            out.append(new_prefix + tok.text[len(p.text):])
        else:
            out.append(tok.text)
    return "".join(out)


def read_xlsx(data: bytes, path: str = "") -> WorkbookModel:
    pkg = _Package(data)
    root_rels = pkg.rels("")
    wb_part = next((t for typ, t, _ in root_rels.values() if typ == "officeDocument"), None)
    if wb_part is None and pkg.has("xl/workbook.xml"):
        wb_part = "xl/workbook.xml"
    if wb_part is None or not pkg.has(wb_part):
        raise NotASpreadsheet("package has no workbook part")
    wb = pkg.xml(wb_part)
    if wb is None or wb.tag != M + "workbook":
        raise NotASpreadsheet("main part is not a spreadsheet workbook")
    wb_rels = pkg.rels(wb_part)

    shared: list[str] = []
    xfs: list[_Xf] = [_Xf()]
    style_count = 0
    for typ, target, _ in wb_rels.values():
        if typ == "sharedStrings":
            sst = pkg.xml(target)
            if sst is not None:
                shared = [_text(si) for si in sst.findall(M + "si")]
        elif typ == "styles":
            xfs, style_count = _styles(pkg.xml(target))

    books: dict[int, str] = {}
    declared: list[LinkRef] = []
    for n, ref in enumerate(wb.findall(f"{M}externalReferences/{M}externalReference"), start=1):
        rid = ref.get(R + "id")
        if rid not in wb_rels:
            continue
        link_part = wb_rels[rid][1]
        link = pkg.xml(link_part)
        if link is None:
            continue
        dde = link.find(M + "ddeLink")
        if dde is not None:
            declared.append(LinkRef(f"{dde.get('ddeService', '')}|{dde.get('ddeTopic', '')}", LinkKind.DDE))
            continue
        ext = link.find(M + "externalBook")
        target = None
        if ext is not None:
            target_rel = pkg.rels(link_part).get(ext.get(R + "id"))
            if target_rel is not None:
                target = target_rel[1]
        if target:
            target = re.sub(r"^file:///", "", target)
            books[n] = target
            declared.append(LinkRef(target.replace("/", "\\") if "\\" in target or ":" in target else target,
                                    LinkKind.WORKBOOK))

    for typ, target, _ in wb_rels.values():
        if typ == "connections":
            conns = pkg.xml(target)
            for conn in conns.iter(M + "connection") if conns is not None else ():
                db = conn.find(M + "dbPr")
                text = db.get("connection") if db is not None else None
                declared.append(LinkRef(text or conn.get("name", ""), LinkKind.DATA_CONNECTION))

    pr = wb.find(M + "workbookPr")
    calc = wb.find(M + "calcPr")
    sheet_entries = wb.findall(f"{M}sheets/{M}sheet")
    sheet_names = [s.get("name", "") for s in sheet_entries]

    sheets = []
    for entry in sheet_entries:
        rel = wb_rels.get(entry.get(R + "id"))
        if rel is None:
            raise CorruptContainer(f"sheet {entry.get('name')!r} has no part")
        typ, target, _ = rel
        kind = _SHEET_KINDS.get(typ, SheetKind.WORKSHEET)
        state = entry.get("state", "visible")
        visibility = {"hidden": Visibility.HIDDEN, "veryHidden": Visibility.VERY_HIDDEN}.get(state, Visibility.VISIBLE)
        sheets.append(_sheet(pkg, target, entry.get("name", ""), kind, visibility, shared, xfs, books))

    names = []
    for dn in wb.findall(f"{M}definedNames/{M}definedName"):
        local = dn.get("localSheetId")
        scope = sheet_names[int(local)] if local is not None and int(local) < len(sheet_names) else None
        refers = _resolve_external_indices(_strip_future_prefixes(dn.text or ""), books)
        names.append(make_name(dn.get("name", ""), refers, scope, not _bool(dn.get("hidden"))))

    props = _properties(pkg, root_rels, len(data))
    return WorkbookModel(
        path=path,
        properties=props,
        sheets=tuple(sheets),
        names=tuple(names),
        external_links=tuple(discover_links(sheets, names, declared)),
        calc_mode=CalcMode.MANUAL if calc is not None and calc.get("calcMode") == "manual" else CalcMode.AUTOMATIC,
        iteration_enabled=calc is not None and _bool(calc.get("iterate")),
        precision_as_displayed=calc is not None and not _bool(calc.get("fullPrecision"), True),
        r1c1_display_mode=calc is not None and calc.get("refMode") == "R1C1",
        date_system=DateSystem.D1904 if pr is not None and _bool(pr.get("date1904")) else DateSystem.D1900,
        has_vba=any(n.lower().endswith("vbaproject.bin") for n in pkg.names),
        style_count=style_count,
    )


def _styles(root: ET.Element | None) -> tuple[list[_Xf], int]:
    if root is None:
        return [_Xf()], 0
    fmts = dict(BUILTIN_FORMATS)
    for nf in root.iter(M + "numFmt"):
        fmts[int(nf.get("numFmtId", 0))] = nf.get("formatCode", "General")
    xfs = []
    cell_xfs = root.find(M + "cellXfs")
    for xf in cell_xfs.findall(M + "xf") if cell_xfs is not None else ():
        prot = xf.find(M + "protection")
        align = xf.find(M + "alignment")
        xfs.append(_Xf(
            nf=fmts.get(int(xf.get("numFmtId", 0)), "General"),
            locked=_bool(prot.get("locked"), True) if prot is not None else True,
            hidden=_bool(prot.get("hidden")) if prot is not None else False,
            align=align.get("horizontal") if align is not None else None,
            quote_prefix=_bool(xf.get("quotePrefix")),
        ))
    styles = root.find(M + "cellStyles")
    count = len(styles.findall(M + "cellStyle")) if styles is not None else 0
    return xfs or [_Xf()], count


def _properties(pkg: _Package, root_rels, size: int) -> DocProperties:
    core = custom = None
    for typ, target, _ in root_rels.values():
        if typ == "core-properties" or target.endswith("core.xml"):
            core = pkg.xml(target)
        elif typ == "custom-properties":
            custom = pkg.xml(target)
    if core is None:
        core = pkg.xml("docProps/core.xml")
    if custom is None:
        custom = pkg.xml("docProps/custom.xml")

    def get(tag: str) -> str | None:
        if core is None:
            return None
        el = core.find(tag)
        return el.text if el is not None and el.text else None

    extra = {}
    if custom is not None:
        for prop in custom.iter(CUSTOM + "property"):
            value = next(iter(prop), None)
            extra[prop.get("name", "")] = value.text or "" if value is not None else ""
    return DocProperties(
        title=get(DC + "title"),
        author=get(DC + "creator"),
        last_author=get(CP + "lastModifiedBy"),
        created=_timestamp(get(DCT + "created")),
        modified=_timestamp(get(DCT + "modified")),
        last_printed=_timestamp(get(CP + "lastPrinted")),
        file_size_bytes=size,
        custom=MappingProxyType(extra),
    )


def _cell_value(c: ET.Element, typ: str | None, nf: str, shared: list[str]) -> CellValue:
    v = c.find(M + "v")
    raw = v.text if v is not None else None
    if typ == "inlineStr":
        return CellValue(ValueKind.TEXT, _text(c.find(M + "is")))
    if raw is None:
        return BLANK
    if typ == "s":
        try:
            return CellValue(ValueKind.TEXT, shared[int(raw)])
        except (IndexError, ValueError):
            raise CorruptContainer(f"bad shared string index {raw!r}") from None
    if typ in ("str",):
        return CellValue(ValueKind.TEXT, raw)
    if typ == "b":
        return CellValue(ValueKind.BOOLEAN, raw.strip() in ("1", "true"))
    if typ == "e":
        try:
            return CellValue(ValueKind.ERROR, ErrorCode.parse(raw))
        except ValueError:
            return CellValue(ValueKind.TEXT, raw)
    if typ == "d":
        return CellValue(ValueKind.TEXT, raw)
    try:
        x = float(raw)
    except ValueError:
        raise CorruptContainer(f"non-numeric cell value {raw!r}") from None
    return CellValue(ValueKind.DATETIME if is_date_format(nf) else ValueKind.NUMBER, x)


def _sheet(pkg: _Package, part: str, name: str, kind: SheetKind, visibility: Visibility,
           shared: list[str], xfs: list[_Xf], books: dict[int, str]) -> SheetModel:
    root = pkg.xml(part)
    if root is None:
        raise CorruptContainer(f"missing sheet part {part}")
    if kind is SheetKind.CHART:
        return SheetModel(name=name, kind=kind, visibility=visibility,
                          protected=_protected(root))

    attrs: dict[tuple[int, int], dict] = {}
    formatted: set[tuple[int, int]] = set()
    shared_masters: dict[str, tuple[str, CellAddr]] = {}
    shared_pending: list[tuple[tuple[int, int], str]] = []
    arrays: list[tuple[RangeAddr, str]] = []
    hidden_rows: set[int] = set()
    hidden_cols: set[int] = set()

    for col in root.iter(M + "col"):
        if _bool(col.get("hidden")):
            hidden_cols.update(range(int(col.get("min", 1)), int(col.get("max", 1)) + 1))

    for row in root.iter(M + "row"):
        if _bool(row.get("hidden")) and row.get("r"):
            hidden_rows.add(int(row.get("r")))
        for c in row.findall(M + "c"):
            ref = c.get("r")
            try:
                addr = CellAddr.parse(name, ref)
            except (AddressError, TypeError):
                raise CorruptContainer(f"{part}: bad cell reference {ref!r}") from None
            key = (addr.row, addr.col)
            formatted.add(key)
            xf = xfs[int(c.get("s", 0))] if int(c.get("s", 0)) < len(xfs) else xfs[0]
            value = _cell_value(c, c.get("t"), xf.nf, shared)
            entry = {"addr": addr, "value": value, "number_format": xf.nf, "locked": xf.locked,
                     "format_hidden": xf.hidden, "align": xf.align, "entered_as_text": xf.quote_prefix}
            f = c.find(M + "f")
            if f is not None:
                ftype = f.get("t", "normal")
                text = f.text
                if ftype == "shared":
                    si = f.get("si")
                    if text:
                        formula = "=" + _resolve_external_indices(_strip_future_prefixes(text), books)
                        shared_masters[si] = (formula, addr)
                        entry["formula_a1"] = formula
                    else:
                        shared_pending.append((key, si))
                elif text is not None:
                    formula = "=" + _resolve_external_indices(_strip_future_prefixes(text), books)
                    entry["formula_a1"] = formula
                    if ftype == "array":
                        entry["is_array_formula"] = True
                        arrays.append((RangeAddr.parse(name, f.get("ref", ref)), formula))
            attrs[key] = entry

    for key, si in shared_pending:
        if si not in shared_masters:
            raise CorruptContainer(f"{part}: shared formula {si} has no master")
        formula, anchor = shared_masters[si]
        target = attrs[key]["addr"]
        try:
            attrs[key]["formula_a1"] = from_r1c1(to_r1c1(formula, anchor), target)
        except (LexError, OutOfGrid):
            attrs[key]["formula_a1"] = formula
    for rng, formula in arrays:
        for addr in rng.cells():
            key = (addr.row, addr.col)
            if key in attrs and "formula_a1" not in attrs[key]:
                attrs[key]["formula_a1"] = formula
                attrs[key]["is_array_formula"] = True

    merged = []
    for mc in root.iter(M + "mergeCell"):
        merged.extend(_sqref(name, mc.get("ref", "")))

    for cf in root.iter(M + "conditionalFormatting"):
        rules = len(cf.findall(M + "cfRule")) or 1
        for rng in _sqref(name, cf.get("sqref", "")):
            for key in _keys_in(attrs, rng):
                attrs[key]["cond_format_count"] = attrs[key].get("cond_format_count", 0) + rules
    for dv in root.iter(M + "dataValidation"):
        f1 = dv.find(M + "formula1")
        desc = dv.get("type", "any") + (f": {f1.text}" if f1 is not None and f1.text else "")
        for rng in _sqref(name, dv.get("sqref", "")):
            for key in _keys_in(attrs, rng):
                attrs[key]["validation"] = desc

    sheet_rels = pkg.rels(part)
    for typ, target, _ in sheet_rels.values():
        if typ != "comments":
            continue
        croot = pkg.xml(target)
        if croot is None:
            continue
        authors = [a.text or "" for a in croot.iter(M + "author")]
        for cm in croot.iter(M + "comment"):
            try:
                addr = CellAddr.parse(name, cm.get("ref", ""))
            except AddressError:
                continue
            key = (addr.row, addr.col)
            entry = attrs.setdefault(key, {"addr": addr})
            formatted.add(key)
            aid = int(cm.get("authorId", -1))
            entry["has_comment"] = True
            entry["comment_author"] = authors[aid] if 0 <= aid < len(authors) else None
            entry["comment_text"] = _text(cm.find(M + "text"))

    cells = {}
    for key, entry in attrs.items():
        cell = CellData(**entry)
        if cell.is_occupied or any(getattr(cell, f) != getattr(_DEFAULT_CELL, f) for f in _NOTABLE):
            cells[key] = cell
    used = bounding_range(name, cells)
    return SheetModel(
        name=name,
        kind=kind,
        visibility=visibility,
        cells=MappingProxyType(dict(sorted(cells.items()))),
        merged_areas=tuple(merged),
        hidden_rows=frozenset(hidden_rows),
        hidden_cols=frozenset(hidden_cols),
        protected=_protected(root),
        used_range=used,
        formatted_range=union_range(bounding_range(name, formatted), used),
    )


def _protected(root: ET.Element) -> bool:
    prot = root.find(M + "sheetProtection")
    return prot is not None and _bool(prot.get("sheet"))


_DEFAULT_CELL = CellData(addr=CellAddr("x", 1, 1))


def _keys_in(attrs: dict, rng: RangeAddr) -> Iterable[tuple[int, int]]:
    if rng.size <= len(attrs):
        return [(a.row, a.col) for a in rng.cells() if (a.row, a.col) in attrs]
    return [k for k in attrs if rng.top <= k[0] <= rng.bottom and rng.left <= k[1] <= rng.right]
