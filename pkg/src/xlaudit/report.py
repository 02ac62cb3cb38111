"""Serializers turning analysis results into JSON, CSV, HTML and plain text.

Every tabular output is a flat table with a single header row.
"""

from __future__ import annotations

import base64
import csv
import html
import io
import json
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

from .model import DocProperties
from .audit import (AnalysisReport, Category, CheckFinding, ExcessFormatting, Finding, NamesReport,
                    Warning)
from .diff import DiffResult
from .distinct import GridMap
from .graph import DepGraph


@dataclass(frozen=True)
class Table:
    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    anchor: str = ""


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    return str(v)


def make_table(title: str, columns: Sequence[str], rows: Iterable[Sequence], anchor: str = "") -> Table:
    return Table(title, tuple(columns), tuple(tuple(_cell(v) for v in r) for r in rows), anchor)


def to_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def to_csv(table: Table, *, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(table.columns)
    w.writerows(table.rows)
    return buf.getvalue()


def to_text(tables: Sequence[Table]) -> str:
    out = []
    for t in tables:
        out.append(t.title)
        out.append("=" * len(t.title))
        if not t.rows:
            out.append("(none)")
            out.append("")
            continue
        widths = [max(len(c), *(len(r[i]) for r in t.rows)) for i, c in enumerate(t.columns)]
        widths = [min(w, 60) for w in widths]

        def line(vals):
            return "  ".join(v[:60].ljust(w) for v, w in zip(vals, widths)).rstrip()

        out.append(line(t.columns))
        out.append("  ".join("-" * w for w in widths))
        out.extend(line(r) for r in t.rows)
        out.append("")
    return "\n".join(out)


_STYLE = """
body{font-family:sans-serif;margin:1.5em;color:#222}
table{border-collapse:collapse;margin:.5em 0 1.5em}
th,td{border:1px solid #bbb;padding:2px 6px;font-size:13px;text-align:left;vertical-align:top}
th{background:#eee}
table.gridmap td{width:14px;height:14px;padding:0}
ul.legend{list-style:none;padding:0}
img{max-width:100%}
"""


def html_table(t: Table) -> str:
    head = "".join(f"<th>{html.escape(c)}</th>" for c in t.columns)
    body = "".join("<tr>" + "".join(f"<td>{html.escape(v)}</td>" for v in r) + "</tr>" for r in t.rows)
    anchor = f' id="{html.escape(t.anchor)}"' if t.anchor else ""
    empty = "" if t.rows else "<p>(none)</p>"
    return (f"<section{anchor}><h2>{html.escape(t.title)}</h2>{empty}"
            f"<table><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table></section>")


def html_document(title: str, parts: Sequence[str], figures: Mapping[str, bytes] | None = None) -> str:
    imgs = "".join(
        f'<figure><img alt="{html.escape(name)}" src="data:image/png;base64,'
        f'{base64.b64encode(png).decode("ascii")}"/><figcaption>{html.escape(name)}</figcaption></figure>'
        for name, png in (figures or {}).items())
    return ("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
            f"<title>{html.escape(title)}</title><style>{_STYLE}</style></head><body>"
            f"<h1>{html.escape(title)}</h1>{''.join(parts)}{imgs}</body></html>\n")


# --- analysis ----------------------------------------------------------------

def _selected(report: AnalysisReport, categories: Iterable[Category] | None) -> list[Category]:
    wanted = set(categories) if categories else None
    return [c for c in Category if (wanted is None or c in wanted) and c in report.findings]


def properties_dict(p: DocProperties) -> dict:
    out = {}
    for f in fields(p):
        v = getattr(p, f.name)
        if f.name == "custom":
            v = {k: v[k] for k in sorted(v)}
        elif hasattr(v, "isoformat"):
            v = v.isoformat()
        out[f.name] = v
    return out


def finding_dict(f: Finding) -> dict:
    return {"sheet": f.sheet, "address": f.addr, "location": f.location, "formula": f.formula,
            "value": f.value, "detail": f.detail}


def warning_dict(w: Warning) -> dict:
    return {"code": w.code, "message": w.message, "details": list(w.details)}


def excess_dict(x: ExcessFormatting) -> dict:
    return {"sheet": x.sheet, "excess_rows": [r.a1 for r in x.excess_rows],
            "excess_cols": [r.a1 for r in x.excess_cols], "est_cells": x.est_cells}


def analysis_dict(report: AnalysisReport, categories=None,
                  excess: Mapping[str, ExcessFormatting] | None = None) -> dict:
    s = report.summary
    cats = _selected(report, categories)
    props = properties_dict(s.properties)
    data = {
        "path": report.path,
        "summary": {
            "properties": props,
            "calc_mode": s.calc_mode.value,
            "iteration_enabled": s.iteration_enabled,
            "precision_as_displayed": s.precision_as_displayed,
            "circular_reference_present": s.circular_reference_present,
            "style_count": s.style_count,
            "has_vba": s.has_vba,
            "sheet_kinds": dict(s.sheet_kind_counts),
            "counts": {c.value: s.counts.get(c, 0) for c in cats},
            "limitations": list(s.limitations),
        },
        "warnings": [warning_dict(w) for w in report.warnings],
        "findings": {c.value: [finding_dict(f) for f in report.findings[c]] for c in cats},
    }
    if excess is not None:
        data["excess_formatting"] = [excess_dict(x) for x in excess.values() if x.est_cells]
    return data


FINDING_COLUMNS = ("Category", "Sheet", "Address", "Formula", "Value", "Detail")


def findings_table(report: AnalysisReport, categories=None) -> Table:
    rows = [(c.value, f.sheet, f.addr, f.formula, f.value, f.detail)
            for c in _selected(report, categories) for f in report.findings[c]]
    return make_table("Findings", FINDING_COLUMNS, rows)


def summary_table(report: AnalysisReport, categories=None) -> Table:
    s = report.summary
    props = properties_dict(s.properties)
    custom = props.pop("custom")
    rows = [(k.replace("_", " ").title(), v) for k, v in props.items() if v not in (None, "", 0)]
    rows += [(f"Custom: {k}", v) for k, v in custom.items()]
    rows += [("Calculation Mode", s.calc_mode.value), ("Iteration Enabled", s.iteration_enabled),
             ("Precision As Displayed", s.precision_as_displayed),
             ("Circular Reference Present", s.circular_reference_present),
             ("Style Count", s.style_count), ("Has VBA Project", s.has_vba)]
    rows += [(f"{k.title()} Sheets", v) for k, v in s.sheet_kind_counts.items()]
    return make_table("Summary", ("Item", "Value"), rows)


def counts_table(report: AnalysisReport, categories=None) -> Table:
    rows = [(c.title, report.summary.counts.get(c, 0)) for c in _selected(report, categories)]
    return make_table("Category Counts", ("Category", "Count"), rows)


def warnings_table(warnings: Sequence[Warning]) -> Table:
    return make_table("Warnings", ("Code", "Message", "Details"),
                      [(w.code, w.message, "; ".join(w.details)) for w in warnings])


def excess_table(excess: Mapping[str, ExcessFormatting]) -> Table:
    rows = [(x.sheet, " ".join(r.a1 for r in x.excess_rows), " ".join(r.a1 for r in x.excess_cols),
             x.est_cells) for x in excess.values() if x.est_cells]
    return make_table("Excess Formatting", ("Sheet", "Excess Rows", "Excess Columns", "Cells"), rows)


def analysis_text(report: AnalysisReport, categories=None, excess=None) -> str:
    tables = [summary_table(report), counts_table(report, categories), warnings_table(report.warnings)]
    if excess is not None:
        tables.append(excess_table(excess))
    tables.append(findings_table(report, categories))
    return to_text(tables)


def analysis_html(report: AnalysisReport, categories=None, excess=None,
                  figures: Mapping[str, bytes] | None = None) -> str:
    cats = _selected(report, categories)
    links = "".join(
        f'<tr><td><a href="#cat-{c.value}">{html.escape(c.title)}</a></td>'
        f"<td>{report.summary.counts.get(c, 0)}</td></tr>" for c in cats)
    parts = [html_table(summary_table(report)),
             '<section id="counts"><h2>Category Counts</h2><table><thead><tr><th>Category</th>'
             f"<th>Count</th></tr></thead><tbody>{links}</tbody></table></section>",
             html_table(warnings_table(report.warnings))]
    if excess is not None:
        parts.append(html_table(excess_table(excess)))
    for c in cats:
        rows = [(f.sheet, f.addr, f.formula, f.value, f.detail) for f in report.findings[c]]
        parts.append(html_table(make_table(c.title, FINDING_COLUMNS[1:], rows, anchor=f"cat-{c.value}")))
    return html_document(f"Workbook analysis: {report.path}", parts, figures)


# --- names -------------------------------------------------------------------

NAME_COLUMNS = ("Name", "Scope", "Refers To", "Visible", "Kind", "Value", "Top", "Bottom", "Height",
                "Left", "Right", "Width", "Duplicate", "External")


def names_table(report: NamesReport) -> Table:
    rows = []
    for n in report.names:
        g = n.geometry
        geo = (g.top, g.bottom, g.height, g.left, g.right, g.width) if g else ("",) * 6
        rows.append((n.full_name, n.scope or "(Workbook)", n.refers_to, n.visible, n.kind.value, n.value,
                     *geo, n.duplicate, n.external))
    return make_table("Defined Names", NAME_COLUMNS, rows)


def overlaps_table(report: NamesReport) -> Table:
    return make_table("Overlapping Names", ("Name", "Overlaps"), report.overlaps)


def names_dict(report: NamesReport) -> dict:
    t = names_table(report)
    return {"names": [dict(zip(t.columns, r)) for r in t.rows],
            "overlaps": [list(p) for p in report.overlaps], "duplicates": list(report.duplicates)}


# --- checks ------------------------------------------------------------------

CHECK_COLUMNS = ("Check", "Severity", "Location", "Detail")


def checks_table(rows: Sequence[tuple[CheckFinding, str]]) -> Table:
    from .graph import cell_id
    return make_table("Checks", CHECK_COLUMNS, [(f.check.value, sev, cell_id(f.addr), f.detail) for f, sev in rows])


def checks_dict(rows: Sequence[tuple[CheckFinding, str]], warnings: Sequence[tuple[Warning, str]]) -> dict:
    t = checks_table(rows)
    return {"checks": [dict(zip(t.columns, r)) for r in t.rows],
            "warnings": [dict(warning_dict(w), severity=s) for w, s in warnings]}


# --- diff --------------------------------------------------------------------

DIFF_COLUMNS = ("Sheet", "Range", "Old Value", "New Value", "Description")


def diff_table(result: DiffResult) -> Table:
    return make_table("Changes", DIFF_COLUMNS,
                      [(r.sheet, r.range, r.old, r.new, r.description) for r in result.records])


def diff_counts_table(result: DiffResult) -> Table:
    return make_table("Change Counts", ("Kind", "Count"), [(k, v) for k, v in result.counts.items() if v])


# --- graphs and maps ---------------------------------------------------------

def graph_tables(g: DepGraph) -> list[Table]:
    nodes = make_table("Nodes", ("Id", "Kind", "Label", "Exists"),
                       [(n.id, n.kind, n.label, "" if n.exists is None else n.exists) for n in g.nodes])
    edges = make_table("Edges", ("From", "To", "References", "Locations"),
                       [(e.source, e.target, e.ref_count, " ".join(e.locations)) for e in g.edges])
    return [nodes, edges]


def gridmap_table(gm: GridMap) -> Table:
    """Row-per-sheet-row CSV of class characters; blank for empty cells."""
    from .refs import index_to_col
    chars = {e.class_id: e.char for e in gm.legend}
    width = len(gm.matrix[0]) if gm.matrix else 0
    cols = ("Row",) + tuple(index_to_col(gm.left + j) for j in range(width))
    rows = [(gm.top + i, *("" if v is None else chars[v] for v in row)) for i, row in enumerate(gm.matrix)]
    return make_table(f"Formula map: {gm.sheet}", cols, rows)


def legend_table(gm: GridMap) -> Table:
    return make_table(f"Legend: {gm.sheet}", ("Class", "Char", "Label", "Color"),
                      [(e.class_id, e.char, e.label, e.color) for e in gm.legend])
