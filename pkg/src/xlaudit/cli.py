"""Command-line entry point: ``xlaudit analyze|map|graph|diff|names|check``.

Exit status is 0 when clean, 1 when a ``--severity-gate`` is hit and 2 on usage
or operational errors. Output goes to stdout unless ``--out`` is given or the
``XLAUDIT_OUT_DIR`` environment variable names a default directory.
"""

from __future__ import annotations

import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, Iterable

import click

from . import report as rp
from .audit import Category, analyze, analyze_names, detect_excess_formatting, run_checks, warnings
from .config import Config, ConfigError, Severity, load_config
from .diff import DiffOptions, compare
from .distinct import Coloring, formula_map
from .errors import LoadError
from .graph import Direction, RootNotFound, build_index, cell_graph, workbook_graph, worksheet_graph
from .loader import load_workbook
from .model import NameKind, SheetKind, WorkbookModel
from .refs import AddressError, CellAddr

OUT_DIR_ENV = "XLAUDIT_OUT_DIR"
FORMATS = ("json", "csv", "html", "text")
_EXT = {"json": "json", "csv": "csv", "html": "html", "text": "txt"}


class OperationalError(click.ClickException):
    exit_code = 2


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write via a temp file in the same directory, then rename over the target."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _umask() -> int:
    current = os.umask(0)
    os.umask(current)
    return current


class Emitter:
    """Resolves the output destination and writes the main artifact plus figures."""

    def __init__(self, command: str, stem: str, fmt: str, out: str | None, figures: bool):
        self.fmt = fmt
        self.path: Path | None = None
        if out:
            self.path = Path(out)
        elif os.environ.get(OUT_DIR_ENV):
            self.path = Path(os.environ[OUT_DIR_ENV]) / f"{stem}.{command}.{_EXT[fmt]}"
        self.figures = figures and self.path is not None

    def emit(self, text: str, figures: Callable[[], dict[str, bytes]] | None = None) -> None:
        if self.path is None:
            click.echo(text, nl=False)
            return
        atomic_write(self.path, text)
        if self.figures and figures is not None:
            for name, png in figures().items():
                atomic_write(self.path.with_name(f"{self.path.stem}.{name}.png"), png)


def _load(path: str, password: str | None) -> WorkbookModel:
    try:
        return load_workbook(path, {path: password} if password else None)
    except LoadError as exc:
        raise OperationalError(f"{type(exc).__name__}: {exc}") from None
    except OSError as exc:
        raise OperationalError(str(exc)) from None


def _config(path: str | None) -> Config:
    try:
        return load_config(path)
    except (ConfigError, OSError) as exc:
        raise OperationalError(str(exc)) from None


def _gate(gate: str | None, severities: Iterable[Severity]) -> None:
    if gate is None:
        return
    threshold = Severity(gate)
    if any(s.at_least(threshold) for s in severities):
        sys.exit(1)


def _common(f):
    f = click.option("--format", "fmt", type=click.Choice(FORMATS), default="text", show_default=True)(f)
    f = click.option("--out", type=click.Path(dir_okay=False), help="Output file (default: stdout).")(f)
    f = click.option("--figures/--no-figures", default=True,
                     help="Write PNG figures next to --out.")(f)
    f = click.option("--password", help="Password for an encrypted workbook.")(f)
    return f


_gate_option = click.option("--severity-gate", type=click.Choice([s.value for s in Severity]),
                            help="Exit 1 when any result is at or above this severity.")
_config_option = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                              help="YAML severity/threshold config.")


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Static auditing of Excel workbooks."""


@main.command("analyze")
@click.argument("book", type=click.Path(exists=True, dir_okay=False))
@_common
@_gate_option
@_config_option
@click.option("--category", "categories", multiple=True, type=click.Choice([c.value for c in Category]),
              help="Restrict findings to these categories (repeatable).")
def analyze_cmd(book, fmt, out, figures, password, severity_gate, config_path, categories):
    """Workbook summary, warnings and per-category findings."""
    config = _config(config_path)
    model = _load(book, password)
    result = analyze(model)
    excess = detect_excess_formatting(model)
    cats = [Category(c) for c in categories] or None

    def figs():
        from .plots import bar_chart
        counts = {c.title: result.summary.counts.get(c, 0) for c in Category
                  if cats is None or c in cats}
        return {"categories": bar_chart("Findings per category", counts)}

    if fmt == "json":
        text = rp.to_json(rp.analysis_dict(result, cats, excess))
    elif fmt == "csv":
        text = rp.to_csv(rp.findings_table(result, cats))
    elif fmt == "html":
        text = rp.analysis_html(result, cats, excess, figs() if figures else None)
    else:
        text = rp.analysis_text(result, cats, excess)
    Emitter("analyze", Path(book).stem, fmt, out, figures).emit(text, figs)

    selected = [c for c in Category if c in result.findings and (cats is None or c in cats)]
    sev = [config.category(c) for c in selected if result.findings[c]]
    if cats is None or Category.WARNINGS in cats:
        sev += [config.warnings for _ in result.warnings]
    _gate(severity_gate, sev)


@main.command("map")
@click.argument("book", type=click.Path(exists=True, dir_okay=False))
@_common
@click.option("--sheet", "sheets", multiple=True, help="Sheet to map (repeatable; default all worksheets).")
@click.option("--coloring", type=click.Choice([c.value for c in Coloring]), default="distinct_group",
              show_default=True)
def map_cmd(book, fmt, out, figures, password, sheets, coloring):
    """Formula map: one character per cell class with a legend."""
    model = _load(book, password)
    if sheets:
        missing = [s for s in sheets if model.sheet(s) is None]
        if missing:
            raise OperationalError(f"no such sheet: {', '.join(missing)}")
        chosen = [model.sheet(s) for s in sheets]
    else:
        chosen = [s for s in model.sheets if s.kind is SheetKind.WORKSHEET]
    index = build_index(model) if coloring == Coloring.DEPENDENTS_COUNT.value else None
    maps = [formula_map(s, coloring, index) for s in chosen]

    def figs():
        from .plots import gridmap_png
        return {f"map{i + 1}": gridmap_png(gm) for i, gm in enumerate(maps)}

    if fmt == "json":
        text = rp.to_json([gm.to_json() for gm in maps])
    elif fmt == "csv":
        from .refs import index_to_col
        rows = []
        for gm in maps:
            labels = {e.class_id: e for e in gm.legend}
            for i, row in enumerate(gm.matrix):
                for j, v in enumerate(row):
                    if v is not None:
                        e = labels[v]
                        rows.append((gm.sheet, f"{index_to_col(gm.left + j)}{gm.top + i}", v, e.char, e.label))
        text = rp.to_csv(rp.make_table("Map", ("Sheet", "Cell", "Class", "Char", "Label"), rows))
    elif fmt == "html":
        text = rp.html_document(f"Formula map: {book}", [gm.to_html() for gm in maps])
    else:
        text = "\n".join(f"{gm.sheet}\n{gm.to_text()}" for gm in maps)
    Emitter("map", Path(book).stem, fmt, out, figures).emit(text, figs)


def parse_root(text: str, model: WorkbookModel) -> CellAddr:
    sheet, sep, a1 = text.rpartition("!")
    if not sep:
        if not model.sheets:
            raise OperationalError("workbook has no sheets")
        sheet = model.sheets[0].name
    elif sheet.startswith("'") and sheet.endswith("'"):
        sheet = sheet[1:-1].replace("''", "'")
    try:
        return CellAddr.parse(sheet, a1)
    except AddressError as exc:
        raise click.BadParameter(str(exc), param_hint="--root") from None


@main.command("graph")
@click.argument("book", type=click.Path(exists=True, dir_okay=False))
@_common
@click.option("--level", type=click.Choice(["workbook", "worksheet", "cell"]), default="worksheet",
              show_default=True)
@click.option("--root", help="Root cell for --level cell, e.g. \"'Oct 06'!G11\".")
@click.option("--direction", type=click.Choice([d.value for d in Direction]), default="precedents",
              show_default=True)
@click.option("--max-depth", type=click.IntRange(0), default=5, show_default=True)
@click.option("--max-nodes", type=click.IntRange(1), default=5000, show_default=True)
@click.option("--link-check/--no-link-check", default=False, help="Probe external link targets on disk.")
def graph_cmd(book, fmt, out, figures, password, level, root, direction, max_depth, max_nodes, link_check):
    """Dependency graph at workbook, worksheet or cell level (text output is DOT)."""
    model = _load(book, password)
    if level == "cell":
        if not root:
            raise click.UsageError("--root is required with --level cell")
        try:
            g = cell_graph(model, parse_root(root, model), direction, max_depth=max_depth, max_nodes=max_nodes)
        except RootNotFound as exc:
            raise OperationalError(f"root not found: {exc}") from None
    elif level == "workbook":
        g = workbook_graph(model, link_check=link_check)
    else:
        g = worksheet_graph(model)

    def figs():
        from .plots import graph_png
        return {"graph": graph_png(g)}

    if fmt == "json":
        text = g.to_json() + "\n"
    elif fmt == "csv":
        text = rp.to_csv(rp.graph_tables(g)[1])
    elif fmt == "html":
        text = rp.html_document(f"{level.title()} graph: {book}", [rp.html_table(t) for t in rp.graph_tables(g)])
    else:
        text = g.to_dot()
    Emitter("graph", Path(book).stem, fmt, out, figures).emit(text, figs)


@main.command("diff")
@click.argument("old", type=click.Path(exists=True, dir_okay=False))
@click.argument("new", type=click.Path(exists=True, dir_okay=False))
@_common
@click.option("--sysgen/--no-sysgen", default=True, help="Include system-generated changes at all.")
@click.option("--sysgen-formulas/--no-sysgen-formulas", default=False, show_default=True)
@click.option("--sysgen-names/--no-sysgen-names", default=True, show_default=True)
@click.option("--ignore-case", is_flag=True, help="Compare text values case-insensitively.")
@click.option("--compare-formats", is_flag=True, help="Also report number format/protection changes.")
def diff_cmd(old, new, fmt, out, figures, password, sysgen, sysgen_formulas, sysgen_names, ignore_case,
             compare_formats):
    """Cell-by-cell comparison of two workbooks."""
    a, b = _load(old, password), _load(new, password)
    opts = DiffOptions(include_sysgen=sysgen, sysgen_formulas=sysgen_formulas, sysgen_names=sysgen_names,
                       case_sensitive_values=not ignore_case, compare_formats=compare_formats)
    result = compare(a, b, opts)

    def figs():
        from .plots import bar_chart
        return {"changes": bar_chart("Changes by kind", dict(result.counts))}

    if fmt == "json":
        text = rp.to_json(result.to_dict())
    elif fmt == "csv":
        text = rp.to_csv(rp.diff_table(result))
    elif fmt == "html":
        text = rp.html_document(f"Comparison: {old} -> {new}",
                                [rp.html_table(rp.diff_counts_table(result)), rp.html_table(rp.diff_table(result))])
    else:
        text = rp.to_text([rp.diff_table(result), rp.diff_counts_table(result)])
        text += f"Total Displayed Items: {len(result)}\n"
    Emitter("diff", Path(new).stem, fmt, out, figures).emit(text, figs)


@main.command("names")
@click.argument("book", type=click.Path(exists=True, dir_okay=False))
@_common
@_gate_option
@_config_option
def names_cmd(book, fmt, out, figures, password, severity_gate, config_path):
    """All defined names, including hidden ones, with geometry and overlaps."""
    config = _config(config_path)
    model = _load(book, password)
    result = analyze_names(model)
    if fmt == "json":
        text = rp.to_json(rp.names_dict(result))
    elif fmt == "csv":
        text = rp.to_csv(rp.names_table(result))
    elif fmt == "html":
        text = rp.html_document(f"Names: {book}", [rp.html_table(rp.names_table(result)),
                                                   rp.html_table(rp.overlaps_table(result))])
    else:
        text = rp.to_text([rp.names_table(result), rp.overlaps_table(result)])
    Emitter("names", Path(book).stem, fmt, out, figures).emit(text)
    _gate(severity_gate, [config.names_with_errors for n in result.names if n.kind is NameKind.ERROR])


@main.command("check")
@click.argument("book", type=click.Path(exists=True, dir_okay=False))
@_common
@_gate_option
@_config_option
def check_cmd(book, fmt, out, figures, password, severity_gate, config_path):
    """Rule checks plus workbook warnings, each with a configurable severity."""
    config = _config(config_path)
    model = _load(book, password)
    found = [(f, config.check(f.check).value) for f in run_checks(model, config.check_config)]
    warned = [(w, config.warnings.value) for w in warnings(model)]

    def figs():
        from collections import Counter
        from .plots import bar_chart
        return {"checks": bar_chart("Check findings", dict(sorted(Counter(f.check.value for f, _ in found).items())))}

    wtable = rp.make_table("Warnings", ("Code", "Severity", "Message", "Details"),
                           [(w.code, s, w.message, "; ".join(w.details)) for w, s in warned])
    if fmt == "json":
        text = rp.to_json(rp.checks_dict(found, warned))
    elif fmt == "csv":
        text = rp.to_csv(rp.checks_table(found))
    elif fmt == "html":
        text = rp.html_document(f"Checks: {book}", [rp.html_table(rp.checks_table(found)), rp.html_table(wtable)])
    else:
        text = rp.to_text([rp.checks_table(found), wtable])
    Emitter("check", Path(book).stem, fmt, out, figures).emit(text, figs)
    _gate(severity_gate, [Severity(s) for _, s in found] + [Severity(s) for _, s in warned])


if __name__ == "__main__":
    main()
