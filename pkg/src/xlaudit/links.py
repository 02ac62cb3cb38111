"""Discovery of links to other workbooks, with the places they were found."""

from __future__ import annotations

from typing import Iterable, Sequence

from .formula import LexError, external_targets, tokenize
from .model import DefinedName, LinkKind, LinkRef, SheetModel
from .refs import quote_sheet


def cell_location(sheet: str, a1: str) -> str:
    return f"{quote_sheet(sheet)}!{a1}"


def discover_links(sheets: Sequence[SheetModel], names: Sequence[DefinedName],
                   declared: Iterable[LinkRef] = ()) -> list[LinkRef]:
    """Merge container-declared links with workbook targets found in formulas and names."""
    found: dict[tuple[str, LinkKind], list[str]] = {}
    order: list[tuple[str, LinkKind]] = []

    def add(target: str, kind: LinkKind, where: str | None) -> None:
        key = (target, kind)
        if key not in found:
            found[key] = []
            order.append(key)
        if where is not None and where not in found[key]:
            found[key].append(where)

    for link in declared:
        add(link.target, link.kind, None)
        for where in link.found_in:
            add(link.target, link.kind, where)
    for sheet in sheets:
        for cell in sheet.formula_cells():
            try:
                targets = external_targets(tokenize(cell.formula_a1))
            except LexError:
                continue
            for t in targets:
                add(t, LinkKind.WORKBOOK, cell_location(sheet.name, cell.addr.a1))
    for dn in names:
        try:
            targets = external_targets(tokenize(dn.refers_to))
        except LexError:
            continue
        for t in targets:
            add(t, LinkKind.WORKBOOK, dn.full_name)
    return [LinkRef(t, k, tuple(found[(t, k)])) for t, k in order]
