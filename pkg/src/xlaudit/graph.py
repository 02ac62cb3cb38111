"""Dependency index and workbook / worksheet / cell graphs."""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path, PureWindowsPath
from typing import Iterable, Sequence

import numpy as np

from .formula import LexError, OutOfGrid, Token, TokenKind, extract_refs, shift_tokens, tokenize
from .model import LinkKind, WorkbookModel
from .refs import CellAddr, RangeAddr, quote_sheet, rectangles

EXPANSION_CAP = 16

Key = tuple[int, int]


class RootNotFound(LookupError):
    pass


class Direction(str, Enum):
    PRECEDENTS = "precedents"
    DEPENDENTS = "dependents"
    BOTH = "both"


class Level(str, Enum):
    WORKBOOK = "workbook"
    WORKSHEET = "worksheet"
    CELL = "cell"


@dataclass(frozen=True)
class Node:
    id: str
    kind: str  # workbook | sheet | cell | range | external | name
    label: str
    exists: bool | None = None


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    ref_count: int = 1
    locations: tuple[str, ...] = ()


@dataclass(frozen=True)
class DepGraph:
    level: Level
    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()
    truncated: bool = False

    def node(self, node_id: str) -> Node | None:
        return next((n for n in self.nodes if n.id == node_id), None)

    def to_dict(self) -> dict:
        return {
            "level": self.level.value,
            "nodes": [asdict(n) for n in self.nodes],
            "edges": [{"from": e.source, "to": e.target, "ref_count": e.ref_count,
                       "locations": list(e.locations)} for e in self.edges],
            "truncated": self.truncated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_dot(self) -> str:
        def q(s: str) -> str:
            return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

        lines = [f"digraph {q(self.level.value)} {{", "  rankdir=LR;"]
        for n in self.nodes:
            attrs = f"label={q(n.label)}, kind={q(n.kind)}"
            if n.exists is False:
                attrs += ', style="dashed", color="red"'
            lines.append(f"  {q(n.id)} [{attrs}];")
        for e in self.edges:
            lines.append(f"  {q(e.source)} -> {q(e.target)} [refs={e.ref_count}, label={q(str(e.ref_count))}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def cell_id(addr: CellAddr) -> str:
    return f"{quote_sheet(addr.sheet)}!{addr.a1}"


def range_id(rng: RangeAddr) -> str:
    return f"{quote_sheet(rng.sheet)}!{rng.a1}"


# --- dependents index --------------------------------------------------------

def _disjoint(ranges: Sequence[RangeAddr]) -> list[RangeAddr]:
    """Disjoint rectangles covering the union of same-sheet ranges."""
    if len(ranges) == 1 or not any(a.intersects(b) for i, a in enumerate(ranges) for b in ranges[i + 1:]):
        return list(ranges)
    sheet = ranges[0].sheet
    rows = sorted({r.top for r in ranges} | {r.bottom + 1 for r in ranges})
    cols = sorted({r.left for r in ranges} | {r.right + 1 for r in ranges})
    ri = {v: i for i, v in enumerate(rows)}
    ci = {v: i for i, v in enumerate(cols)}
    covered: set[Key] = set()
    for r in ranges:
        for i in range(ri[r.top], ri[r.bottom + 1]):
            for j in range(ci[r.left], ci[r.right + 1]):
                covered.add((i, j))
    out = []
    for top, left, bottom, right in rectangles(covered):
        out.append(RangeAddr(sheet, rows[top], cols[left], rows[bottom + 1] - 1, cols[right + 1] - 1))
    return out


class _RangeEdges:
    """Large precedent ranges on one sheet, with vectorised containment queries."""

    def __init__(self):
        self.ranges: list[RangeAddr] = []
        self.owners: list[CellAddr] = []
        self._arr: np.ndarray | None = None
        self._cols: tuple[np.ndarray, ...] | None = None

    def add(self, rng: RangeAddr, owner: CellAddr) -> None:
        self.ranges.append(rng)
        self.owners.append(owner)
        self._arr = self._cols = None

    @property
    def arr(self) -> np.ndarray:
        if self._arr is None:
            self._arr = np.array([(r.top, r.left, r.bottom, r.right) for r in self.ranges],
                                 dtype=np.int64).reshape(-1, 4)
        return self._arr

    @property
    def columns(self) -> tuple[np.ndarray, ...]:
        """top, left, bottom and right as contiguous arrays."""
        if self._cols is None:
            self._cols = tuple(np.ascontiguousarray(self.arr[:, i]) for i in range(4))
        return self._cols

    def containing(self, row: int, col: int) -> np.ndarray:
        top, left, bottom, right = self.columns
        mask = top <= row
        mask &= bottom >= row
        mask &= left <= col
        mask &= right >= col
        return np.flatnonzero(mask)

    def counts(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Number of stored ranges containing each (row, col) point."""
        if not self.ranges or rows.size == 0:
            return np.zeros(rows.shape, dtype=np.int64)
        a = self.arr
        rb = np.unique(np.concatenate([a[:, 0], a[:, 2] + 1]))
        cb = np.unique(np.concatenate([a[:, 1], a[:, 3] + 1]))
        grid = np.zeros((len(rb) + 1, len(cb) + 1), dtype=np.int64)
        r0 = np.searchsorted(rb, a[:, 0])
        r1 = np.searchsorted(rb, a[:, 2] + 1)
        c0 = np.searchsorted(cb, a[:, 1])
        c1 = np.searchsorted(cb, a[:, 3] + 1)
        np.add.at(grid, (r0, c0), 1)
        np.add.at(grid, (r1, c0), -1)
        np.add.at(grid, (r0, c1), -1)
        np.add.at(grid, (r1, c1), 1)
        grid = grid.cumsum(0).cumsum(1)
        ri = np.searchsorted(rb, rows, side="right") - 1
        ci = np.searchsorted(cb, cols, side="right") - 1
        out = np.zeros(rows.shape, dtype=np.int64)
        ok = (ri >= 0) & (ci >= 0)
        out[ok] = grid[ri[ok], ci[ok]]
        return out


@dataclass
class DependentsIndex:
    """Direct precedent -> dependent relation over every formula in a workbook.

    Precedent areas of at most ``cap`` cells are expanded per cell; larger
    areas (after clipping to the target sheet's used range) are kept as range
    edges and answered by containment, so counts stay exact.
    """

    cap: int = EXPANSION_CAP
    direct: dict[CellAddr, list[CellAddr]] = field(default_factory=dict)
    range_edges: dict[str, _RangeEdges] = field(default_factory=dict)
    precedent_areas: dict[CellAddr, list[RangeAddr]] = field(default_factory=dict)
    unresolved: dict[CellAddr, list[Token]] = field(default_factory=dict)

    @property
    def capped(self) -> int:
        """Number of precedent areas stored without per-cell expansion."""
        return sum(len(e.ranges) for e in self.range_edges.values())

    @property
    def approximate(self) -> bool:
        return False

    def dependents(self, addr: CellAddr) -> list[CellAddr]:
        out = list(self.direct.get(addr, ()))
        edges = self.range_edges.get(addr.sheet)
        if edges is not None and edges.ranges:
            out.extend(edges.owners[i] for i in edges.containing(addr.row, addr.col))
        return sorted(set(out), key=lambda a: (a.sheet, a.row, a.col))

    def count(self, addr: CellAddr) -> int:
        n = len(self.direct.get(addr, ()))
        edges = self.range_edges.get(addr.sheet)
        if edges is not None and edges.ranges:
            n += len(edges.containing(addr.row, addr.col))
        return n

    def counts(self, sheet: str, keys: Sequence[Key]) -> dict[Key, int]:
        """Vectorised :meth:`count` for many cells on one sheet."""
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        edges = self.range_edges.get(sheet)
        extra = edges.counts(rows, cols) if edges is not None else np.zeros(len(keys), dtype=np.int64)
        return {k: len(self.direct.get(CellAddr(sheet, *k), ())) + int(extra[i]) for i, k in enumerate(keys)}

    def precedents(self, addr: CellAddr) -> list[RangeAddr]:
        return list(self.precedent_areas.get(addr, ()))

    def precedent_cells(self, addr: CellAddr) -> Iterable[CellAddr]:
        for rng in self.precedent_areas.get(addr, ()):
            yield from rng.cells()

    def referenced_cells(self, sheet: str) -> set[Key]:
        """Cells of ``sheet`` with at least one dependent among directly expanded areas."""
        return {(a.row, a.col) for a in self.direct if a.sheet == sheet}


def build_index(model: WorkbookModel, cap: int = EXPANSION_CAP) -> DependentsIndex:
    index = DependentsIndex(cap=cap)
    used = {s.name: s.used_range for s in model.sheets}
    for sheet in model.sheets:
        above: dict[int, tuple[int, list]] = {}
        left: tuple[int, int, list] | None = None
        for cell in sheet.formula_cells():
            formula = cell.formula_a1
            row, col = cell.addr.row, cell.addr.col
            # filled-down or filled-right copies reuse the neighbour's tokens
            candidates = []
            if col in above:
                candidates.append((above[col][1], row - above[col][0], 0))
            if left is not None and left[0] == row:
                candidates.append((left[2], 0, col - left[1]))
            tokens = None
            for base, dr, dc in candidates:
                try:
                    guess = shift_tokens(base, dr, dc)
                except OutOfGrid:
                    continue
                if "".join(t.text for t in guess) == formula:
                    tokens = guess
                    break
            try:
                if tokens is None:
                    tokens = tokenize(formula)
                found = extract_refs(formula, cell.addr, model.names, tokens)
            except LexError:
                continue
            above[col] = (row, tokens)
            left = (row, col, tokens)
            if found.unresolved:
                index.unresolved[cell.addr] = found.unresolved
            by_sheet: dict[str, list[RangeAddr]] = {}
            for rng in found.ranges:
                target = model.sheet(rng.sheet)
                name = target.name if target is not None else rng.sheet
                rng = RangeAddr(name, rng.top, rng.left, rng.bottom, rng.right)
                if rng.size > cap:
                    area = used.get(name)
                    rng = rng.intersection(area) if area is not None else None
                    if rng is None:
                        continue
                by_sheet.setdefault(name, []).append(rng)
            areas = []
            for name, ranges in by_sheet.items():
                for rng in _disjoint(ranges):
                    areas.append(rng)
                    if rng.size <= cap:
                        for a in rng.cells():
                            index.direct.setdefault(a, []).append(cell.addr)
                    else:
                        index.range_edges.setdefault(name, _RangeEdges()).add(rng, cell.addr)
            if areas:
                index.precedent_areas[cell.addr] = areas
    return index


def find_cycle(model: WorkbookModel, index: DependentsIndex | None = None) -> list[CellAddr] | None:
    """One circular chain of formula cells (precedent order), or None."""
    index = index or build_index(model)
    formula_keys: dict[str, np.ndarray] = {}
    for s in model.sheets:
        keys = [(c.addr.row, c.addr.col) for c in s.formula_cells()]
        formula_keys[s.name] = np.array(keys, dtype=np.int64).reshape(-1, 2)

    def successors(addr: CellAddr) -> list[CellAddr]:
        out = []
        for rng in index.precedent_areas.get(addr, ()):
            keys = formula_keys.get(rng.sheet)
            if keys is None or keys.size == 0:
                continue
            mask = ((keys[:, 0] >= rng.top) & (keys[:, 0] <= rng.bottom)
                    & (keys[:, 1] >= rng.left) & (keys[:, 1] <= rng.right))
            out.extend(CellAddr(rng.sheet, int(r), int(c)) for r, c in keys[mask])
        return out

    state: dict[CellAddr, int] = {}  # 1 on stack, 2 done
    for sheet in model.sheets:
        for start in (c.addr for c in sheet.formula_cells()):
            if start in state:
                continue
            stack = [(start, iter(successors(start)))]
            path = [start]
            state[start] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    path.pop()
                    state[node] = 2
                elif state.get(nxt) == 1:
                    return path[path.index(nxt):]
                elif nxt not in state:
                    state[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, iter(successors(nxt))))
    return None


# --- workbook and worksheet graphs -------------------------------------------

def _external_label(tok: Token) -> tuple[str, str]:
    """(node id, display label) for an external-reference token."""
    p = tok.prefix
    book = f"[{p.book}]"
    sheet = p.sheet or ""
    return book + sheet, (p.book_path or "") + book + sheet


def _probe(target: str, base: Path | None) -> bool:
    try:
        if "\\" in target or (len(target) > 1 and target[1] == ":"):
            win = PureWindowsPath(target)
            if win.drive:
                return Path(target).exists()
            target = win.as_posix()
        path = Path(target)
        if not path.is_absolute() and base is not None:
            path = base / path
        return path.exists()
    except (OSError, ValueError):
        return False


def workbook_graph(model: WorkbookModel, link_check: bool = False) -> DepGraph:
    self_id = Path(model.path).name if model.path else "(workbook)"
    counts: Counter[str] = Counter()
    where: dict[str, list[str]] = {}

    def note(target: str, location: str) -> None:
        counts[target] += 1
        places = where.setdefault(target, [])
        if location not in places:
            places.append(location)

    for sheet in model.sheets:
        for cell in sheet.formula_cells():
            try:
                tokens = tokenize(cell.formula_a1)
            except LexError:
                continue
            for tok in tokens:
                if tok.prefix is not None and tok.prefix.external:
                    note((tok.prefix.book_path or "") + tok.prefix.book, cell_id(cell.addr))
    for dn in model.names:
        try:
            tokens = tokenize(dn.refers_to)
        except LexError:
            continue
        for tok in tokens:
            if tok.prefix is not None and tok.prefix.external:
                note((tok.prefix.book_path or "") + tok.prefix.book, dn.full_name)
    for link in model.external_links:
        if link.target not in counts:
            counts[link.target] += 0
            where.setdefault(link.target, list(link.found_in))

    base = Path(model.path).parent if model.path else None
    nodes = [Node(self_id, "workbook", self_id, True)]
    edges = []
    kinds = {link.target: link.kind for link in model.external_links}
    for target in counts:
        kind = kinds.get(target, LinkKind.WORKBOOK)
        exists = _probe(target, base) if link_check and kind is LinkKind.WORKBOOK else None
        nodes.append(Node(target, "external" if kind is LinkKind.WORKBOOK else kind.value, target, exists))
        edges.append(Edge(self_id, target, max(counts[target], len(where[target]), 1), tuple(where[target])))
    return DepGraph(Level.WORKBOOK, tuple(nodes), tuple(edges))


def worksheet_graph(model: WorkbookModel) -> DepGraph:
    nodes = [Node(s.name, "sheet", s.name) for s in model.sheets]
    externals: dict[str, Node] = {}
    counts: Counter[tuple[str, str]] = Counter()
    where: dict[tuple[str, str], list[str]] = {}
    order = [s.name for s in model.sheets]

    def note(a: str, b: str, location: str) -> None:
        counts[(a, b)] += 1
        places = where.setdefault((a, b), [])
        if location not in places:
            places.append(location)

    for sheet in model.sheets:
        for cell in sheet.formula_cells():
            try:
                found = extract_refs(cell.formula_a1, cell.addr, model.names)
            except LexError:
                continue
            loc = cell_id(cell.addr)
            for rng in found.ranges:
                target = model.sheet(rng.sheet)
                if target is not None and target.name != sheet.name:
                    note(sheet.name, target.name, loc)
            for tok in found.unresolved:
                p = tok.prefix
                if p is None:
                    continue
                if p.external:
                    node_id, label = _external_label(tok)
                    externals.setdefault(node_id, Node(node_id, "external", label))
                    note(sheet.name, node_id, loc)
                elif p.is_3d and p.sheet in order and p.sheet_end in order:
                    i, j = sorted((order.index(p.sheet), order.index(p.sheet_end)))
                    for name in order[i:j + 1]:
                        if name != sheet.name:
                            note(sheet.name, name, loc)
    nodes.extend(externals.values())
    rank = {n.id: i for i, n in enumerate(nodes)}
    edges = [Edge(a, b, counts[(a, b)], tuple(where[(a, b)]))
             for a, b in sorted(counts, key=lambda k: (rank[k[0]], rank[k[1]]))]
    return DepGraph(Level.WORKSHEET, tuple(nodes), tuple(edges))


# --- cell graph --------------------------------------------------------------

@dataclass(frozen=True)
class _Item:
    id: str
    kind: str
    label: str
    addr: CellAddr | None = None


def _cell_item(addr: CellAddr) -> _Item:
    return _Item(cell_id(addr), "cell", cell_id(addr), addr)


def _precedent_items(model: WorkbookModel, addr: CellAddr, cap: int) -> list[tuple[_Item, int]]:
    cell = model.cell(addr)
    if cell is None or not cell.is_formula:
        return []
    try:
        found = extract_refs(cell.formula_a1, addr, model.names)
    except LexError:
        return []
    counts: Counter[_Item] = Counter()
    order = {s.name: i for i, s in enumerate(model.sheets)}
    for rng in found.ranges:
        target = model.sheet(rng.sheet)
        name = target.name if target is not None else rng.sheet
        rng = RangeAddr(name, rng.top, rng.left, rng.bottom, rng.right)
        if rng.size > cap:
            counts[_Item(range_id(rng), "range", range_id(rng))] += 1
        else:
            for a in rng.cells():
                counts[_cell_item(a)] += 1
    for tok in found.unresolved:
        if tok.prefix is not None and tok.prefix.external:
            node_id, label = _external_label(tok)
            counts[_Item(node_id + "!" + tok.bare, "external", label + "!" + tok.bare)] += 1
        else:
            counts[_Item("name:" + tok.text, "name", tok.text)] += 1

    def key(item: _Item):
        if item.addr is not None:
            return (0, order.get(item.addr.sheet, len(order)), item.addr.row, item.addr.col, "")
        return (1 if item.kind == "range" else 2, 0, 0, 0, item.id)

    return sorted(counts.items(), key=lambda kv: key(kv[0]))


def cell_graph(model: WorkbookModel, root: CellAddr, direction: Direction | str = Direction.PRECEDENTS,
               max_depth: int = 5, max_nodes: int = 5000, index: DependentsIndex | None = None,
               cap: int = EXPANSION_CAP) -> DepGraph:
    """Breadth-first neighbourhood of ``root``.

    Edges always point from the referencing formula to the referenced cell.
    """
    direction = Direction(direction)
    sheet = model.sheet(root.sheet)
    if sheet is None or sheet.cell(root.row, root.col) is None:
        raise RootNotFound(str(root))
    root = CellAddr(sheet.name, root.row, root.col)
    if direction is not Direction.PRECEDENTS and index is None:
        index = build_index(model, cap)

    start = _cell_item(root)
    nodes: dict[str, _Item] = {start.id: start}
    edges: dict[tuple[str, str], int] = {}
    truncated = False
    queue = deque([(start, 0)])
    while queue:
        item, depth = queue.popleft()
        if item.addr is None:
            continue
        neighbours: list[tuple[_Item, str, int]] = []
        if direction is not Direction.DEPENDENTS:
            neighbours += [(n, "pre", k) for n, k in _precedent_items(model, item.addr, cap)]
        if direction is not Direction.PRECEDENTS:
            neighbours += [(_cell_item(d), "dep", 1) for d in index.dependents(item.addr)]
        if not neighbours:
            continue
        if depth >= max_depth:
            if any(n.id not in nodes for n, _, _ in neighbours):
                truncated = True
            continue
        for other, how, k in neighbours:
            if other.id not in nodes:
                if len(nodes) >= max_nodes:
                    truncated = True
                    continue
                nodes[other.id] = other
                queue.append((other, depth + 1))
            if how == "pre":
                edges[(item.id, other.id)] = k
            else:
                edges.setdefault((other.id, item.id), k)
    node_list = tuple(Node(i.id, i.kind, i.label) for i in nodes.values())
    edge_list = tuple(Edge(a, b, n) for (a, b), n in edges.items())
    return DepGraph(Level.CELL, node_list, edge_list, truncated)
