import json
import time
from dataclasses import replace

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from tests.strategies import lookup_workbook, sheet_from_grid
from xlaudit.graph import RootNotFound, build_index, cell_graph, find_cycle, workbook_graph, worksheet_graph
from xlaudit.model import WorkbookModel
from xlaudit.refs import CellAddr, index_to_col

# --- dependents index vs a brute-force oracle --------------------------------
# Formulas are rendered from (dr, dc, height, width, absolute) area specs, so the
# precedent cells of every formula are known without parsing anything.

ORIGIN_ROW, ORIGIN_COL = 12, 12
area_spec = st.tuples(st.integers(-10, 4), st.integers(-8, 3), st.integers(1, 6), st.integers(1, 5), st.booleans())
templates = st.lists(st.lists(area_spec, min_size=1, max_size=3), min_size=1, max_size=3)


def area(spec, row, col):
    dr, dc, h, w, absolute = spec
    top, left = (ORIGIN_ROW + dr, ORIGIN_COL + dc) if absolute else (row + dr, col + dc)
    return top, left, top + h - 1, left + w - 1


def render(template, row, col):
    parts = []
    for spec in template:
        top, left, bottom, right = area(spec, row, col)
        d = "$" if spec[4] else ""
        a = f"{d}{index_to_col(left)}{d}{top}"
        parts.append(a if (top, left) == (bottom, right) else f"SUM({a}:{d}{index_to_col(right)}{d}{bottom})")
    return "=" + "+".join(parts)


@st.composite
def index_cases(draw):
    tpl = draw(templates)
    spots = draw(st.dictionaries(st.tuples(st.integers(12, 24), st.integers(10, 20)),
                                 st.integers(0, len(tpl) - 1), min_size=1, max_size=60))
    reads = {}
    grid = {(1, 1): 1.0, (40, 40): 2.0}  # used range covers every precedent
    for (r, c), k in spots.items():
        grid[(r, c)] = render(tpl[k], r, c)
        reads[(r, c)] = {(rr, cc) for top, left, bottom, right in (area(s, r, c) for s in tpl[k])
                         for rr in range(top, bottom + 1) for cc in range(left, right + 1)}
    return grid, reads


@settings(max_examples=120, deadline=None)
@given(index_cases(), st.sampled_from([1, 4, 16]))
def test_index_matches_bruteforce_and_is_symmetric(case, cap):
    grid, reads = case
    model = WorkbookModel(sheets=(sheet_from_grid(grid),))
    index = build_index(model, cap)
    at = lambda key: CellAddr("Sheet1", *key)
    for f, cells in reads.items():
        assert {(p.row, p.col) for p in index.precedent_cells(at(f))} == cells
        for p in index.precedent_cells(at(f)):
            assert at(f) in index.dependents(p)
    probe = [(r, c) for r in range(1, 41) for c in range(1, 41)]
    expected = {p: {f for f, cells in reads.items() if p in cells} for p in probe}
    vector = index.counts("Sheet1", probe)
    for p in probe:
        deps = index.dependents(at(p))
        assert {(d.row, d.col) for d in deps} == expected[p]
        for d in deps:
            assert at(p) in set(index.precedent_cells(d))
        assert index.count(at(p)) == vector[p] == len(expected[p])


def test_large_ranges_are_stored_as_range_edges(playtime):
    index = build_index(playtime)
    assert index.capped > 0 and not index.approximate
    assert index.count(CellAddr("Oct 06", 20, 3)) == 2


# --- PlayTime5 ---------------------------------------------------------------

def test_c11_has_row_total_and_column_total(playtime):
    index = build_index(playtime)
    c11 = CellAddr("Oct 06", 11, 3)
    assert index.count(c11) == 2
    assert [d.a1 for d in index.dependents(c11)] == ["G11", "C37"]


def test_typed_in_total_is_not_a_dependent(playtime):
    index = build_index(playtime)
    assert index.count(CellAddr("Oct 06", 28, 3)) == 1


def test_cycle_on_errors_sheet(playtime):
    assert find_cycle(playtime) == [CellAddr("Errors", 23, 4)]


def test_no_cycle(staffing):
    assert find_cycle(staffing[0]) is None


# --- workbook / worksheet levels ---------------------------------------------

def test_worksheet_graph_counts_referencing_cells():
    from tests.conftest import fixture_model
    g = worksheet_graph(fixture_model("consolidated.json"))
    edges = {(e.source, e.target): e for e in g.edges}
    for month in ("Jan", "Feb", "Mar"):
        e = edges[("Consolidated", month)]
        assert e.ref_count == 2 and e.locations == ("Consolidated!B1", "Consolidated!B2")
    assert edges[("Consolidated", "[Budget.xlsx]Plan")].ref_count == 2
    assert g.node("Intro") is not None  # isolated sheets still appear
    assert g.node("[Budget.xlsx]Plan").kind == "external"


def test_workbook_graph_lists_external_books(playtime):
    g = workbook_graph(playtime)
    targets = {e.target: e.locations for e in g.edges}
    assert targets == {"F:\\DOCS\\SCC3\\Ex1 Demo\\EX1DEMO.XLS": ("Errors!E20",),
                       "F:\\DOCS\\MyDocs\\Currencies.xls": ("Royalty",)}
    assert all(n.exists is None for n in g.nodes if n.kind == "external")


def test_link_check_probes_the_filesystem(tmp_path):
    (tmp_path / "Here.xlsx").write_bytes(b"")
    sheet = sheet_from_grid({(1, 1): "=[Here.xlsx]S!A1", (2, 1): "='C:\\Nowhere\\[Gone.xlsx]S'!A1"})
    model = WorkbookModel(path=str(tmp_path / "book.xlsx"), sheets=(sheet,))
    g = workbook_graph(model, link_check=True)
    exists = {n.id: n.exists for n in g.nodes if n.kind == "external"}
    assert exists == {"Here.xlsx": True, "C:\\Nowhere\\Gone.xlsx": False}
    assert 'style="dashed"' in g.to_dot()


# --- cell level --------------------------------------------------------------

def test_precedents_of_column_total(playtime):
    g = cell_graph(playtime, CellAddr("Oct 06", 37, 7), "precedents")
    assert [n.id for n in g.nodes] == ["'Oct 06'!G37", "'Oct 06'!G11:G36"]
    assert [(e.source, e.target, e.ref_count) for e in g.edges] == [("'Oct 06'!G37", "'Oct 06'!G11:G36", 1)]
    assert not g.truncated


def test_dependents_edges_point_at_the_referenced_cell(playtime):
    g = cell_graph(playtime, CellAddr("Oct 06", 11, 3), "dependents")
    assert {(e.source, e.target) for e in g.edges} == {
        ("'Oct 06'!G11", "'Oct 06'!C11"), ("'Oct 06'!C37", "'Oct 06'!C11"), ("'Oct 06'!G37", "'Oct 06'!G11")}


@pytest.mark.parametrize("root", [CellAddr("Oct 06", 200, 1), CellAddr("Nope", 1, 1)])
def test_missing_root(playtime, root):
    with pytest.raises(RootNotFound):
        cell_graph(playtime, root)


def test_depth_limit_truncates():
    model = lookup_workbook(40)
    g = cell_graph(model, CellAddr("Data", 40, 3), "precedents", max_depth=3)
    assert g.truncated
    assert {n.id for n in g.nodes} >= {"Data!C40", "Data!C39", "Data!C38", "Data!C37"}
    assert "Data!C36" not in {n.id for n in g.nodes}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(1, 40), st.sampled_from(["precedents", "dependents", "both"]))
def test_node_budget_is_respected(max_nodes, row, direction):
    model = lookup_workbook(40)
    g = cell_graph(model, CellAddr("Data", row, 3), direction, max_depth=100, max_nodes=max_nodes)
    assert len(g.nodes) <= max_nodes
    ids = {n.id for n in g.nodes}
    assert all(e.source in ids and e.target in ids for e in g.edges)


def test_adversarial_lookup_sheet_is_bounded():
    model = lookup_workbook()
    assert sum(len(s.cells) for s in model.sheets) >= 100_000
    for root, direction in ((CellAddr("Data", 1, 1), "dependents"), (CellAddr("Data", 33_334, 3), "precedents")):
        start = time.perf_counter()
        g = cell_graph(model, root, direction, max_depth=10**6, max_nodes=5000)
        assert time.perf_counter() - start < 5
        assert len(g.nodes) <= 5000 and g.truncated


# --- output ------------------------------------------------------------------

def test_json_and_dot(playtime):
    g = cell_graph(playtime, CellAddr("Oct 06", 37, 7))
    assert json.loads(g.to_json()) == g.to_dict()
    dot = g.to_dot()
    assert dot.startswith('digraph "cell" {')
    assert "\"'Oct 06'!G37\" -> \"'Oct 06'!G11:G36\" [refs=1" in dot


def test_dot_escapes_backslashes_and_quotes():
    model = WorkbookModel(path="b.xlsx", sheets=(sheet_from_grid({(1, 1): "='C:\\x\\[a\"b.xlsx]S'!A1"}),))
    dot = workbook_graph(model).to_dot()
    assert '"C:\\\\x\\\\a\\"b.xlsx"' in dot
