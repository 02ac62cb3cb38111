import json

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from tests.conftest import CORPUS, DATA, fixture_model
from xlaudit.errors import SchemaViolation
from xlaudit.fixture import dump_fixture, load_fixture, model_from_dict
from xlaudit.loader import load_workbook
from xlaudit.model import ErrorCode, NameKind, ValueKind, is_date_format, is_hiding_format, make_name
from xlaudit.refs import AddressError, CellAddr, RangeAddr, col_to_index, index_to_col, rectangles


@pytest.mark.parametrize("letters,index", [("A", 1), ("Z", 26), ("AA", 27), ("XFD", 16384)])
def test_column_letters(letters, index):
    assert col_to_index(letters) == index
    assert index_to_col(index) == letters


@given(st.integers(1, 16384))
def test_column_roundtrip(i):
    assert col_to_index(index_to_col(i)) == i


def test_range_parse_and_geometry():
    r = RangeAddr.parse("S", "B3:D7")
    assert (r.height, r.width, r.size) == (5, 3, 15)
    assert r.a1 == "B3:D7"
    assert RangeAddr.parse("S", "A:C").bottom == 1048576
    assert r.contains(CellAddr("S", 4, 3)) and not r.contains(CellAddr("T", 4, 3))


def test_bad_address():
    with pytest.raises(AddressError):
        CellAddr.parse("S", "ZZZZ1")


@settings(max_examples=200)
@given(st.sets(st.tuples(st.integers(1, 12), st.integers(1, 12)), max_size=60))
def test_rectangles_partition_cells(cells):
    covered = []
    for top, left, bottom, right in rectangles(cells):
        covered += [(r, c) for r in range(top, bottom + 1) for c in range(left, right + 1)]
    assert sorted(covered) == sorted(cells)


def test_error_codes_parse():
    assert ErrorCode.parse("#DIV/0!") is ErrorCode.DIV0
    assert ErrorCode.parse("#n/a") is ErrorCode.NA


def test_number_format_classification():
    assert is_date_format("dd/mm/yyyy") and is_date_format("[h]:mm")
    assert not is_date_format("#,##0.00") and not is_date_format('"mm"0')
    assert is_hiding_format(";;;") and not is_hiding_format("0.00")


def test_make_name_classifies():
    assert make_name("x", "=Errors!#REF!").kind is NameKind.ERROR
    dn = make_name("Royalty", "='Oct 06'!$B$39", scope="Oct 06", visible=False)
    assert dn.kind is NameKind.RANGE
    assert (dn.geometry.top, dn.geometry.left, dn.geometry.height) == (39, 2, 1)
    assert dn.full_name == "'Oct 06'!Royalty"
    assert make_name("_xlnm.Print_Area", "=A!$A$1").builtin


def test_playtime_fixture_shape(playtime):
    assert [s.name for s in playtime.sheets] == ["Oct 06", "Nov'06", "Dec-06", "Errors", "ECB EuroFXref"]
    assert len(playtime.names) == 11
    b27 = playtime.cell(CellAddr("Errors", 27, 2))
    assert b27.is_array_formula and b27.has_comment
    assert playtime.cell(CellAddr("Errors", 5, 3)).value.kind is ValueKind.ERROR


def test_sheet_lookup_falls_back_to_case_insensitive(playtime):
    assert playtime.sheet("oct 06").name == "Oct 06"
    assert playtime.sheet("nope") is None


@pytest.mark.parametrize("doc,where", [
    ({"sheets": [{"name": "A", "cells": {"A1": {"v": [1]}}}]}, "$.sheets[0].cells.A1.v"),
    ({"sheets": [{"name": "A", "cells": {"ZZZZ1": {"v": 1}}}]}, "$.sheets[0].cells.ZZZZ1"),
    ({"sheets": [{"cells": {}}]}, "$.sheets[0]"),
    ({}, "$"),
])
def test_schema_violations_name_the_path(doc, where):
    with pytest.raises(SchemaViolation) as info:
        load_fixture(json.dumps(doc), "bad.json")
    assert info.value.path == where


def test_invalid_json_is_schema_violation():
    with pytest.raises(SchemaViolation):
        load_fixture("{nope", "bad.json")


@pytest.mark.parametrize("name", CORPUS)
def test_dump_roundtrip(name):
    m = fixture_model(name)
    again = model_from_dict(json.loads(json.dumps(dump_fixture(m, include_size=True))), m.path)
    assert again == m


@pytest.mark.parametrize("name", CORPUS)
def test_load_is_deterministic(name):
    assert load_workbook(DATA / name) == load_workbook(DATA / name)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(
    st.tuples(st.integers(1, 30), st.integers(1, 10)),
    st.one_of(st.integers(-10**6, 10**6), st.text(max_size=8), st.booleans(),
              st.sampled_from(["=A1+1", "=SUM(B1:B3)", "=Sheet1!C2"])),
    max_size=40))
def test_generated_fixture_roundtrip(cells):
    doc = {"sheets": [{"name": "Sheet1", "cells": {
        f"{index_to_col(c)}{r}": ({"f": v, "v": 0} if isinstance(v, str) and v.startswith("=") else {"v": v})
        for (r, c), v in cells.items()}}]}
    m = load_fixture(json.dumps(doc), "gen.json")
    again = load_fixture(json.dumps(dump_fixture(m, include_size=True)), "gen.json")
    assert again.sheets == m.sheets
