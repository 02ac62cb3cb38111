import io
import zipfile
from datetime import datetime, timezone

import pytest

from xlaudit.errors import (CorruptContainer, EncryptedWithoutPassword, NotASpreadsheet,
                            UnsupportedLegacyFormat)
from xlaudit.loader import load_workbook
from xlaudit.model import CalcMode, LinkKind, ValueKind, Visibility
from xlaudit.refs import RangeAddr

xlsxwriter = pytest.importorskip("xlsxwriter")


@pytest.fixture(scope="module")
def book_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("xlsx") / "book.xlsx"
    wb = xlsxwriter.Workbook(str(path))
    wb.set_properties({"title": "Budget", "author": "Ann", "created": datetime(2013, 2, 26, 14, 24)})
    wb.set_custom_property("Reviewed", "yes")
    ws = wb.add_worksheet("Data")
    date_fmt = wb.add_format({"num_format": "dd/mm/yyyy"})
    unlocked = wb.add_format({"locked": False})
    right = wb.add_format({"align": "right"})
    ws.write("A1", "Label")
    ws.write("A2", 10)
    ws.write("A3", 20, unlocked)
    ws.write_formula("A4", "=SUM(A2:A3)", None, 30)
    ws.write_datetime("B1", datetime(2013, 1, 1), date_fmt)
    ws.write_string("C1", "123", right)
    ws.write_array_formula("D1:D2", "{=A2:A3*2}", None, 20)
    ws.write_comment("A2", "check this", {"author": "Reviewer"})
    ws.merge_range("E1:F1", "Merged")
    ws.write_formula("G1", "='[Other.xlsx]Sheet1'!A1", None, 0)
    ws.write_formula("G2", "=_xlfn.CONCAT(A1,\"x\")", None, "Labelx")
    ws.set_row(5, None, None, {"hidden": True})
    ws.set_column("H:H", None, None, {"hidden": True})
    ws.data_validation("A2", {"validate": "integer", "criteria": ">", "value": 0})
    ws.conditional_format("A2:A3", {"type": "cell", "criteria": ">", "value": 15, "format": right})
    ws.protect()
    hidden = wb.add_worksheet("Hidden")
    hidden.write("A1", 1)
    hidden.hide()
    wb.define_name("Total", "=Data!$A$4")
    wb.define_name("Data!Local", "=Data!$A$2:$A$3")
    wb.set_calc_mode("manual")
    wb.close()
    return path


@pytest.fixture(scope="module")
def book(book_path):
    return load_workbook(book_path)


def test_properties(book):
    p = book.properties
    assert (p.title, p.author) == ("Budget", "Ann")
    assert p.created == datetime(2013, 2, 26, 14, 24, tzinfo=timezone.utc)
    assert dict(p.custom) == {"Reviewed": "yes"}
    assert p.file_size_bytes > 0


def test_sheets_and_visibility(book):
    assert [s.name for s in book.sheets] == ["Data", "Hidden"]
    assert book.sheet("Hidden").visibility is Visibility.HIDDEN
    assert book.sheet("Data").protected


def test_cells_values_and_formulas(book):
    data = book.sheet("Data")
    assert data.cell(2, 1).value.value == 10
    a4 = data.cell(4, 1)
    assert a4.formula_a1 == "=SUM(A2:A3)" and a4.value.value == 30
    assert data.cell(1, 2).value.kind is ValueKind.DATETIME
    assert data.cell(3, 1).locked is False


def test_array_formula_applies_to_block(book):
    data = book.sheet("Data")
    for r in (1, 2):
        cell = data.cell(r, 4)
        assert cell.is_array_formula and cell.formula_a1 == "=A2:A3*2"


def test_future_function_prefix_is_stripped(book):
    assert book.sheet("Data").cell(2, 7).formula_a1 == '=CONCAT(A1,"x")'


def test_comment_merge_hidden_axes(book):
    data = book.sheet("Data")
    a2 = data.cell(2, 1)
    assert a2.has_comment and a2.comment_author == "Reviewer"
    assert RangeAddr("Data", 1, 5, 1, 6) in data.merged_areas
    assert 6 in data.hidden_rows and 8 in data.hidden_cols


def test_validation_and_conditional_format(book):
    data = book.sheet("Data")
    assert data.cell(2, 1).validation
    assert data.cell(2, 1).cond_format_count == 1


def test_alignment_kept(book):
    assert book.sheet("Data").cell(1, 3).align == "right"


def test_names(book):
    by_name = {n.full_name: n for n in book.names}
    assert by_name["Total"].target == RangeAddr("Data", 4, 1, 4, 1)
    assert by_name["Data!Local"].scope == "Data"


def test_external_links_and_calc_mode(book):
    assert book.calc_mode is CalcMode.MANUAL
    links = [l for l in book.external_links if l.kind is LinkKind.WORKBOOK]
    assert len(links) == 1 and "Other.xlsx" in links[0].target
    assert "Data!G1" in links[0].found_in


def _zip(parts: dict[str, str]) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        for name, text in parts.items():
            z.writestr(name, text)
    return buf.getvalue()


_NS = 'xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"'
_RNS = 'xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships"'
_REL = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"


def _minimal(sheet_xml: str) -> bytes:
    return _zip({
        "[Content_Types].xml": '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"/>',
        "_rels/.rels": f'<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
                       f'<Relationship Id="rId1" Type="{_REL}/officeDocument" Target="xl/workbook.xml"/>'
                       "</Relationships>",
        "xl/workbook.xml": f'<workbook {_NS} {_RNS}><sheets><sheet name="S" sheetId="1" r:id="rId1"/>'
                           "</sheets></workbook>",
        "xl/_rels/workbook.xml.rels":
            f'<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
            f'<Relationship Id="rId1" Type="{_REL}/worksheet" Target="worksheets/sheet1.xml"/>'
            "</Relationships>",
        "xl/worksheets/sheet1.xml": f"<worksheet {_NS}><sheetData>{sheet_xml}</sheetData></worksheet>",
    })


def test_shared_formulas_are_expanded(tmp_path):
    rows = "".join(
        f'<row r="{r}"><c r="A{r}"><v>{r}</v></c><c r="B{r}">'
        + ('<f t="shared" ref="B1:B3" si="0">A1*2</f>' if r == 1 else '<f t="shared" si="0"/>')
        + f"<v>{2 * r}</v></c></row>" for r in (1, 2, 3))
    path = tmp_path / "shared.xlsx"
    path.write_bytes(_minimal(rows))
    sheet = load_workbook(path).sheet("S")
    assert [sheet.cell(r, 2).formula_a1 for r in (1, 2, 3)] == ["=A1*2", "=A2*2", "=A3*2"]
    assert sheet.cell(3, 2).value.value == 6


def test_not_a_spreadsheet(tmp_path):
    p = tmp_path / "x.xlsx"
    p.write_bytes(b"hello world, not a workbook")
    with pytest.raises(NotASpreadsheet):
        load_workbook(p)


def test_zip_without_workbook_is_not_a_spreadsheet(tmp_path):
    p = tmp_path / "x.xlsx"
    p.write_bytes(_zip({"readme.txt": "hi"}))
    with pytest.raises(NotASpreadsheet):
        load_workbook(p)


def test_truncated_zip_is_corrupt(tmp_path, book_path):
    p = tmp_path / "cut.xlsx"
    p.write_bytes(book_path.read_bytes()[:300])
    with pytest.raises(CorruptContainer):
        load_workbook(p)


def test_bad_xml_is_corrupt(tmp_path):
    p = tmp_path / "x.xlsx"
    p.write_bytes(_minimal("<row><c r='A1'>"))
    with pytest.raises(CorruptContainer):
        load_workbook(p)


_OLE = bytes.fromhex("D0CF11E0A1B11AE1")


def test_legacy_xls_is_unsupported(tmp_path):
    p = tmp_path / "old.xls"
    p.write_bytes(_OLE + b"\0" * 600)
    with pytest.raises(UnsupportedLegacyFormat):
        load_workbook(p)


def test_encrypted_needs_password(tmp_path, book_path):
    pytest.importorskip("msoffcrypto")
    from msoffcrypto.format.ooxml import OOXMLFile

    enc = tmp_path / "locked.xlsx"
    with open(book_path, "rb") as src, open(enc, "wb") as dst:
        OOXMLFile(src).encrypt("s3cret", dst)
    with pytest.raises(EncryptedWithoutPassword):
        load_workbook(enc)
    with pytest.raises(CorruptContainer):
        load_workbook(enc, {"locked.xlsx": "wrong"})
    model = load_workbook(enc, {"locked.xlsx": "s3cret"})
    assert model.sheet("Data").cell(4, 1).formula_a1 == "=SUM(A2:A3)"
