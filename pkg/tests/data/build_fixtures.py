"""Regenerate the JSON fixture corpus in this directory.

Run ``python tests/data/build_fixtures.py``; the outputs are checked in so the
test suite never depends on this script.
"""

from __future__ import annotations

import json
from pathlib import Path

HERE = Path(__file__).parent

SONGS = [
    ("Yellow Nautic", 311, 117, 207, 301),
    ("Very Fancy", 132, 252, 272, 272),
    ("Unbelievable Wanderer", 262, 262, 234, 125),
    ("Zigbee Follies", 172, 198, 189, 234),
    ("What Was That About", 198, 132, 189, 172),
    ("Say You Can't Say What", 189, 156, 96, 198),
    ("Rich Rio River Rap", 181, 172, 164, 76),
    ("Questioning, Asking, Wondering", 148, 189, 76, 110),
    ("The Long and Twisting Way", 125, 117, 117, 110),
    ("Pay a Packet", 103, 117, 164, 76),
    ("Old Times Best Forgotten", 117, 96, 64, 132),
    ("More for the Road", 125, 70, 82, 103),
    ("Never say maybe", 82, 70, 76, 64),
    ("Lary the Louche Lizard", 103, 64, 46, 76),
    ("Kasbah Kismet", 41, 36, 82, 58),
    ("Jump the Rabbit", 64, 31, 70, 46),
    ("In Times Gone By", 36, 27, 70, 41),
    ("Happy Horroreen", 46, 27, 58, 22),
    ("Go for Gold", 31, 36, 31, 27),
    ("Fantastic journeyer", 22, 18, 27, 22),
    ("Ever in the Future", 14, 27, 22, 18),
    ("Do what you do be do", 11, 8, 8, 11),
    ("Can't walk without you", 5, 5, 8, 11),
    ("Bertie's Blues", 2, 2, 2, 2),
    ("All about the house", 1, 1, 1, 1),
]


def write(name: str, doc: dict) -> None:
    (HERE / name).write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def err(code: str) -> dict:
    return {"err": code}


def playtime() -> dict:
    oct06: dict[str, dict] = {
        "A1": {"v": "PlayTime Radio"},
        "A9": {"v": "Song Title"},
        "C9": {"v": "Number of plays per week:"},
        "G9": {"v": "Total"},
        "C10": {"v": 1}, "D10": {"v": 2}, "E10": {"v": 3}, "F10": {"v": 4},
    }
    totals = [0, 0, 0, 0, 0]
    for i, (title, *plays) in enumerate(SONGS):
        r = 11 + i
        oct06[f"A{r}"] = {"v": i + 1}
        oct06[f"B{r}"] = {"v": title}
        for col, n in zip("CDEF", plays):
            oct06[f"{col}{r}"] = {"v": n}
        total = sum(plays)
        if r == 22:
            total -= 80
            oct06[f"G{r}"] = {"f": f"=SUM(C{r}:F{r})-80", "v": total}
        elif r == 28:
            total = 126
            oct06[f"G{r}"] = {"f": "=126", "v": total}
        else:
            oct06[f"G{r}"] = {"f": f"=SUM(C{r}:F{r})", "v": total}
        for k, n in enumerate([*plays, total]):
            totals[k] += n
    oct06["A37"] = {"v": "Totals"}
    for k, col in enumerate("CDEFG"):
        oct06[f"{col}37"] = {"f": f"=SUM({col}11:{col}36)", "v": totals[k]}
    oct06["A39"] = {"v": "Royalty"}
    oct06["B39"] = {"v": 0.05, "nf": "0%"}
    oct06["G39"] = {"v": round(totals[4] * 0.05, 2), "nf": "[$€-2] #,##0.00"}

    dec06 = {"A9": {"v": "Playlist"}}
    for i, (title, *_rest) in enumerate(SONGS):
        dec06[f"B{11 + i}"] = {"v": title}

    nov06 = {"A1": {"v": "November"}, "G5": {"v": 42}}

    errors = {
        "A1": {"v": "Error examples"},
        "B5": {"f": "=-DATE(2013,1,1)", "v": -41275, "nf": "dd/mm/yyyy"},
        "C5": {"f": "=SQRT(-1)", "v": err("#NUM!")},
        "E5": {"f": "=DATE(9999,12,31)+10", "v": 2958475, "nf": "dd/mm/yyyy"},
        "B11": {"f": '=1+"a"', "v": err("#VALUE!")},
        "B13": {"f": "=Zzz*2", "v": err("#NAME?")},
        "B15": {"f": "=VLOOKUP(B11,A19:B20,2)", "v": err("#VALUE!")},
        "B16": {"f": '=VLOOKUP("zz",A19:B20,2)', "v": err("#N/A")},
        "B17": {"f": "=VLOOKUP(A19,A19:B20,3)", "v": err("#REF!")},
        "C17": {"f": "=INDEX(A19:B20,5,1)", "v": err("#REF!")},
        "A19": {"v": "key"}, "B19": {"v": 1},
        "A20": {"v": "other"}, "B20": {"v": 2},
        "F20": {"v": "123", "align": "right"},
        "E20": {"f": "='F:\\DOCS\\SCC3\\Ex1 Demo\\[EX1DEMO.XLS]Budget08'!N70+F20", "v": 0},
        "B21": {"f": "=SUM(#REF!)", "v": err("#REF!")},
        "B22": {"f": "=1/B30", "v": err("#DIV/0!")},
        "B23": {"f": "=LN(0)", "v": err("#NUM!")},
        "D23": {"f": "=SUM(C19:D23)+Zzz", "v": err("#NAME?")},
        "B25": {"f": "=A19:A20 B21:B22", "v": err("#NULL!")},
        "B27": {"f": "=SUM(IF(ISERROR(B1:B25),1,0))", "array": True, "v": 12,
                "comment": {"author": "Reviewer", "text": "Counts error cells above"}},
    }
    ecb = {"A1": {"v": "Currency"}, "B1": {"v": "Rate"}, "A2": {"v": "USD"}, "B2": {"v": 1.3}}

    guid_a = "Z_062E4F23_7EA0_4B3B_9A3F_1D2B8E7C1A10_"
    guid_b = "Z_DBFAFBC0_7477_4C21_8E11_6A5D4C3B2A19_"
    names = [
        {"name": "index.en", "refers_to": "='ECB EuroFXref'!$A$1:$I$220", "scope": "ECB EuroFXref"},
        {"name": "Playlist3", "refers_to": "='Dec-06'!$B$11:$B$35"},
        {"name": "Royalty", "refers_to": "=0.071*'F:\\DOCS\\MyDocs\\[Currencies.xls]XE'!$D$7"},
        {"name": "Royalty", "refers_to": "='Oct 06'!$B$39", "scope": "Oct 06", "visible": False},
        {"name": "x", "refers_to": "=Errors!#REF!", "scope": "Errors"},
    ]
    for guid in (guid_a, guid_b):
        names += [
            {"name": guid + ".wvu.Cols", "refers_to": "='Nov''06'!$A:$A", "scope": "Nov'06", "visible": False},
            {"name": guid + ".wvu.Rows", "refers_to": "='Dec-06'!$36:$36", "scope": "Dec-06", "visible": False},
            {"name": guid + ".wvu.PrintTitles", "refers_to": "='Nov''06'!$1:$1", "scope": "Nov'06",
             "visible": False},
        ]
    return {
        "properties": {"title": "PlayTime5", "author": "Radio Desk"},
        "names": names,
        "sheets": [
            {"name": "Oct 06", "cells": oct06},
            {"name": "Nov'06", "cells": nov06},
            {"name": "Dec-06", "cells": dec06},
            {"name": "Errors", "merged": ["A1:F1"], "cells": errors},
            {"name": "ECB EuroFXref", "cells": ecb},
        ],
    }


STAFF_ROWS_OLD = [
    # (row, col A, col B, quarterly values, salary)
    (6, None, "CTO", [1, 1, 1, 1, 1, 1], 150000),
    (7, None, "Programmer", [5, 8, 10, 12, 14, 16], 75000),
    (8, None, "Tech Writer", [0, 1, 1, 2, 2, 4], 60000),
    (9, None, "Other", [0, 0, 0, 0, 0, 0], 80000),
    (11, None, "Contractors", [0, 0, 0, 0, 0, 0], 50000),
    (13, None, "VP Marketing", [1, 1, 1, 1, 1, 1], 125000),
    (14, None, "Product Manager", [1, 1, 2, 2, 3, 3], 95000),
    (15, None, "Mar-Com", [0, 0, 1, 1, 2, 2], 75000),
    (16, None, "Other", [1, 1, 1, 2, 2, 2], 80000),
]
QUARTERS = "EFGHIJ"
MONEY = "$ #,##0"


def _staff_header(cells: dict, cols: str, salary_col: str) -> None:
    cells["A1"] = {"v": "Staffing Plan"}
    labels = ["Q1", "Q2", "Q3", "Q4", "Q1", "Q2", "Q3"]
    years = ["Year 1"] * 4 + ["Year 2"] * 3
    for k, col in enumerate(cols):
        cells[f"{col}1"] = {"v": "Staffing"}
        cells[f"{col}2"] = {"v": labels[k]}
        cells[f"{col}3"] = {"v": years[k]}
    cells[f"{salary_col}1"] = {"v": "Annual Salary"}


def staffing_old() -> dict:
    cells: dict[str, dict] = {}
    _staff_header(cells, QUARTERS, "K")
    cells["A5"] = {"v": "Engineering"}
    cells["A12"] = {"v": "Marketing"}
    for row, _a, label, values, salary in STAFF_ROWS_OLD:
        cells[f"B{row}"] = {"v": label}
        cells[f"C{row}"] = {"v": "Input"}
        for col, v in zip(QUARTERS, values):
            cells[f"{col}{row}"] = {"v": v}
        cells[f"K{row}"] = {"v": salary, "nf": MONEY}
    eng = [sum(r[3][k] for r in STAFF_ROWS_OLD if r[0] in (6, 7, 8, 9)) for k in range(6)]
    mkt = [sum(r[3][k] for r in STAFF_ROWS_OLD if r[0] in (13, 14, 15, 16)) for k in range(6)]
    cells["B10"] = {"v": "Total Eng"}
    cells["B17"] = {"v": "Total Mktg"}
    cells["B19"] = {"v": "TOTAL EMP."}
    cells["A21"] = {"v": "Annual Rev/Emp (000)"}
    cells["C21"] = {"v": 350000, "nf": "#,##0"}
    for k, col in enumerate(QUARTERS):
        cells[f"{col}10"] = {"f": f"=SUM({col}6:{col}9)", "v": eng[k]}
        cells[f"{col}17"] = {"f": f"=SUM({col}13:{col}16)", "v": mkt[k]}
        emp = eng[k] + mkt[k]
        cells[f"{col}19"] = {"f": f"={col}10+{col}17", "v": emp}
        if col in "EFGH":
            value = round(350000 / emp / 1000) / 4
            cells[f"{col}21"] = {"f": f"=ROUND($C$21/{col}19/1000,0)/4", "v": value, "nf": "0"}
        else:
            value = round(350000 / emp, -3) / 4 / 1000
            cells[f"{col}21"] = {"f": f"=ROUND($C$21/{col}19,-3)/4/1000", "v": value, "nf": "0"}
    return {
        "properties": {"title": "Small staffing plan", "author": "Planner"},
        "names": [{"name": "_xlnm.Print_Area", "refers_to": "='Staffing Plan'!$C$4:$J$21",
                   "scope": "Staffing Plan"}],
        "sheets": [{"name": "Staffing Plan", "cells": cells}],
    }


def _round_half_up(x: float) -> float:
    from decimal import ROUND_HALF_UP, Decimal
    return float(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def staffing_new() -> dict:
    # rows 9 (eng Other) and 11 (Contractors) deleted; Q3 Year 2 column inserted at K
    cols = QUARTERS + "K"
    new_k = {6: 1, 7: 20, 8: 4, 11: 1, 12: 3, 13: 2, 14: 2}
    rows_new = [(6, "CTO", 6), (7, "Programmer", 7), (8, "Tech Writer", 8),
                (11, "VP Marketing", 13), (12, "Product Manager", 14), (13, "Mar-Com", 15), (14, "Other", 16)]
    old = {r[0]: r for r in STAFF_ROWS_OLD}
    cells: dict[str, dict] = {}
    _staff_header(cells, cols, "L")
    cells["A5"] = {"v": "Engineering"}
    cells["A10"] = {"v": "Marketing"}
    for row, label, old_row in rows_new:
        _r, _a, _label, values, salary = old[old_row]
        cells[f"B{row}"] = {"v": label}
        cells[f"C{row}"] = {"v": "Input"}
        for col, v in zip(cols, [*values, new_k[row]]):
            cells[f"{col}{row}"] = {"v": v}
        cells[f"L{row}"] = {"v": salary, "nf": MONEY}
    cells["B9"] = {"v": "Total Eng"}
    cells["B15"] = {"v": "Total Mktg"}
    cells["B17"] = {"v": "TOTAL EMP."}
    cells["A19"] = {"v": "Annual Rev/Emp (000)"}
    cells["C19"] = {"v": 400000, "nf": "#,##0"}
    for k, col in enumerate(cols):
        eng = sum(cells[f"{col}{r}"]["v"] for r in (6, 7, 8))
        mkt = sum(cells[f"{col}{r}"]["v"] for r in (11, 12, 13, 14))
        cells[f"{col}9"] = {"f": f"=SUM({col}6:{col}8)", "v": eng}
        cells[f"{col}15"] = {"f": f"=SUM({col}11:{col}14)", "v": mkt}
        cells[f"{col}17"] = {"f": f"={col}9+{col}15", "v": eng + mkt}
        value = _round_half_up(400000 / (eng + mkt) / 1000) / 4
        cells[f"{col}19"] = {"f": f"=ROUND($C$19/{col}17/1000,0)/4", "v": value, "nf": "0"}
    return {
        "properties": {"title": "Edited small staffing plan", "author": "Planner"},
        "names": [{"name": "_xlnm.Print_Area", "refers_to": "='Staffing Plan'!$C$4:$J$19",
                   "scope": "Staffing Plan"}],
        "sheets": [{"name": "Staffing Plan", "cells": cells}],
    }


def sum_pair() -> tuple[dict, dict]:
    old = {"B5": {"v": "Staff"}, "B10": {"v": "Total"}}
    values = {6: 1, 7: 5, 8: 2, 9: 0}
    for r, v in values.items():
        old[f"B{r}"] = {"v": f"Role {r}"}
        old[f"E{r}"] = {"v": v}
    old["E10"] = {"f": "=SUM(E6:E9)", "v": 8}
    new = {k.replace("10", "9"): v for k, v in old.items() if not k.endswith("9")}
    new["E9"] = {"f": "=SUM(E6:E8)", "v": 8}
    meta = {"properties": {"title": "Sum", "author": "Planner"}}
    return ({**meta, "sheets": [{"name": "Plan", "cells": old}]},
            {**meta, "sheets": [{"name": "Plan", "cells": new}]})


def warnings_all() -> dict:
    return {
        "precision_as_displayed": True,
        "r1c1_display_mode": True,
        "names": [
            {"name": "Rate", "refers_to": "=Data!$B$1"},
            {"name": "Rate", "refers_to": "=Data!$B$2", "scope": "Data"},
        ],
        "sheets": [
            {"name": "Data", "hidden_rows": [4], "cells": {
                "A1": {"v": "rate"}, "B1": {"v": 0.1}, "B2": {"v": 0.2},
                "B3": {"f": "=1/0", "v": err("#DIV/0!")},
                "B4": {"v": 7},
                "C1": {"v": 5, "locked": False},
            }},
            {"name": " Notes ", "visibility": "hidden", "cells": {"A1": {"v": "x"}}},
        ],
    }


def pristine() -> dict:
    return {
        "properties": {"title": "Clean book", "author": "Auditor"},
        "sheets": [{"name": "Sheet1", "cells": {
            "A1": {"v": 2}, "A2": {"v": 3}, "A3": {"f": "=A1*A2", "v": 6},
        }}],
    }


def consolidated() -> dict:
    sheets = []
    for month in ("Jan", "Feb", "Mar"):
        sheets.append({"name": month, "cells": {"A1": {"v": "Sales"}, "B1": {"v": 10}, "B2": {"v": 20},
                                                 "B3": {"f": "=B1+B2", "v": 30}}})
    sheets.append({"name": "Consolidated", "cells": {
        "B1": {"f": "=Jan!B1+Feb!B1+Mar!B1", "v": 30},
        "B2": {"f": "=Jan!B2+Feb!B2+Mar!B2", "v": 60},
        "B3": {"f": "=SUM(B1:B2)", "v": 90},
        "C1": {"f": "='C:\\Reports\\[Budget.xlsx]Plan'!A1", "v": 0},
        "C2": {"f": "='C:\\Reports\\[Budget.xlsx]Plan'!A2", "v": 0},
    }})
    sheets.append({"name": "Intro", "cells": {"A1": {"v": "Read me"}}})
    return {"properties": {"title": "Quarter", "author": "Finance"}, "sheets": sheets}


def trailing_blank() -> dict:
    return {
        "properties": {"title": "Blank names", "author": "Someone"},
        "sheets": [{"name": "Oct 06 ", "cells": {"A1": {"v": 1}}},
                   {"name": "Summary", "cells": {"A1": {"f": "='Oct 06 '!A1", "v": 1}}}],
    }


def main() -> None:
    write("playtime5.json", playtime())
    write("staffing_old.json", staffing_old())
    write("staffing_new.json", staffing_new())
    old, new = sum_pair()
    write("sum_old.json", old)
    write("sum_new.json", new)
    write("warnings_all.json", warnings_all())
    write("pristine.json", pristine())
    write("empty.json", {"sheets": [{"name": "Sheet1", "cells": {}}]})
    write("consolidated.json", consolidated())
    write("trailing_blank.json", trailing_blank())


if __name__ == "__main__":
    main()
