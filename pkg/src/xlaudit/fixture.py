"""JSON fixture format: a text stand-in for workbook containers.

Keys left out take the model defaults, and :func:`dump_fixture` writes only
non-default keys, so ``dump_fixture(load_fixture(s))`` reproduces ``s`` up to
key order for fixtures that themselves omit defaults.
"""

from __future__ import annotations

import json
from datetime import datetime
from types import MappingProxyType
from typing import Any

import jsonschema

from .errors import SchemaViolation
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
from .refs import AddressError, CellAddr, RangeAddr

_VALUE = {
    "oneOf": [
        {"type": ["number", "string", "boolean"]},
        {"type": "object", "required": ["err"], "additionalProperties": False,
         "properties": {"err": {"enum": [e.value for e in ErrorCode]}}},
    ]
}

_CELL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "v": _VALUE,
        "f": {"type": "string", "pattern": "^="},
        "array": {"type": "boolean"},
        "nf": {"type": "string"},
        "locked": {"type": "boolean"},
        "hidden_fmt": {"type": "boolean"},
        "text_entered": {"type": "boolean"},
        "comment": {"type": "object", "required": ["text"], "additionalProperties": False,
                    "properties": {"author": {"type": ["string", "null"]}, "text": {"type": "string"}}},
        "validation": {"type": "string"},
        "cf": {"type": "integer", "minimum": 0},
        "align": {"enum": ["left", "center", "right"]},
    },
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["sheets"],
    "additionalProperties": False,
    "properties": {
        "properties": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "title": {"type": "string"},
                "author": {"type": "string"},
                "last_author": {"type": "string"},
                "created": {"type": "string"},
                "modified": {"type": "string"},
                "last_printed": {"type": "string"},
                "file_size_bytes": {"type": "integer", "minimum": 0},
                "custom": {"type": "object", "additionalProperties": {"type": "string"}},
            },
        },
        "calc_mode": {"enum": [m.value for m in CalcMode]},
        "date_system": {"enum": [d.value for d in DateSystem]},
        "has_vba": {"type": "boolean"},
        "iteration_enabled": {"type": "boolean"},
        "precision_as_displayed": {"type": "boolean"},
        "r1c1_display_mode": {"type": "boolean"},
        "style_count": {"type": "integer", "minimum": 0},
        "names": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "refers_to"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "refers_to": {"type": "string"},
                    "scope": {"type": "string"},
                    "visible": {"type": "boolean"},
                },
            },
        },
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["target", "kind"],
                "additionalProperties": False,
                "properties": {"target": {"type": "string"},
                               "kind": {"enum": [k.value for k in LinkKind]}},
            },
        },
        "sheets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "cells"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "kind": {"enum": [k.value for k in SheetKind]},
                    "visibility": {"enum": [v.value for v in Visibility]},
                    "protected": {"type": "boolean"},
                    "hidden_rows": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "hidden_cols": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "merged": {"type": "array", "items": {"type": "string"}},
                    "formatted_range": {"type": "string"},
                    "cells": {"type": "object", "additionalProperties": _CELL},
                },
            },
        },
    },
}


def _path(err: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def _value(raw: Any, nf: str) -> CellValue:
    if raw is None:
        return BLANK
    if isinstance(raw, bool):
        return CellValue(ValueKind.BOOLEAN, raw)
    if isinstance(raw, (int, float)):
        kind = ValueKind.DATETIME if is_date_format(nf) else ValueKind.NUMBER
        return CellValue(kind, float(raw))
    if isinstance(raw, dict):
        return CellValue(ValueKind.ERROR, ErrorCode.parse(raw["err"]))
    return CellValue(ValueKind.TEXT, raw)


def _timestamp(raw: str | None, where: str) -> datetime | None:
    if raw is None:
        return None
    try:
        return datetime.fromisoformat(raw)
    except ValueError as exc:
        raise SchemaViolation(where, str(exc)) from None


def _sheet(raw: dict, idx: int) -> SheetModel:
    name = raw["name"]
    cells: dict[tuple[int, int], CellData] = {}
    for ref, spec in (raw.get("cells") or {}).items():
        try:
            addr = CellAddr.parse(name, ref)
        except AddressError as exc:
            raise SchemaViolation(f"$.sheets[{idx}].cells.{ref}", str(exc)) from None
        nf = spec.get("nf", "General")
        comment = spec.get("comment")
        cells[(addr.row, addr.col)] = CellData(
            addr=addr,
            value=_value(spec.get("v"), nf),
            formula_a1=spec.get("f"),
            is_array_formula=spec.get("array", False),
            number_format=nf,
            locked=spec.get("locked", True),
            format_hidden=spec.get("hidden_fmt", False),
            entered_as_text=spec.get("text_entered", False),
            has_comment=comment is not None,
            comment_author=comment.get("author") if comment else None,
            comment_text=comment.get("text") if comment else None,
            validation=spec.get("validation"),
            cond_format_count=spec.get("cf", 0),
            align=spec.get("align"),
        )
    merged = []
    for k, text in enumerate(raw.get("merged", [])):
        try:
            merged.append(RangeAddr.parse(name, text))
        except AddressError as exc:
            raise SchemaViolation(f"$.sheets[{idx}].merged[{k}]", str(exc)) from None
    for i, a in enumerate(merged):
        for b in merged[i + 1:]:
            if a.intersects(b):
                raise SchemaViolation(f"$.sheets[{idx}].merged", f"{a.a1} overlaps {b.a1}")
    used = bounding_range(name, cells)
    formatted = used
    if "formatted_range" in raw:
        try:
            formatted = union_range(RangeAddr.parse(name, raw["formatted_range"]), used)
        except AddressError as exc:
            raise SchemaViolation(f"$.sheets[{idx}].formatted_range", str(exc)) from None
    return SheetModel(
        name=name,
        kind=SheetKind(raw.get("kind", "worksheet")),
        visibility=Visibility(raw.get("visibility", "visible")),
        cells=MappingProxyType(cells),
        merged_areas=tuple(merged),
        hidden_rows=frozenset(raw.get("hidden_rows", ())),
        hidden_cols=frozenset(raw.get("hidden_cols", ())),
        protected=raw.get("protected", False),
        used_range=used,
        formatted_range=formatted,
    )


def load_fixture(text: str, path: str = "") -> WorkbookModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"invalid JSON: {exc}") from None
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise SchemaViolation(_path(errors[0]), errors[0].message)
    return model_from_dict(doc, path=path, size=len(text.encode("utf-8")))


def model_from_dict(doc: dict, path: str = "", size: int = 0) -> WorkbookModel:
    props = doc.get("properties", {})
    properties = DocProperties(
        title=props.get("title"),
        author=props.get("author"),
        last_author=props.get("last_author"),
        created=_timestamp(props.get("created"), "$.properties.created"),
        modified=_timestamp(props.get("modified"), "$.properties.modified"),
        last_printed=_timestamp(props.get("last_printed"), "$.properties.last_printed"),
        file_size_bytes=props.get("file_size_bytes", size),
        custom=MappingProxyType(dict(props.get("custom", {}))),
    )
    sheets = tuple(_sheet(s, i) for i, s in enumerate(doc["sheets"]))
    names = tuple(make_name(n["name"], n["refers_to"], n.get("scope"), n.get("visible", True))
                  for n in doc.get("names", []))
    declared = [LinkRef(l["target"], LinkKind(l["kind"])) for l in doc.get("links", [])]
    return WorkbookModel(
        path=path,
        properties=properties,
        sheets=sheets,
        names=names,
        external_links=tuple(discover_links(sheets, names, declared)),
        calc_mode=CalcMode(doc.get("calc_mode", "automatic")),
        iteration_enabled=doc.get("iteration_enabled", False),
        precision_as_displayed=doc.get("precision_as_displayed", False),
        r1c1_display_mode=doc.get("r1c1_display_mode", False),
        date_system=DateSystem(doc.get("date_system", "d1900")),
        has_vba=doc.get("has_vba", False),
        style_count=doc.get("style_count", 0),
    )


def _dump_value(v: CellValue) -> Any:
    if v.kind is ValueKind.ERROR:
        return {"err": v.value.value}
    if v.kind in (ValueKind.NUMBER, ValueKind.DATETIME):
        return int(v.value) if float(v.value).is_integer() else v.value
    return v.value


def dump_fixture(model: WorkbookModel, *, include_size: bool = False) -> dict:
    """Serialize a model to the fixture schema, omitting defaults."""
    out: dict[str, Any] = {}
    p = model.properties
    props: dict[str, Any] = {}
    for key in ("title", "author", "last_author"):
        if getattr(p, key) is not None:
            props[key] = getattr(p, key)
    for key in ("created", "modified", "last_printed"):
        if getattr(p, key) is not None:
            props[key] = getattr(p, key).isoformat()
    if include_size and p.file_size_bytes:
        props["file_size_bytes"] = p.file_size_bytes
    if p.custom:
        props["custom"] = dict(p.custom)
    if props:
        out["properties"] = props
    if model.calc_mode is not CalcMode.AUTOMATIC:
        out["calc_mode"] = model.calc_mode.value
    if model.date_system is not DateSystem.D1900:
        out["date_system"] = model.date_system.value
    for key in ("has_vba", "iteration_enabled", "precision_as_displayed", "r1c1_display_mode"):
        if getattr(model, key):
            out[key] = True
    if model.style_count:
        out["style_count"] = model.style_count
    if model.names:
        names = []
        for n in model.names:
            entry: dict[str, Any] = {"name": n.name, "refers_to": n.refers_to}
            if n.scope is not None:
                entry["scope"] = n.scope
            if not n.visible:
                entry["visible"] = False
            names.append(entry)
        out["names"] = names
    declared = [{"target": l.target, "kind": l.kind.value}
                for l in model.external_links if l.kind is not LinkKind.WORKBOOK]
    if declared:
        out["links"] = declared
    out["sheets"] = [_dump_sheet(s) for s in model.sheets]
    return out


def _dump_sheet(s: SheetModel) -> dict:
    d: dict[str, Any] = {"name": s.name}
    if s.kind is not SheetKind.WORKSHEET:
        d["kind"] = s.kind.value
    if s.visibility is not Visibility.VISIBLE:
        d["visibility"] = s.visibility.value
    if s.protected:
        d["protected"] = True
    if s.hidden_rows:
        d["hidden_rows"] = sorted(s.hidden_rows)
    if s.hidden_cols:
        d["hidden_cols"] = sorted(s.hidden_cols)
    if s.merged_areas:
        d["merged"] = [m.a1 for m in s.merged_areas]
    if s.formatted_range is not None and s.formatted_range != s.used_range:
        d["formatted_range"] = s.formatted_range.a1
    cells = {}
    for c in s.iter_cells():
        spec: dict[str, Any] = {}
        if not c.value.is_blank:
            spec["v"] = _dump_value(c.value)
        if c.formula_a1 is not None:
            spec["f"] = c.formula_a1
        if c.is_array_formula:
            spec["array"] = True
        if c.number_format != "General":
            spec["nf"] = c.number_format
        if not c.locked:
            spec["locked"] = False
        if c.format_hidden:
            spec["hidden_fmt"] = True
        if c.entered_as_text:
            spec["text_entered"] = True
        if c.has_comment:
            spec["comment"] = {"author": c.comment_author, "text": c.comment_text or ""}
            if c.comment_author is None:
                del spec["comment"]["author"]
        if c.validation is not None:
            spec["validation"] = c.validation
        if c.cond_format_count:
            spec["cf"] = c.cond_format_count
        if c.align is not None:
            spec["align"] = c.align
        cells[c.addr.a1] = spec
    d["cells"] = cells
    return d
