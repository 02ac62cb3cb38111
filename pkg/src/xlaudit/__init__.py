"""Static audit, comparison and dependency analysis for spreadsheet workbooks."""

from .errors import (
    CorruptContainer,
    EncryptedWithoutPassword,
    LoadError,
    NotASpreadsheet,
    SchemaViolation,
    UnsupportedLegacyFormat,
)
from .fixture import dump_fixture, load_fixture
from .formula import LexError, OutOfGrid, extract_refs, from_r1c1, metrics, to_r1c1, tokenize
from .loader import load_workbook
from .model import WorkbookModel
from .refs import CellAddr, RangeAddr

__all__ = [
    "CellAddr", "CorruptContainer", "EncryptedWithoutPassword", "LexError", "LoadError",
    "NotASpreadsheet", "OutOfGrid", "RangeAddr", "SchemaViolation", "UnsupportedLegacyFormat",
    "WorkbookModel", "dump_fixture", "extract_refs", "from_r1c1", "load_fixture", "load_workbook",
    "metrics", "to_r1c1", "tokenize",
]
