"""Entry point for loading a workbook from disk, whatever its container."""

from __future__ import annotations

import io
import os
from pathlib import Path
from typing import Mapping

from .errors import CorruptContainer, EncryptedWithoutPassword, NotASpreadsheet, UnsupportedLegacyFormat
from .fixture import load_fixture
from .model import WorkbookModel
from .xlsx import read_xlsx

ZIP_MAGIC = b"PK\x03\x04"
OLE_MAGIC = b"\xd0\xcf\x11\xe0\xa1\xb1\x1a\xe1"
_ENCRYPTED_MARK = "EncryptedPackage".encode("utf-16-le")


def _password_for(path: Path, password_map: Mapping[str, str] | None) -> str | None:
    if not password_map:
        return None
    for key in (str(path), path.name, str(path.resolve())):
        if key in password_map:
            return password_map[key]
    return None


def _decrypt(data: bytes, password: str) -> bytes:
    try:
        import msoffcrypto
    except ImportError:  # pragma: no cover - optional extra
        raise CorruptContainer("decrypting requires the 'msoffcrypto-tool' package") from None
    source = msoffcrypto.OfficeFile(io.BytesIO(data))
    out = io.BytesIO()
    try:
        source.load_key(password=password)
        source.decrypt(out)
    except Exception as exc:
        raise CorruptContainer(f"decryption failed: {exc}") from None
    return out.getvalue()


def load_workbook(path: str | os.PathLike, password_map: Mapping[str, str] | None = None) -> WorkbookModel:
    """Load an XLSX-family file or a JSON fixture into a WorkbookModel.

    ``password_map`` maps a file name (or full path) to the password used to open it.
    """
    p = Path(path)
    data = p.read_bytes()
    head = data[:8]
    if head.startswith(ZIP_MAGIC) or head.startswith(b"PK\x05\x06"):
        return read_xlsx(data, str(path))
    if head == OLE_MAGIC:
        if _ENCRYPTED_MARK not in data:
            raise UnsupportedLegacyFormat(f"{p.name}: binary .xls workbooks are not supported")
        password = _password_for(p, password_map)
        if password is None:
            raise EncryptedWithoutPassword(f"{p.name} is encrypted and no password was supplied")
        return read_xlsx(_decrypt(data, password), str(path))
    stripped = data.lstrip()
    if p.suffix.lower() == ".json" or stripped[:1] == b"{":
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError:
            raise NotASpreadsheet(f"{p.name}: fixture is not UTF-8 text") from None
        return load_fixture(text, str(path))
    raise NotASpreadsheet(f"{p.name}: unrecognised file signature")
