class LoadError(Exception):
    """Base class for workbook loading failures."""


class NotASpreadsheet(LoadError):
    pass


class CorruptContainer(LoadError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class EncryptedWithoutPassword(LoadError):
    pass


class UnsupportedLegacyFormat(LoadError):
    pass


class SchemaViolation(LoadError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason
