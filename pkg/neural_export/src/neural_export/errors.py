from __future__ import annotations


class ExportError(Exception):
    """Base class for everything this package raises on purpose."""


class UsageError(ExportError):
    """Bad flag combination or invalid job parameters."""


class ModelLoadError(ExportError):
    def __init__(self, model_id: str, msg: str):
        super().__init__(f"cannot load model {model_id!r}: {msg}")
        self.model_id = model_id


class DataError(ExportError):
    def __init__(self, path, line_no: int, msg: str):
        super().__init__(f"{path}:{line_no}: {msg}")
        self.path = path
        self.line_no = line_no


class RecordError(ExportError):
    """Per-record inference failure, reported with the record id."""

    def __init__(self, record_id: str, msg: str):
        super().__init__(f"record {record_id!r}: {msg}")
        self.record_id = record_id
