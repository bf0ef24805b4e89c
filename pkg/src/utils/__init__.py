"""Storage helpers for JSON artifacts and 16-bit rasters"""

from .json_store import JSONStore

__all__ = ["JSONStore"]
