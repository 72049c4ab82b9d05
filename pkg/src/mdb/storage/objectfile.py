"""ObjectFile: append-only dictionary of long strings and node names.

Entries are a 4-byte little-endian length followed by UTF-8 bytes.  The
offset of the length prefix is the payload of the EXTERNAL_STRING or
NAMED_NODE identifier referring to the entry.  The string -> offset hash
index is rebuilt by scanning the file on load and is never persisted.
"""

from __future__ import annotations

import os
import struct

from ..errors import CorruptionError, StorageError

_LEN = struct.Struct("<I")


class ObjectFile:
    def __init__(self, data: bytes = b""):
        self._data = bytearray(data)
        self._offsets: dict[str, int] = {}
        self._strings: dict[int, str] = {}
        pos = 0
        end = len(self._data)
        while pos < end:
            if pos + _LEN.size > end:
                raise CorruptionError(f"truncated ObjectFile entry at offset {pos}")
            (size,) = _LEN.unpack_from(self._data, pos)
            start = pos + _LEN.size
            if start + size > end:
                raise CorruptionError(f"truncated ObjectFile entry at offset {pos}")
            text = self._data[start:start + size].decode("utf-8")
            self._offsets.setdefault(text, pos)
            self._strings[pos] = text
            pos = start + size

    @classmethod
    def load(cls, path) -> "ObjectFile":
        try:
            with open(path, "rb") as fh:
                return cls(fh.read())
        except OSError as exc:
            raise StorageError(f"cannot read ObjectFile ({exc.strerror})", path) from exc

    def save(self, path) -> None:
        try:
            with open(path, "wb") as fh:
                fh.write(self._data)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"cannot write ObjectFile ({exc.strerror})", path) from exc

    def intern(self, text: str) -> int:
        """Offset of ``text``, appending it first if it was never stored."""
        offset = self._offsets.get(text)
        if offset is None:
            offset = len(self._data)
            encoded = text.encode("utf-8")
            self._data += _LEN.pack(len(encoded)) + encoded
            self._offsets[text] = offset
            self._strings[offset] = text
        return offset

    def lookup(self, text: str) -> int | None:
        return self._offsets.get(text)

    def resolve(self, offset: int) -> str:
        try:
            return self._strings[offset]
        except KeyError:
            raise CorruptionError(f"no ObjectFile entry at offset {offset}") from None

    def __len__(self) -> int:
        return len(self._strings)

    def __contains__(self, text: str) -> bool:
        return text in self._offsets

    @property
    def size(self) -> int:
        return len(self._data)

    def to_bytes(self) -> bytes:
        return bytes(self._data)
