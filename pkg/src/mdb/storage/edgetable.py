"""EdgeTable: edge id -> (source, type, target) by position arithmetic.

The file is a run of 24-byte records; the record of the edge with payload
``p`` starts at byte ``24 * p``.  Reads go through the buffer pool, so a
record that straddles a page boundary is assembled from two pages.
"""

from __future__ import annotations

import struct

from .. import ids
from ..errors import UnknownEdgeError
from .pages import BufferPool, PagedFile

RECORD = struct.Struct("<3Q")


def write_edge_table(path, triples, page_size: int) -> int:
    """Write ``triples`` (in edge-id order) padded to whole pages; return the count."""
    data = bytearray()
    for s, t, o in triples:
        data += RECORD.pack(s, t, o)
    count = len(data) // RECORD.size
    data += bytes(-len(data) % page_size)
    file = PagedFile(path, page_size, create=True)
    try:
        for page_no in range(len(data) // page_size):
            file.write(page_no, data[page_no * page_size:(page_no + 1) * page_size])
        file.sync()
    finally:
        file.close()
    return count


class EdgeTable:
    def __init__(self, pool: BufferPool, path, count: int):
        self.pool = pool
        self.file = PagedFile(path, pool.page_size)
        self.count = count

    def __len__(self) -> int:
        return self.count

    def lookup(self, eid: int) -> tuple[int, int, int]:
        if ids.tag_of(eid) != ids.EDGE:
            raise UnknownEdgeError(f"identifier 0x{eid:016x} is not an edge", self.file.path)
        position = ids.payload_of(eid)
        if position >= self.count:
            raise UnknownEdgeError(f"edge {position} beyond table of {self.count}", self.file.path)
        size = self.pool.page_size
        offset = position * RECORD.size
        page_no, start = divmod(offset, size)
        page = self.pool.get(self.file, page_no)
        try:
            if start + RECORD.size <= size:
                return RECORD.unpack_from(page.data, start)
            head = bytes(page.data[start:])
        finally:
            self.pool.unpin(page)
        page = self.pool.get(self.file, page_no + 1)
        try:
            return RECORD.unpack(head + bytes(page.data[:RECORD.size - len(head)]))
        finally:
            self.pool.unpin(page)

    def close(self) -> None:
        self.pool.drop(self.file)
        self.file.close()
