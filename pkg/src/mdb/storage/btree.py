"""Fixed-record B+ trees over 8-byte identifiers.

Page 0 of every tree file is a meta page.  Leaves hold ``count`` records of
``arity`` little-endian u64 columns and a pointer to the next leaf (0 ends the
chain, page 0 never being a leaf).  Internal nodes hold ``count`` children,
each with the first record of its subtree as separator; the first separator
is never consulted, so inserting a new minimum needs no separator update.

Records are Python tuples of ints and compare lexicographically, which is the
identifier order.  A shorter tuple sorts before all its extensions, so a
prefix doubles as a lower-bound search key.
"""

from __future__ import annotations

import struct
from bisect import bisect_left

from ..errors import CorruptionError, SortOrderError, StorageError
from .pages import BufferPool, PagedFile

_META = struct.Struct("<4sBBHIIQI")
_MAGIC = b"MDBT"
_VERSION = 1
_HEADER = struct.Struct("<BxHI")  # kind, count, next-leaf (leaves only)
LEAF = 1
INTERNAL = 2


def _group(flat, arity):
    return list(zip(*[iter(flat)] * arity))


class BPlusTree:
    def __init__(self, pool: BufferPool, file: PagedFile, arity: int):
        self.pool = pool
        self.file = file
        self.arity = arity
        self.page_size = file.page_size
        self.leaf_capacity = (self.page_size - _HEADER.size) // (8 * arity)
        self.node_capacity = (self.page_size - _HEADER.size) // (8 * arity + 4)
        if self.leaf_capacity < 3 or self.node_capacity < 3:
            raise ValueError(f"page size {self.page_size} too small for arity {arity}")
        self.root = 1
        self.height = 1
        self.first_leaf = 1
        self.count = 0

    # -- construction ---------------------------------------------------------

    @classmethod
    def create(cls, pool: BufferPool, path, arity: int) -> "BPlusTree":
        """A new empty tree (one empty root leaf)."""
        return cls.bulk_load(pool, path, arity, ())

    @classmethod
    def bulk_load(cls, pool: BufferPool, path, arity: int, records) -> "BPlusTree":
        """Build a packed tree bottom-up from records in non-decreasing order."""
        file = PagedFile(path, pool.page_size, create=True)
        tree = cls(pool, file, arity)
        try:
            tree._bulk(records)
        except BaseException:
            file.close()
            raise
        return tree

    def _bulk(self, records) -> None:
        file = self.file
        file.write(0, bytes(self.page_size))
        level: list[tuple[tuple, int]] = []  # (first record, page) of each node
        chunk: list[tuple] = []
        prev = None
        count = 0
        next_page = 1
        for rec in records:
            rec = tuple(rec)
            if len(rec) != self.arity:
                raise ValueError(f"record {rec} does not have arity {self.arity}")
            if prev is not None and rec < prev:
                raise SortOrderError(f"record {count} out of order: {rec} < {prev}", file.path)
            prev = rec
            count += 1
            chunk.append(rec)
            if len(chunk) == self.leaf_capacity:
                level.append((chunk[0], next_page))
                # The next leaf is always the page written right after this one.
                file.write(next_page, self._pack_leaf(chunk, next_page + 1))
                next_page += 1
                chunk = []
        if chunk or not level:
            level.append((chunk[0] if chunk else (), next_page))
            file.write(next_page, self._pack_leaf(chunk, 0))
            next_page += 1
        else:
            # The last full leaf pointed at a page that will not be a leaf.
            last = level[-1][1]
            data = bytearray(self._read_raw(last))
            _HEADER.pack_into(data, 0, LEAF, self.leaf_capacity, 0)
            file.write(last, data)
        height = 1
        while len(level) > 1:
            upper = []
            for start in range(0, len(level), self.node_capacity):
                group = level[start:start + self.node_capacity]
                if len(group) == 1 and upper:
                    # Avoid a single-child node by borrowing from the previous one.
                    prev_group = upper.pop()
                    group = prev_group[2] + group
                    half = len(group) // 2
                    for part in (group[:half], group[half:]):
                        upper.append((part[0][0], None, part))
                    continue
                upper.append((group[0][0], None, group))
            level = []
            for first, _, group in upper:
                file.write(next_page, self._pack_node([g[0] for g in group], [g[1] for g in group]))
                level.append((first, next_page))
                next_page += 1
            height += 1
        self.root = level[0][1]
        self.height = height
        self.first_leaf = 1
        self.count = count
        self._write_meta()

    def _read_raw(self, page_no):
        return self.file.read(page_no)

    @classmethod
    def open(cls, pool: BufferPool, path) -> "BPlusTree":
        file = PagedFile(path, pool.page_size)
        try:
            if file.page_count < 2:
                raise CorruptionError(f"tree file too short: {path}")
            magic, version, arity, height, root, first_leaf, count, page_size = _META.unpack_from(file.read(0))
            if magic != _MAGIC or version != _VERSION:
                raise CorruptionError(f"not a tree file: {path}")
            if page_size != pool.page_size:
                raise StorageError(f"tree built with page size {page_size}, pool uses {pool.page_size}", path)
            tree = cls(pool, file, arity)
        except BaseException:
            file.close()
            raise
        tree.height, tree.root, tree.first_leaf, tree.count = height, root, first_leaf, count
        return tree

    def _write_meta(self) -> None:
        data = bytearray(self.page_size)
        _META.pack_into(data, 0, _MAGIC, _VERSION, self.arity, self.height, self.root,
                        self.first_leaf, self.count, self.page_size)
        self.file.write(0, data)

    def close(self) -> None:
        self.pool.drop(self.file)
        self._write_meta()
        self.file.sync()
        self.file.close()

    # -- page encoding --------------------------------------------------------

    def _pack_leaf(self, records, next_leaf: int) -> bytearray:
        data = bytearray(self.page_size)
        _HEADER.pack_into(data, 0, LEAF, len(records), next_leaf)
        if records:
            flat = [c for rec in records for c in rec]
            struct.pack_into(f"<{len(flat)}Q", data, _HEADER.size, *flat)
        return data

    def _pack_node(self, seps, children) -> bytearray:
        data = bytearray(self.page_size)
        n = len(children)
        _HEADER.pack_into(data, 0, INTERNAL, n, 0)
        flat = [c for rec in seps for c in (rec if rec else (0,) * self.arity)]
        struct.pack_into(f"<{len(flat)}Q", data, _HEADER.size, *flat)
        struct.pack_into(f"<{n}I", data, _HEADER.size + 8 * len(flat), *children)
        return data

    def _decode(self, page):
        """(kind, records-or-separators, next-leaf-or-children), cached on the page."""
        if page.cache is None:
            kind, n, nxt = _HEADER.unpack_from(page.data, 0)
            if kind == LEAF:
                flat = struct.unpack_from(f"<{n * self.arity}Q", page.data, _HEADER.size)
                page.cache = (LEAF, _group(flat, self.arity), nxt)
            elif kind == INTERNAL:
                flat = struct.unpack_from(f"<{n * self.arity}Q", page.data, _HEADER.size)
                children = list(struct.unpack_from(f"<{n}I", page.data, _HEADER.size + 8 * len(flat)))
                page.cache = (INTERNAL, _group(flat, self.arity), children)
            else:
                raise CorruptionError(f"bad page kind {kind} at page {page.page_no} of {self.file.path}")
        return page.cache

    def _load(self, page_no):
        page = self.pool.get(self.file, page_no)
        try:
            return self._decode(page)
        finally:
            self.pool.unpin(page)

    # -- reads ----------------------------------------------------------------

    def _find_leaf(self, key):
        page_no = self.root
        for _ in range(self.height - 1):
            kind, seps, children = self._load(page_no)
            page_no = children[max(bisect_left(seps, key, 1) - 1, 0)]
        return page_no

    def cursor(self) -> "Cursor":
        return Cursor(self)

    def range(self, prefix=()):
        """Records starting with ``prefix``, in key order."""
        prefix = tuple(prefix)
        k = len(prefix)
        cur = Cursor(self)
        rec = cur.seek(prefix)
        while rec is not None and rec[:k] == prefix:
            yield rec
            rec = cur.advance()

    def scan(self):
        return self.range(())

    def __iter__(self):
        return self.scan()

    def __len__(self) -> int:
        return self.count

    # -- incremental insert ---------------------------------------------------

    def insert(self, record) -> None:
        record = tuple(record)
        if len(record) != self.arity:
            raise ValueError(f"record {record} does not have arity {self.arity}")
        path = []
        page_no = self.root
        for _ in range(self.height - 1):
            kind, seps, children = self._load(page_no)
            idx = max(bisect_left(seps, record, 1) - 1, 0)
            path.append((page_no, idx))
            page_no = children[idx]
        page = self.pool.get(self.file, page_no)
        try:
            _, records, nxt = self._decode(page)
            records.insert(bisect_left(records, record), record)
            split = None
            if len(records) > self.leaf_capacity:
                half = len(records) // 2
                right = records[half:]
                del records[half:]
                new = self.pool.new_page(self.file)
                self._touch(new, (LEAF, right, nxt))
                self.pool.unpin(new)
                self._touch(page, (LEAF, records, new.page_no))
                split = (right[0], new.page_no)
            else:
                self._touch(page, page.cache)
        finally:
            self.pool.unpin(page)
        self.count += 1
        while split is not None and path:
            parent_no, idx = path.pop()
            split = self._insert_child(parent_no, idx + 1, *split)
        if split is not None:
            old_root = self.root
            new = self.pool.new_page(self.file)
            self._touch(new, (INTERNAL, [self._first_key(old_root), split[0]], [old_root, split[1]]))
            self.pool.unpin(new)
            self.root = new.page_no
            self.height += 1

    def _first_key(self, page_no):
        for _ in range(self.height):
            kind, items, rest = self._load(page_no)
            if kind == LEAF:
                return items[0] if items else ()
            if items[0]:
                return items[0]
            page_no = rest[0]
        return ()

    def _insert_child(self, page_no, pos, sep, child):
        page = self.pool.get(self.file, page_no)
        try:
            _, seps, children = self._decode(page)
            seps.insert(pos, sep)
            children.insert(pos, child)
            self._touch(page, page.cache)
            if len(children) <= self.node_capacity:
                return None
            half = len(children) // 2
            rs, rc = seps[half:], children[half:]
            del seps[half:], children[half:]
            new = self.pool.new_page(self.file)
            self._touch(new, (INTERNAL, rs, rc))
            self.pool.unpin(new)
            return (rs[0], new.page_no)
        finally:
            self.pool.unpin(page)

    def _encode(self, cache) -> bytearray:
        kind, items, rest = cache
        if kind == LEAF:
            return self._pack_leaf(items, rest)
        return self._pack_node(items, rest)

    def _touch(self, page, cache) -> None:
        # The decoded cache becomes authoritative; bytes are rebuilt on write-back.
        page.cache = cache
        page.encoder = self._encode
        page.dirty = True


class Cursor:
    """Forward cursor with lower-bound seeks.

    A cursor holds decoded leaf contents between calls but never keeps a page
    pinned: each page access pins, decodes (or reuses the page's cache) and
    unpins before returning.
    """

    __slots__ = ("tree", "records", "index", "next_leaf")

    def __init__(self, tree: BPlusTree):
        self.tree = tree
        self.records: list = []
        self.index = 0
        self.next_leaf = 0

    def _enter(self, page_no) -> None:
        kind, records, nxt = self.tree._load(page_no)
        if kind != LEAF:
            raise CorruptionError(f"expected a leaf at page {page_no}")
        self.records = records
        self.next_leaf = nxt

    def _settle(self):
        # Skip forward over exhausted (possibly empty) leaves.
        while self.index >= len(self.records):
            if not self.next_leaf:
                self.records = []
                self.index = 0
                return None
            self._enter(self.next_leaf)
            self.index = 0
        return self.records[self.index]

    def seek(self, key):
        """Position at the first record >= key; return it, or None at end."""
        records = self.records
        if records and records[0] <= key <= records[-1]:
            self.index = bisect_left(records, key)
            return records[self.index]
        self._enter(self.tree._find_leaf(key))
        self.index = bisect_left(self.records, key)
        return self._settle()

    def current(self):
        if self.index < len(self.records):
            return self.records[self.index]
        return None

    def advance(self):
        self.index += 1
        return self._settle()
