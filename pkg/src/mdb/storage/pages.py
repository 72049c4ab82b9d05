"""Fixed-size pages and the shared clock buffer pool."""

from __future__ import annotations

import os
import threading

from ..errors import PoolExhaustedError, StorageError

DEFAULT_PAGE_SIZE = 4096
DEFAULT_BUFFER_PAGES = 8192


class PagedFile:
    """A file addressed in whole pages."""

    _next_id = 0

    def __init__(self, path, page_size: int = DEFAULT_PAGE_SIZE, create: bool = False):
        self.path = os.fspath(path)
        self.page_size = page_size
        PagedFile._next_id += 1
        self.file_id = PagedFile._next_id
        mode = "w+b" if create else "r+b"
        try:
            self._fh = open(self.path, mode)
        except OSError as exc:
            raise StorageError(f"cannot open page file ({exc.strerror})", self.path) from exc
        self._fh.seek(0, os.SEEK_END)
        size = self._fh.tell()
        if size % page_size:
            raise StorageError(f"file size {size} is not a multiple of page size {page_size}", self.path)
        self.page_count = size // page_size

    def read(self, page_no: int) -> bytearray:
        if not 0 <= page_no < self.page_count:
            raise StorageError(f"page {page_no} out of range", self.path)
        try:
            self._fh.seek(page_no * self.page_size)
            data = self._fh.read(self.page_size)
        except OSError as exc:
            raise StorageError(f"read failed ({exc.strerror})", self.path) from exc
        return bytearray(data)

    def write(self, page_no: int, data) -> None:
        if len(data) != self.page_size:
            raise StorageError(f"page write of {len(data)} bytes", self.path)
        try:
            self._fh.seek(page_no * self.page_size)
            self._fh.write(data)
        except OSError as exc:
            raise StorageError(f"write failed ({exc.strerror})", self.path) from exc
        self.page_count = max(self.page_count, page_no + 1)

    def allocate(self) -> int:
        page_no = self.page_count
        self.write(page_no, bytes(self.page_size))
        return page_no

    def sync(self) -> None:
        try:
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageError(f"sync failed ({exc.strerror})", self.path) from exc

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


class Page:
    __slots__ = ("file", "page_no", "data", "dirty", "pin_count", "ref", "cache", "encoder")

    def __init__(self, file: PagedFile, page_no: int, data: bytearray):
        self.file = file
        self.page_no = page_no
        self.data = data
        self.dirty = False
        self.pin_count = 0
        self.ref = False
        # Decoded form of ``data`` maintained by the page's owner; dropped on eviction.
        self.cache = None
        # When set, ``data`` is stale and is rebuilt from ``cache`` before write-back.
        self.encoder = None

    def materialize(self) -> None:
        if self.encoder is not None:
            self.data[:] = self.encoder(self.cache)
            self.encoder = None

    @property
    def key(self):
        return (self.file.file_id, self.page_no)


class BufferPool:
    """Clock (second-chance) replacement over a fixed number of frames.

    A page enters the pool with its reference bit clear and earns a second
    chance only when it is requested again while resident.  Pinned pages are
    never evicted; dirty victims are written back first.
    """

    def __init__(self, capacity: int = DEFAULT_BUFFER_PAGES, page_size: int = DEFAULT_PAGE_SIZE):
        if capacity < 1:
            raise ValueError("buffer pool needs at least one frame")
        self.capacity = capacity
        self.page_size = page_size
        self.frames: list[Page] = []
        self.table: dict[tuple, int] = {}
        self.hand = 0
        self.requests = 0
        self.reads = 0
        self.writes = 0
        self.evictions = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.table)

    def get(self, file: PagedFile, page_no: int) -> Page:
        """Return the page pinned, loading it (and evicting by clock) if needed."""
        key = (file.file_id, page_no)
        with self._lock:
            self.requests += 1
            index = self.table.get(key)
            if index is not None:
                page = self.frames[index]
                page.ref = True
                page.pin_count += 1
                return page
            page = Page(file, page_no, file.read(page_no))
            self.reads += 1
            self._install(page)
            page.pin_count = 1
            return page

    def new_page(self, file: PagedFile) -> Page:
        """Allocate a zeroed page at the end of ``file`` and return it pinned."""
        with self._lock:
            page_no = file.allocate()
            page = Page(file, page_no, bytearray(self.page_size))
            self._install(page)
            page.pin_count = 1
            return page

    def unpin(self, page: Page, dirty: bool = False) -> None:
        with self._lock:
            if page.pin_count <= 0:
                raise StorageError(f"unpin of unpinned page {page.page_no}", page.file.path)
            page.pin_count -= 1
            if dirty:
                page.dirty = True

    def _install(self, page: Page) -> None:
        if len(self.frames) < self.capacity:
            self.table[page.key] = len(self.frames)
            self.frames.append(page)
            return
        index = self._victim()
        victim = self.frames[index]
        if victim.dirty:
            victim.materialize()
            victim.file.write(victim.page_no, victim.data)
            self.writes += 1
        del self.table[victim.key]
        self.evictions += 1
        self.frames[index] = page
        self.table[page.key] = index

    def _victim(self) -> int:
        # Two sweeps clear every reference bit; a third finding nothing means all pinned.
        for _ in range(2 * self.capacity + 1):
            index = self.hand
            page = self.frames[index]
            self.hand = (self.hand + 1) % self.capacity
            if page.pin_count > 0:
                continue
            if page.ref:
                page.ref = False
                continue
            return index
        raise PoolExhaustedError(f"all {self.capacity} buffer frames are pinned")

    def flush(self, file: PagedFile | None = None) -> None:
        with self._lock:
            for page in self.frames:
                if page.dirty and (file is None or page.file is file):
                    page.materialize()
                    page.file.write(page.page_no, page.data)
                    page.dirty = False
                    self.writes += 1

    def drop(self, file: PagedFile) -> None:
        """Flush and forget every resident page of ``file`` (used on close)."""
        self.flush(file)
        with self._lock:
            keep = [p for p in self.frames if p.file is not file]
            for p in self.frames:
                if p.file is file and p.pin_count:
                    raise StorageError(f"closing file with pinned page {p.page_no}", file.path)
            self.frames = keep
            self.table = {p.key: i for i, p in enumerate(keep)}
            self.hand = 0

    def pinned_count(self) -> int:
        return sum(1 for p in self.frames if p.pin_count)
