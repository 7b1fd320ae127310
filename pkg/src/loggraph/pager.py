"""Page-granular storage backend.

Every read and write goes through fixed-size pages so that storage traffic
can be counted exactly. A page starts with a 16-byte header:

    byte  0      presorted flag (0/1)
    bytes 1-2    record count, little-endian uint16
    bytes 3-15   reserved (zero)

The remaining bytes are the record region. Records are fixed width per file
and never span pages, so every page parses on its own.
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass

from .errors import AddressError, ContractViolation, CorruptPageError

PAGE_HEADER = 16
DEFAULT_PAGE_SIZE = 16384

_HDR = struct.Struct("<BH")


def page_capacity(page_size: int, record_width: int) -> int:
    """Records of the given width that fit in one page's record region."""
    return (page_size - PAGE_HEADER) // record_width


def pack_page(page_size: int, payload: bytes, count: int, presorted: bool = False) -> bytes:
    """Assemble a full page image from a record-region payload."""
    if len(payload) > page_size - PAGE_HEADER:
        raise ContractViolation(f"payload of {len(payload)} bytes exceeds record region")
    buf = bytearray(page_size)
    _HDR.pack_into(buf, 0, 1 if presorted else 0, count)
    buf[PAGE_HEADER : PAGE_HEADER + len(payload)] = payload
    return bytes(buf)


@dataclass
class Page:
    """One page image; header fields are parsed out of the raw bytes."""

    page_id: int
    data: bytes

    @property
    def presorted(self) -> bool:
        return self.data[0] != 0

    @property
    def record_count(self) -> int:
        return _HDR.unpack_from(self.data, 0)[1]

    def records(self, record_width: int) -> bytes:
        """Record-region bytes holding exactly record_count records."""
        n = self.record_count * record_width
        if PAGE_HEADER + n > len(self.data):
            raise CorruptPageError(
                f"page {self.page_id}: record count {self.record_count} overflows page"
            )
        return self.data[PAGE_HEADER : PAGE_HEADER + n]

    def region(self) -> bytes:
        """The full record region, ignoring the count (byte-stream pages)."""
        return self.data[PAGE_HEADER:]


class PageStore:
    """A flat file of concatenated pages with read/write counters.

    Appends and reads are serialized by a lock so counter updates and the
    file offset stay consistent under concurrent callers. There is no cache
    here on purpose: every read_page call is a counted storage access.
    """

    def __init__(self, path: str, page_size: int = DEFAULT_PAGE_SIZE, create: bool = True):
        self.path = path
        self.page_size = page_size
        self.pages_read = 0
        self.pages_written = 0
        self._lock = threading.Lock()
        mode = "w+b" if create or not os.path.exists(path) else "r+b"
        self._f = open(path, mode)
        self._f.seek(0, os.SEEK_END)
        size = self._f.tell()
        if size % page_size != 0:
            raise CorruptPageError(f"{path}: length {size} is not a page multiple")
        self._npages = size // page_size

    def __len__(self) -> int:
        return self._npages

    @property
    def num_pages(self) -> int:
        return self._npages

    def read_page(self, page_id: int) -> Page:
        with self._lock:
            if page_id < 0 or page_id >= self._npages:
                raise AddressError(
                    f"{self.path}: page {page_id} out of range (store has {self._npages})"
                )
            self._f.seek(page_id * self.page_size)
            data = self._f.read(self.page_size)
            if len(data) != self.page_size:
                raise CorruptPageError(f"{self.path}: short read at page {page_id}")
            self.pages_read += 1
        return Page(page_id, data)

    def append_page(self, data: bytes) -> int:
        if len(data) != self.page_size:
            raise ContractViolation(
                f"append_page needs exactly {self.page_size} bytes, got {len(data)}"
            )
        with self._lock:
            ordinal = self._npages
            self._f.seek(ordinal * self.page_size)
            self._f.write(data)
            self._npages += 1
            self.pages_written += 1
        return ordinal

    def write_page(self, page_id: int, data: bytes) -> None:
        """Overwrite an existing page in place (state vectors need this)."""
        if len(data) != self.page_size:
            raise ContractViolation(
                f"write_page needs exactly {self.page_size} bytes, got {len(data)}"
            )
        with self._lock:
            if page_id < 0 or page_id >= self._npages:
                raise AddressError(f"{self.path}: page {page_id} out of range")
            self._f.seek(page_id * self.page_size)
            self._f.write(data)
            self.pages_written += 1

    def reset_counters(self) -> None:
        with self._lock:
            self.pages_read = 0
            self.pages_written = 0

    def flush(self) -> None:
        self._f.flush()

    def close(self) -> None:
        self._f.close()


class StoreRegistry:
    """Opens PageStores tagged with a traffic class (csr/log/edgelog/state).

    The engine diffs totals() snapshots at superstep boundaries to split page
    counts per class without resetting the per-store counters.
    """

    CLASSES = ("csr", "log", "edgelog", "state")

    def __init__(self, page_size: int = DEFAULT_PAGE_SIZE):
        self.page_size = page_size
        self._stores: dict[str, list[PageStore]] = {c: [] for c in self.CLASSES}
        self._retired_reads: dict[str, int] = {}
        self._retired_writes: dict[str, int] = {}

    def open(self, path: str, klass: str, create: bool = True) -> PageStore:
        store = PageStore(path, self.page_size, create=create)
        self._stores[klass].append(store)
        return store

    def drop(self, store: PageStore, klass: str, unlink: bool = False) -> None:
        self._stores[klass].remove(store)
        # keep the dropped store's traffic in the totals
        self._retired_reads[klass] = self._retired_reads.get(klass, 0) + store.pages_read
        self._retired_writes[klass] = self._retired_writes.get(klass, 0) + store.pages_written
        store.close()
        if unlink:
            os.unlink(store.path)

    def totals(self) -> dict[str, tuple[int, int]]:
        out = {}
        for klass, stores in self._stores.items():
            r = sum(s.pages_read for s in stores) + self._retired_reads.get(klass, 0)
            w = sum(s.pages_written for s in stores) + self._retired_writes.get(klass, 0)
            out[klass] = (r, w)
        return out

    def close_all(self) -> None:
        for stores in self._stores.values():
            for s in stores:
                s.close()
