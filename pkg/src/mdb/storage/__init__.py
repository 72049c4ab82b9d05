"""Persistent layer: pages, buffer pool, B+ trees, EdgeTable, ObjectFile, catalog."""

from .btree import BPlusTree
from .catalog import Catalog
from .database import RELATIONS, TREES, Database, choose_permutation, store_graph
from .edgetable import EdgeTable
from .objectfile import ObjectFile
from .pages import BufferPool, PagedFile

__all__ = [
    "BPlusTree", "BufferPool", "Catalog", "Database", "EdgeTable", "ObjectFile",
    "PagedFile", "RELATIONS", "TREES", "choose_permutation", "store_graph",
]
