"""On-disk database: a directory of index trees, the EdgeTable, the
ObjectFile and the catalog, all sharing one buffer pool."""

from __future__ import annotations

import os

from .. import ids
from ..errors import StorageError
from ..ids import ObjectId
from .btree import BPlusTree
from .catalog import Catalog
from .edgetable import EdgeTable, write_edge_table
from .objectfile import ObjectFile
from .pages import DEFAULT_BUFFER_PAGES, DEFAULT_PAGE_SIZE, BufferPool

OBJECT_FILE = "objects.of"
EDGE_FILE = "edges.et"
CATALOG_FILE = "catalog.json"

# Canonical column layout of each relation.
RELATIONS = {
    "objects": ("id",),
    "edges": ("source", "type", "target", "eid"),
    "labels": ("object", "label"),
    "properties": ("object", "key", "value"),
}

# Tree name -> (relation, permutation).  Column i of the tree holds canonical
# column ``permutation[i]`` of the relation.
TREES = {
    "objects": ("objects", (0,)),
    "source_target_type_eid": ("edges", (0, 2, 1, 3)),
    "target_type_source_eid": ("edges", (2, 1, 0, 3)),
    "type_source_target_eid": ("edges", (1, 0, 2, 3)),
    "type_target_source_eid": ("edges", (1, 2, 0, 3)),
    "object_label": ("labels", (0, 1)),
    "label_object": ("labels", (1, 0)),
    "object_property_value": ("properties", (0, 1, 2)),
    "property_value_object": ("properties", (1, 2, 0)),
}


def permutations_of(relation: str) -> list[tuple[str, tuple]]:
    return [(name, perm) for name, (rel, perm) in TREES.items() if rel == relation]


def choose_permutation(relation: str, bound: set) -> tuple[str, tuple, int]:
    """Tree with the longest prefix of bound canonical columns.

    Returns (tree name, permutation, prefix length); ties go to the first
    listed tree.
    """
    best = None
    for name, perm in permutations_of(relation):
        k = 0
        while k < len(perm) and perm[k] in bound:
            k += 1
        if best is None or k > best[2]:
            best = (name, perm, k)
    return best


def _relation_rows(graph, relation):
    if relation == "objects":
        return [(o,) for o in graph.objects]
    if relation == "edges":
        return list(graph.edge_records())
    if relation == "labels":
        return list(graph.label_records())
    return list(graph.property_records())


def store_graph(path, graph, page_size: int = DEFAULT_PAGE_SIZE,
                buffer_pages: int = DEFAULT_BUFFER_PAGES) -> "Database":
    """Materialize ``graph`` under directory ``path`` and open it."""
    path = os.fspath(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create database directory ({exc.strerror})", path) from exc
    pool = BufferPool(buffer_pages, page_size)
    rows = {rel: _relation_rows(graph, rel) for rel in RELATIONS}
    for name, (rel, perm) in TREES.items():
        records = sorted(tuple(row[c] for c in perm) for row in rows[rel])
        tree = BPlusTree.bulk_load(pool, os.path.join(path, name + ".bt"), len(perm), records)
        tree.close()
    write_edge_table(os.path.join(path, EDGE_FILE),
                     (graph.gamma[e] for e in sorted(graph.gamma)), page_size)
    graph.strings.save(os.path.join(path, OBJECT_FILE))
    Catalog.from_graph(graph, page_size).save(os.path.join(path, CATALOG_FILE))
    return Database.open(path, buffer_pages)


class Database:
    def __init__(self, path, pool: BufferPool, catalog: Catalog, strings: ObjectFile,
                 trees: dict, edge_table: EdgeTable):
        self.path = path
        self.pool = pool
        self.catalog = catalog
        self.strings = strings
        self.trees = trees
        self.edge_table = edge_table

    @classmethod
    def open(cls, path, buffer_pages: int = DEFAULT_BUFFER_PAGES) -> "Database":
        path = os.fspath(path)
        if not os.path.isdir(path):
            raise StorageError("database directory not found", path)
        catalog = Catalog.load(os.path.join(path, CATALOG_FILE))
        pool = BufferPool(buffer_pages, catalog.page_size)
        strings = ObjectFile.load(os.path.join(path, OBJECT_FILE))
        trees = {}
        try:
            for name in TREES:
                trees[name] = BPlusTree.open(pool, os.path.join(path, name + ".bt"))
            edge_table = EdgeTable(pool, os.path.join(path, EDGE_FILE), catalog.edges)
        except BaseException:
            for tree in trees.values():
                tree.file.close()
            raise
        return cls(path, pool, catalog, strings, trees, edge_table)

    def close(self) -> None:
        for tree in self.trees.values():
            tree.pool.drop(tree.file)
            tree.file.close()
        self.edge_table.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- relation access ------------------------------------------------------

    def tree(self, name: str) -> BPlusTree:
        return self.trees[name]

    def scan(self, relation: str, bound: dict | None = None):
        """Canonical-order rows of ``relation`` agreeing with ``bound`` (column -> id)."""
        bound = bound or {}
        name, perm, k = choose_permutation(relation, set(bound))
        prefix = tuple(bound[c] for c in perm[:k])
        rest = [(i, bound[c]) for i, c in enumerate(perm) if i >= k and c in bound]
        inverse = [perm.index(c) for c in range(len(perm))]
        for rec in self.trees[name].range(prefix):
            if all(rec[i] == v for i, v in rest):
                yield tuple(rec[i] for i in inverse)

    def edge_lookup(self, eid: ObjectId) -> tuple:
        return self.edge_table.lookup(eid)

    # -- the accessor surface shared with PropertyDomainGraph -----------------

    def prop(self, obj: ObjectId, key: ObjectId) -> ObjectId | None:
        for rec in self.trees["object_property_value"].range((obj, key)):
            return rec[2]
        return None

    def is_object(self, oid: ObjectId) -> bool:
        for _ in self.trees["objects"].range((oid,)):
            return True
        return False

    def resolve(self, offset: int) -> str:
        return self.strings.resolve(offset)

    def value_key(self, oid):
        return ids.value_key(oid, self.strings.resolve)

    def display(self, oid):
        return ids.display(oid, self.strings.resolve)

    def lookup_string(self, text: str) -> ObjectId | None:
        data = text.encode("utf-8")
        if ids.inlinable(data):
            return ids.inline_string(data)
        offset = self.strings.lookup(text)
        return None if offset is None else ids.external_string(offset)

    def lookup_name(self, name: str) -> ObjectId | None:
        offset = self.strings.lookup(name)
        return None if offset is None else ids.named_node(offset)
