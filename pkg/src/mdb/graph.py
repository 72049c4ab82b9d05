"""In-memory property domain graph.

This is the reference form of the data model: a set of objects, the edge map
``gamma`` (edge id -> (source, type, target)), labels, and properties.  The
query oracle evaluates directly over it, and import builds one before
writing the on-disk indexes so both views always share identifiers.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import ids
from .errors import PropertyConflictError
from .ids import ObjectId
from .storage.objectfile import ObjectFile


@dataclass
class PropertyDomainGraph:
    objects: set = field(default_factory=set)
    gamma: dict = field(default_factory=dict)
    labels: dict = field(default_factory=lambda: defaultdict(set))
    props: dict = field(default_factory=dict)
    strings: ObjectFile = field(default_factory=ObjectFile)

    # -- relational views -------------------------------------------------

    def edge_records(self):
        """DomainGraph(source, type, target, eid) tuples in eid order."""
        for eid in sorted(self.gamma):
            s, t, o = self.gamma[eid]
            yield (s, t, o, eid)

    def label_records(self):
        for obj in sorted(self.labels):
            for label in sorted(self.labels[obj]):
                yield (obj, label)

    def property_records(self):
        for (obj, key), value in sorted(self.props.items()):
            yield (obj, key, value)

    # -- accessors shared with the on-disk database -------------------------

    def prop(self, obj: ObjectId, key: ObjectId) -> ObjectId | None:
        return self.props.get((obj, key))

    def is_object(self, oid: ObjectId) -> bool:
        return oid in self.objects

    def resolve(self, offset: int) -> str:
        return self.strings.resolve(offset)

    def value_key(self, oid):
        return ids.value_key(oid, self.strings.resolve)

    def display(self, oid):
        return ids.display(oid, self.strings.resolve)

    def lookup_string(self, text: str) -> ObjectId | None:
        """Identifier of a string value without storing it; None if absent."""
        data = text.encode("utf-8")
        if ids.inlinable(data):
            return ids.inline_string(data)
        offset = self.strings.lookup(text)
        return None if offset is None else ids.external_string(offset)

    def lookup_name(self, name: str) -> ObjectId | None:
        offset = self.strings.lookup(name)
        return None if offset is None else ids.named_node(offset)


def build_reference_graph(
    edges: Sequence[tuple],
    labels: Iterable[tuple] = (),
    props: Iterable[tuple] = (),
    nodes: Iterable[ObjectId] = (),
    strings: ObjectFile | None = None,
) -> PropertyDomainGraph:
    """Build a graph, numbering edges from zero in input order.

    ``edges`` holds (source, type, target) identifiers; components may refer
    to edge ids created by this same call.  Objects are the graph structure
    (edge ids and every edge component) plus every annotated or explicitly
    listed node.  Label ids, property keys and property values are external
    annotations and do not become objects.
    """
    graph = PropertyDomainGraph(strings=strings if strings is not None else ObjectFile())
    for position, (s, t, o) in enumerate(edges):
        eid = ids.edge_id(position)
        graph.gamma[eid] = (s, t, o)
        graph.objects.update((eid, s, t, o))
    for obj, label in labels:
        graph.labels[obj].add(label)
        graph.objects.add(obj)
    for obj, key, value in props:
        current = graph.props.get((obj, key))
        if current is not None and current != value:
            raise PropertyConflictError(
                f"object {graph.display(obj)!r} has conflicting values for "
                f"{graph.display(key)!r}: {graph.display(current)!r} vs {graph.display(value)!r}"
            )
        graph.props[(obj, key)] = value
        graph.objects.add(obj)
    graph.objects.update(nodes)
    graph.labels = dict(graph.labels)
    return graph
