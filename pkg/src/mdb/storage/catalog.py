"""Relation statistics consumed by the cost model."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from ..errors import CorruptionError, StorageError

FORMAT = 1


@dataclass
class Catalog:
    page_size: int = 4096
    objects: int = 0
    edges: int = 0
    labels: int = 0
    properties: int = 0
    # Distinct values per canonical column of each relation.
    distinct: dict = field(default_factory=dict)
    # Per-constant counts keyed by the identifier as a decimal string.
    per_type: dict = field(default_factory=dict)
    per_label: dict = field(default_factory=dict)
    per_property: dict = field(default_factory=dict)
    format: int = FORMAT

    @classmethod
    def from_graph(cls, graph, page_size: int) -> "Catalog":
        per_type: dict[str, int] = {}
        for s, t, o in graph.gamma.values():
            per_type[str(t)] = per_type.get(str(t), 0) + 1
        per_label: dict[str, int] = {}
        label_rows = [(obj, lab) for obj, labs in graph.labels.items() for lab in labs]
        for _, lab in label_rows:
            per_label[str(lab)] = per_label.get(str(lab), 0) + 1
        per_property: dict[str, int] = {}
        for _, key in graph.props:
            per_property[str(key)] = per_property.get(str(key), 0) + 1
        edges = [(s, t, o, e) for e, (s, t, o) in graph.gamma.items()]
        props = [(obj, key, val) for (obj, key), val in graph.props.items()]

        def columns(rows, arity):
            return [len({row[i] for row in rows}) for i in range(arity)]

        return cls(
            page_size=page_size,
            objects=len(graph.objects),
            edges=len(edges),
            labels=len(label_rows),
            properties=len(props),
            distinct={
                "objects": [len(graph.objects)],
                "edges": columns(edges, 4),
                "labels": columns(label_rows, 2),
                "properties": columns(props, 3),
            },
            per_type=per_type,
            per_label=per_label,
            per_property=per_property,
        )

    def save(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(asdict(self), fh, sort_keys=True, indent=1)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"cannot write catalog ({exc.strerror})", path) from exc

    @classmethod
    def load(cls, path) -> "Catalog":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise StorageError(f"cannot read catalog ({exc.strerror})", path) from exc
        except json.JSONDecodeError as exc:
            raise CorruptionError(f"catalog is not valid JSON: {path}") from exc
        if data.get("format") != FORMAT:
            raise CorruptionError(f"unsupported catalog format in {path}")
        return cls(**data)

    def cardinality(self, relation: str) -> int:
        return {"objects": self.objects, "edges": self.edges,
                "labels": self.labels, "properties": self.properties}[relation]
