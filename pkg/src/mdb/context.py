"""Per-query evaluation context.

Queries name constants symbolically; a context turns them into identifiers
of one store (the in-memory graph or an on-disk database) and keeps the
overlay of strings created while the query runs, such as serialized path
witnesses.  Overlay strings are EXTERNAL_STRING ids whose offsets start at
``OVERLAY_BASE``, far above any real ObjectFile offset.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ids
from .dgql.ast import Literal, Name, Var
from .ids import ObjectId

OVERLAY_BASE = 1 << 55


@dataclass(frozen=True)
class Witness:
    """A path: objects o0..ok and k steps (edge id, forward?)."""
    objects: tuple
    steps: tuple

    def __len__(self) -> int:
        return len(self.steps)

    def reversed(self) -> "Witness":
        steps = tuple((eid, not fwd) for eid, fwd in reversed(self.steps))
        return Witness(tuple(reversed(self.objects)), steps)

    def text(self, display) -> str:
        out = [f"({display(self.objects[0])})"]
        for (eid, fwd), obj in zip(self.steps, self.objects[1:]):
            out.append(f"-[{display(eid)},{'fwd' if fwd else 'inv'}]->({display(obj)})")
        return "".join(out)


class QueryContext:
    def __init__(self, store):
        self.store = store
        self._overlay: list = []
        self._consts: dict = {}
        self.cache: dict = {}  # scratch space for evaluators

    # -- constants ---------------------------------------------------------

    def const_id(self, term) -> ObjectId | None:
        """Identifier of a Name or Literal in this store; None if absent."""
        try:
            return self._consts[term]
        except KeyError:
            pass
        if isinstance(term, Name):
            oid = self.store.lookup_name(term.text)
        elif isinstance(term.value, int):
            oid = ids.inline_int(term.value) if ids.INT_MIN <= term.value <= ids.INT_MAX else None
        else:
            oid = self.store.lookup_string(term.value)
        self._consts[term] = oid
        return oid

    def string_id(self, text: str) -> ObjectId | None:
        """Label and property-key strings."""
        return self.const_id(Literal(text))

    def term_id(self, term, mapping) -> ObjectId | None:
        if isinstance(term, Var):
            return mapping.get(term)
        return self.const_id(term)

    # -- overlay -----------------------------------------------------------

    def witness_id(self, witness: Witness) -> ObjectId:
        self._overlay.append(witness)
        return ids.external_string(OVERLAY_BASE + len(self._overlay) - 1)

    def witness(self, oid: ObjectId) -> Witness | None:
        if ids.tag_of(oid) != ids.EXTERNAL_STRING or ids.payload_of(oid) < OVERLAY_BASE:
            return None
        return self._overlay[ids.payload_of(oid) - OVERLAY_BASE]

    def resolve(self, offset: int) -> str:
        if offset >= OVERLAY_BASE:
            return self._overlay[offset - OVERLAY_BASE].text(self.display)
        return self.store.resolve(offset)

    # -- values ------------------------------------------------------------

    def prop(self, obj: ObjectId, key: ObjectId) -> ObjectId | None:
        if ids.tag_of(obj) == ids.EXTERNAL_STRING and ids.payload_of(obj) >= OVERLAY_BASE:
            return None
        return self.store.prop(obj, key)

    def value_key(self, oid):
        return ids.value_key(oid, self.resolve)

    def display(self, oid):
        return ids.display(oid, self.resolve)


def const_key(term) -> tuple:
    """Order key of a constant computed from its text alone.

    Equal to ``value_key`` of the identifier the constant would have, so
    conditions can compare constants that are not stored anywhere.
    """
    if isinstance(term, Name):
        return (1, term.text.encode("utf-8"))
    if isinstance(term.value, int):
        return (5, term.value)
    return (4, term.value.encode("utf-8"))
