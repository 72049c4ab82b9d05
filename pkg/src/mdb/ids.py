"""Object identifiers.

Every object is an 8-byte identifier: one tag byte naming the class followed
by a 56-bit payload.  Identifiers are plain ``int`` values laid out as
``tag << 56 | payload`` so that integer order is exactly the lexicographic
(tag, payload) order used as B+ tree key order.
"""

from __future__ import annotations

from typing import Callable, Union

from .errors import CorruptionError, NotAValueError

NAMED_NODE = 0x01
ANON_NODE = 0x02
EDGE = 0x03
INLINE_STRING = 0x04
INLINE_INT = 0x05
EXTERNAL_STRING = 0x06

TAGS = frozenset({NAMED_NODE, ANON_NODE, EDGE, INLINE_STRING, INLINE_INT, EXTERNAL_STRING})
VALUE_TAGS = frozenset({INLINE_STRING, INLINE_INT, EXTERNAL_STRING})

PAYLOAD_BITS = 56
PAYLOAD_MASK = (1 << PAYLOAD_BITS) - 1
INLINE_BYTES = 7
INT_MIN = -(1 << (PAYLOAD_BITS - 1))
INT_MAX = (1 << (PAYLOAD_BITS - 1)) - 1

ObjectId = int
Value = Union[str, int]
# offset -> stored string
Resolver = Callable[[int], str]


def make_id(tag: int, payload: int) -> ObjectId:
    if tag not in TAGS:
        raise ValueError(f"invalid identifier class 0x{tag:02x}")
    if not 0 <= payload <= PAYLOAD_MASK:
        raise ValueError(f"payload out of range: {payload}")
    return (tag << PAYLOAD_BITS) | payload


def tag_of(oid: ObjectId) -> int:
    return oid >> PAYLOAD_BITS


def payload_of(oid: ObjectId) -> int:
    return oid & PAYLOAD_MASK


def is_valid(oid: ObjectId) -> bool:
    return 0 <= oid < (1 << 64) and tag_of(oid) in TAGS


def edge_id(position: int) -> ObjectId:
    return make_id(EDGE, position)


def anon_node(number: int) -> ObjectId:
    return make_id(ANON_NODE, number)


def named_node(offset: int) -> ObjectId:
    return make_id(NAMED_NODE, offset)


def external_string(offset: int) -> ObjectId:
    return make_id(EXTERNAL_STRING, offset)


def is_value(oid: ObjectId) -> bool:
    return tag_of(oid) in VALUE_TAGS


def inlinable(data: bytes) -> bool:
    # A trailing NUL would be indistinguishable from padding.
    return len(data) <= INLINE_BYTES and not data.endswith(b"\0")


def inline_string(data: bytes) -> ObjectId:
    return make_id(INLINE_STRING, int.from_bytes(data.ljust(INLINE_BYTES, b"\0"), "big"))


def inline_int(value: int) -> ObjectId:
    if not INT_MIN <= value <= INT_MAX:
        raise OverflowError(f"integer {value} does not fit in 56 bits")
    return make_id(INLINE_INT, value & PAYLOAD_MASK)


def inline_string_bytes(oid: ObjectId) -> bytes:
    return payload_of(oid).to_bytes(INLINE_BYTES, "big").rstrip(b"\0")


def inline_int_value(oid: ObjectId) -> int:
    payload = payload_of(oid)
    if payload & (1 << (PAYLOAD_BITS - 1)):
        payload -= 1 << PAYLOAD_BITS
    return payload


def encode_value(raw: Value, intern: Callable[[str], int] | None = None) -> ObjectId:
    """Encode a string or integer as an identifier.

    Short strings are inlined; longer ones are handed to ``intern`` which must
    return the ObjectFile offset of the stored string.
    """
    if isinstance(raw, bool):
        raise TypeError("booleans are not supported values")
    if isinstance(raw, int):
        return inline_int(raw)
    if isinstance(raw, str):
        data = raw.encode("utf-8")
        if inlinable(data):
            return inline_string(data)
        if intern is None:
            raise ValueError(f"string of {len(data)} bytes needs an ObjectFile to be stored")
        return external_string(intern(raw))
    raise TypeError(f"unsupported value type {type(raw).__name__}")


def decode_value(oid: ObjectId, resolver: Resolver | None = None) -> Value:
    tag = tag_of(oid)
    if tag == INLINE_STRING:
        return inline_string_bytes(oid).decode("utf-8")
    if tag == INLINE_INT:
        return inline_int_value(oid)
    if tag == EXTERNAL_STRING:
        if resolver is None:
            raise CorruptionError(f"no resolver for external string at offset {payload_of(oid)}")
        return resolver(payload_of(oid))
    raise NotAValueError(f"identifier 0x{oid:016x} is not a value")


# Class ranks for the value order.  Strings share one rank whether inlined or
# not, so comparisons never depend on storage layout.
_RANK = {NAMED_NODE: 1, ANON_NODE: 2, EDGE: 3, INLINE_STRING: 4, EXTERNAL_STRING: 4, INLINE_INT: 5}
NULL_KEY = (0,)


def value_key(oid: ObjectId | None, resolver: Resolver | None = None) -> tuple:
    """Total-order key used by WHERE comparisons and ORDER BY.

    Integers compare numerically, strings and node names bytewise, anonymous
    nodes and edges by number; classes are ordered by tag; null sorts first.
    """
    if oid is None:
        return NULL_KEY
    tag = tag_of(oid)
    if tag == INLINE_INT:
        return (5, inline_int_value(oid))
    if tag == INLINE_STRING:
        return (4, inline_string_bytes(oid))
    if tag in (EXTERNAL_STRING, NAMED_NODE):
        if resolver is None:
            raise CorruptionError("resolver required to order dictionary-encoded objects")
        return (_RANK[tag], resolver(payload_of(oid)).encode("utf-8"))
    return (_RANK[tag], payload_of(oid))


def display(oid: ObjectId | None, resolver: Resolver | None = None) -> str | int | None:
    """Human-facing rendering: names for named nodes, ``_aN``/``_eN`` otherwise."""
    if oid is None:
        return None
    tag = tag_of(oid)
    if tag == NAMED_NODE:
        if resolver is None:
            raise CorruptionError("resolver required to render named nodes")
        return resolver(payload_of(oid))
    if tag == ANON_NODE:
        return f"_a{payload_of(oid)}"
    if tag == EDGE:
        return f"_e{payload_of(oid)}"
    return decode_value(oid, resolver)
