"""Compact payee-list codec: delta compression plus unsigned LEB128 varints.

Wire layout (all integers little-endian):

    [count: u32] [first id: u32] [varint delta]*

The id list must be non-decreasing; each delta is ``id[i] - id[i-1]``.
A delta of zero repeats the previous id, which the payment layer reads as
"this payee receives another multiple of the per-destination amount".
Varints carry 7 data bits per byte with the high bit as continuation.
Only canonical encodings are accepted on decode: a multi-byte varint whose
last byte is zero is padding and gets rejected, as does any byte left over
after the advertised count has been consumed.

A list of n consecutive ids therefore costs 8 + (n - 1) bytes, one byte
per additional payee.
"""

from __future__ import annotations

import struct

from .errors import CodecError

# Ids are 32-bit; deltas can never legitimately need more than 5 varint bytes.
MAX_ID = 2**32 - 1
_HEADER = struct.Struct("<II")


def encode_pay_data(ids: list[int]) -> bytes:
    """Encode a non-decreasing list of account ids to wire bytes."""
    if len(ids) > 0xFFFFFFFF:
        raise CodecError("payee count exceeds u32")
    if not ids:
        return (0).to_bytes(4, "little")
    prev = ids[0]
    if prev < 0 or prev > MAX_ID:
        raise CodecError(f"id {prev} outside 32-bit range")
    out = bytearray(_HEADER.pack(len(ids), prev))
    append = out.append
    for cur in ids[1:]:
        if cur < prev:
            raise CodecError("payee ids must be non-decreasing")
        if cur > MAX_ID:
            raise CodecError(f"id {cur} outside 32-bit range")
        delta = cur - prev
        prev = cur
        while delta > 0x7F:
            append(0x80 | (delta & 0x7F))
            delta >>= 7
        append(delta)
    return bytes(out)


def decode_pay_data(data: bytes, max_id: int = MAX_ID) -> list[int]:
    """Decode wire bytes back to the id list, rejecting malformed input.

    ``max_id`` tightens the id bound (e.g. to the allocated account count);
    running past it is a delta overflow.
    """
    if len(data) < 4:
        raise CodecError("truncated: count header missing")
    count = int.from_bytes(data[0:4], "little")
    if count == 0:
        if len(data) != 4:
            raise CodecError("trailing bytes after empty list")
        return []
    if len(data) < 8:
        raise CodecError("truncated: first id missing")
    first = int.from_bytes(data[4:8], "little")
    if first > max_id:
        raise CodecError(f"first id {first} exceeds bound {max_id}")
    ids = [first]
    pos = 8
    end = len(data)
    cur = first
    for _ in range(count - 1):
        delta = 0
        shift = 0
        start = pos
        while True:
            if pos >= end:
                raise CodecError("truncated inside varint")
            byte = data[pos]
            pos += 1
            delta |= (byte & 0x7F) << shift
            shift += 7
            if byte & 0x80 == 0:
                # Canonical form: the final byte of a multi-byte varint
                # must contribute bits, otherwise it is zero padding.
                if byte == 0 and pos - start > 1:
                    raise CodecError("non-canonical varint (zero padding byte)")
                break
            if shift > 35:
                raise CodecError("varint longer than 5 bytes")
        cur += delta
        if cur > max_id:
            raise CodecError(f"delta overflow: id {cur} exceeds bound {max_id}")
        ids.append(cur)
    if pos != end:
        raise CodecError("trailing bytes after last delta")
    return ids
