"""Public chain log: the append-only record stream a protocol run emits.

Every applied operation appends one typed record. The log is the public
face of a run: balance oracles reconstruct account state from it alone,
the replay tool re-executes it against a fresh state, and the gas model
prices each record's scaling payload. Rejected operations never log.

Record wire format: tag (u8), subject (u64, the payment index for
payment-scoped records and zero otherwise), then a type-specific body.
Integers little-endian; strings u16-length-prefixed utf-8; blobs
u32-length-prefixed. A log file is the magic header followed by
u32-length-prefixed records.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CodecError
from .wire import Reader, pack_bytes, pack_str, u16, u32, u64

FILE_MAGIC = b"BPLOG\x01"

# Wire sentinel for "open a new account" in deposit records; the in-memory
# API uses the NEW_ACCOUNT object, the wire uses the one u32 value that can
# never be a real id (the table is capped below it).
NEW_ACCOUNT_WIRE = 2**32 - 1


@dataclass(frozen=True)
class Record:
    """Base record; concrete types define TAG and their body codec."""

    TAG = 0

    @property
    def subject(self) -> int:
        return getattr(self, "pay_index", 0)

    def encode_body(self) -> bytes:  # pragma: no cover - overridden
        raise NotImplementedError

    def encode(self) -> bytes:
        return bytes([self.TAG]) + u64(self.subject) + self.encode_body()


@dataclass(frozen=True)
class Instantiated(Record):
    TAG = 0x01
    params_blob: bytes           # canonical params serialization
    externals_blob: bytes        # canonical initial adapter snapshot

    def encode_body(self) -> bytes:
        return pack_bytes(self.params_blob) + pack_bytes(self.externals_blob)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Instantiated":
        return cls(r.bytes_(), r.bytes_())


@dataclass(frozen=True)
class Registered(Record):
    TAG = 0x02
    account_id: int
    address: str

    def encode_body(self) -> bytes:
        return u32(self.account_id) + pack_str(self.address)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Registered":
        return cls(r.u32(), r.str_())


@dataclass(frozen=True)
class BulkRegistered(Record):
    TAG = 0x03
    bulk_id: int
    first_id: int
    count: int
    root: bytes

    def encode_body(self) -> bytes:
        return u32(self.bulk_id) + u32(self.first_id) + u32(self.count) + self.root

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "BulkRegistered":
        return cls(r.u32(), r.u32(), r.u32(), bytes(r.take(32)))


@dataclass(frozen=True)
class Claimed(Record):
    TAG = 0x04
    bulk_id: int
    account_id: int
    address: str
    proof_blob: bytes

    def encode_body(self) -> bytes:
        return u32(self.bulk_id) + u32(self.account_id) + pack_str(self.address) + pack_bytes(self.proof_blob)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Claimed":
        return cls(r.u32(), r.u32(), r.str_(), r.bytes_())


@dataclass(frozen=True)
class Deposited(Record):
    TAG = 0x05
    account_ref: int             # NEW_ACCOUNT_WIRE when the deposit opened the account
    account_id: int              # the id actually credited
    amount: int
    from_address: str

    def encode_body(self) -> bytes:
        return u32(self.account_ref) + u32(self.account_id) + u64(self.amount) + pack_str(self.from_address)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Deposited":
        return cls(r.u32(), r.u32(), r.u64(), r.str_())


@dataclass(frozen=True)
class Withdrawn(Record):
    TAG = 0x06
    account_id: int
    amount: int
    to_address: str
    sender: str

    def encode_body(self) -> bytes:
        return u32(self.account_id) + u64(self.amount) + pack_str(self.to_address) + pack_str(self.sender)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Withdrawn":
        return cls(r.u32(), r.u64(), r.str_(), r.str_())


@dataclass(frozen=True)
class Advanced(Record):
    TAG = 0x07
    blocks: int

    def encode_body(self) -> bytes:
        return u64(self.blocks)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Advanced":
        return cls(r.u64())


@dataclass(frozen=True)
class PaymentRegistered(Record):
    TAG = 0x08
    pay_index: int
    from_id: int
    per_destination: int
    unlocker_fee: int
    locking_key_hash: bytes | None
    sender: str
    pay_data: bytes              # exact codec wire bytes

    def encode_body(self) -> bytes:
        lock = b"\x01" + self.locking_key_hash if self.locking_key_hash else b"\x00"
        return (
            u32(self.from_id)
            + u64(self.per_destination)
            + u64(self.unlocker_fee)
            + lock
            + pack_str(self.sender)
            + pack_bytes(self.pay_data)
        )

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "PaymentRegistered":
        from_id = r.u32()
        per_destination = r.u64()
        unlocker_fee = r.u64()
        lock = bytes(r.take(32)) if r.u8() else None
        return cls(subject, from_id, per_destination, unlocker_fee, lock, r.str_(), r.bytes_())


@dataclass(frozen=True)
class Unlocked(Record):
    TAG = 0x09
    pay_index: int
    unlocker_id: int
    key: bytes

    def encode_body(self) -> bytes:
        return u32(self.unlocker_id) + pack_bytes(self.key)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Unlocked":
        return cls(subject, r.u32(), r.bytes_())


@dataclass(frozen=True)
class Refunded(Record):
    TAG = 0x0A
    pay_index: int

    def encode_body(self) -> bytes:
        return b""

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Refunded":
        return cls(subject)


@dataclass(frozen=True)
class CollectOpened(Record):
    TAG = 0x0B
    delegate_id: int
    slot_id: int
    recipient_id: int
    last_payment_index: int
    amount: int
    fee: int
    destination_address: str | None
    authorization: bytes

    def encode_body(self) -> bytes:
        dest = b"\x01" + pack_str(self.destination_address) if self.destination_address is not None else b"\x00"
        return (
            u32(self.delegate_id)
            + u16(self.slot_id)
            + u32(self.recipient_id)
            + u64(self.last_payment_index)
            + u64(self.amount)
            + u64(self.fee)
            + dest
            + self.authorization
        )

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "CollectOpened":
        delegate_id = r.u32()
        slot_id = r.u16()
        recipient_id = r.u32()
        last = r.u64()
        amount = r.u64()
        fee = r.u64()
        dest = r.str_() if r.u8() else None
        return cls(delegate_id, slot_id, recipient_id, last, amount, fee, dest, bytes(r.take(32)))


@dataclass(frozen=True)
class Challenged(Record):
    TAG = 0x0C
    delegate_id: int
    slot_id: int
    challenger_id: int

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id) + u32(self.challenger_id)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "Challenged":
        return cls(r.u32(), r.u16(), r.u32())


@dataclass(frozen=True)
class ListResponded(Record):
    TAG = 0x0D
    delegate_id: int
    slot_id: int
    pairs: tuple[tuple[int, int], ...]   # (pay index, claimed amount)

    def encode_body(self) -> bytes:
        out = bytearray(u32(self.delegate_id) + u16(self.slot_id) + u32(len(self.pairs)))
        for idx, amount in self.pairs:
            out += u64(idx) + u64(amount)
        return bytes(out)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "ListResponded":
        delegate_id = r.u32()
        slot_id = r.u16()
        pairs = tuple((r.u64(), r.u64()) for _ in range(r.u32()))
        return cls(delegate_id, slot_id, pairs)


@dataclass(frozen=True)
class PaymentSelected(Record):
    TAG = 0x0E
    delegate_id: int
    slot_id: int
    pay_index: int
    amount: int

    @property
    def subject(self) -> int:
        return self.pay_index

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id) + u64(self.amount)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "PaymentSelected":
        return cls(r.u32(), r.u16(), subject, r.u64())


@dataclass(frozen=True)
class InclusionProved(Record):
    TAG = 0x0F
    delegate_id: int
    slot_id: int
    pay_data: bytes

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id) + pack_bytes(self.pay_data)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "InclusionProved":
        return cls(r.u32(), r.u16(), r.bytes_())


@dataclass(frozen=True)
class ChallengeSucceeded(Record):
    TAG = 0x10
    delegate_id: int
    slot_id: int

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "ChallengeSucceeded":
        return cls(r.u32(), r.u16())


@dataclass(frozen=True)
class ChallengeFailed(Record):
    TAG = 0x11
    delegate_id: int
    slot_id: int

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "ChallengeFailed":
        return cls(r.u32(), r.u16())


@dataclass(frozen=True)
class SlotFreed(Record):
    TAG = 0x12
    delegate_id: int
    slot_id: int

    def encode_body(self) -> bytes:
        return u32(self.delegate_id) + u16(self.slot_id)

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "SlotFreed":
        return cls(r.u32(), r.u16())


@dataclass(frozen=True)
class FinalDigest(Record):
    """File trailer written by the run tools; never part of live state."""

    TAG = 0x7F
    digest: bytes

    def encode_body(self) -> bytes:
        return self.digest

    @classmethod
    def decode_body(cls, r: Reader, subject: int) -> "FinalDigest":
        return cls(bytes(r.take(32)))


RECORD_TYPES: dict[int, type[Record]] = {
    cls.TAG: cls
    for cls in (
        Instantiated, Registered, BulkRegistered, Claimed, Deposited, Withdrawn,
        Advanced, PaymentRegistered, Unlocked, Refunded, CollectOpened, Challenged,
        ListResponded, PaymentSelected, InclusionProved, ChallengeSucceeded,
        ChallengeFailed, SlotFreed, FinalDigest,
    )
}


def decode_record(data: bytes) -> Record:
    r = Reader(data)
    tag = r.u8()
    subject = r.u64()
    cls = RECORD_TYPES.get(tag)
    if cls is None:
        raise CodecError(f"unknown record tag 0x{tag:02x}")
    rec = cls.decode_body(r, subject)
    r.expect_end()
    if rec.subject != subject:
        raise CodecError("subject field does not match record body")
    return rec


class ChainLog:
    """Append-only record list plus a derived pay-data index."""

    def __init__(self) -> None:
        self.records: list[Record] = []
        self._pay_data: dict[int, bytes] = {}

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record: Record) -> None:
        self.records.append(record)
        if isinstance(record, PaymentRegistered):
            self._pay_data[record.pay_index] = record.pay_data

    def pay_data(self, pay_index: int) -> bytes:
        """Published payee bytes for a payment (data availability view)."""
        return self._pay_data[pay_index]

    def dump(self) -> bytes:
        out = bytearray(FILE_MAGIC)
        for rec in self.records:
            blob = rec.encode()
            out += u32(len(blob)) + blob
        return bytes(out)

    @classmethod
    def load(cls, data: bytes) -> "ChainLog":
        if data[: len(FILE_MAGIC)] != FILE_MAGIC:
            raise CodecError("bad log file magic")
        log = cls()
        r = Reader(data[len(FILE_MAGIC):])
        while not r.done():
            log.append(decode_record(bytes(r.take(r.u32()))))
        return log


def scaling_payload(record: Record) -> bytes:
    """The part of a record that grows with input size, for gas pricing.

    Fixed-size arguments are absorbed into the per-operation fixed gas
    constants, so only genuinely size-dependent payloads count here.
    """
    if isinstance(record, PaymentRegistered):
        return record.pay_data
    if isinstance(record, InclusionProved):
        return record.pay_data
    if isinstance(record, ListResponded):
        return record.encode_body()[10:]
    if isinstance(record, Claimed):
        return record.proof_blob
    if isinstance(record, Unlocked):
        return record.key
    return b""
