"""Collect authorizations: simulation-grade keyed MACs.

A collect must carry the recipient's sign-off over the exact call
parameters. Here the address string doubles as the MAC key (HMAC-SHA256),
which gives deterministic, parameter-binding authorizations that any bit
flip invalidates. This is explicitly not production cryptography: anyone
who knows an address could forge for it, which is fine inside a simulator
where forging is a test fixture, not an attack surface.

The signed message binds the protocol instance and every collect
parameter in call order, so an authorization can never be replayed against
another instance, slot, range, or amount.
"""

from __future__ import annotations

import hmac
import hashlib

from .wire import pack_str, u16, u32, u64

MAC_SIZE = 32


def collect_auth_message(
    instance_id: bytes,
    delegate_id: int,
    slot_id: int,
    recipient_id: int,
    last_payment_index: int,
    amount: int,
    fee: int,
    destination_address: str | None,
) -> bytes:
    dest = b"\x01" + pack_str(destination_address) if destination_address is not None else b"\x00"
    return (
        b"BPCOLLECT\x01"
        + instance_id
        + u32(delegate_id)
        + u16(slot_id)
        + u32(recipient_id)
        + u64(last_payment_index)
        + u64(amount)
        + u64(fee)
        + dest
    )


def sign_collect(address: str, message: bytes) -> bytes:
    return hmac.new(address.encode("utf-8"), message, hashlib.sha256).digest()


def verify_collect(address: str, message: bytes, mac: bytes) -> bool:
    return hmac.compare_digest(sign_collect(address, message), mac)
