"""Payment registration, the optional lock stage, refunds, entitlements.

A registered payment escrows per_destination * payee_count (plus the
unlocker fee when locked) out of the buyer's balance into the escrow pool
and publishes the encoded payee bytes on the chain log. Only the 32-byte
digest of those bytes is kept in the payment record, mirroring a contract
that stores calldata commitments rather than calldata.

Locked payments follow a hash-lock handshake: the buyer binds an unlocker
id and key hash; revealing the key on-chain before the unlock window ends
commits the payment and pays the unlocker fee immediately. A locked
payment whose window lapsed can only be refunded. Because a payment can
enter a collect range only after its window has elapsed, the status seen
by a collect is final: committed payments stay committed, and stuck locked
payments can only move to refunded, with zero entitlement either way.
"""

from __future__ import annotations

import hashlib

from .chainlog import PaymentRegistered, Refunded, Unlocked
from .codec import decode_pay_data
from .errors import IllegalMove, InvalidParameter, Unauthorized
from .state import Payment, PaymentStatus, ProtocolState, ensure_u64
from .wire import u32


def locking_key_hash(unlocker_id: int, key: bytes) -> bytes:
    """Digest binding an unlocker id to a secret key."""
    return hashlib.sha256(u32(unlocker_id) + key).digest()


def register_payment(
    state: ProtocolState,
    from_id: int,
    per_destination: int,
    pay_data: bytes,
    sender: str,
    locking_key_hash: bytes | None = None,
    unlocker_fee: int = 0,
) -> int:
    """Escrow and record a batch payment; returns its payment index."""
    buyer = state.claimed_account(from_id)
    if buyer.address != sender:
        raise Unauthorized(f"{sender!r} does not own account {from_id}")
    ensure_u64(per_destination, "per-destination amount")
    if per_destination < 1:
        raise InvalidParameter("per-destination amount must be positive")
    ensure_u64(unlocker_fee, "unlocker fee")
    if locking_key_hash is None:
        if unlocker_fee != 0:
            raise InvalidParameter("unlocker fee requires a locking key hash")
    elif len(locking_key_hash) != 32:
        raise InvalidParameter("locking key hash must be 32 bytes")
    ids = decode_pay_data(pay_data)
    if not ids:
        raise InvalidParameter("empty payee list")
    if len(ids) > state.params.max_payments_per_batch:
        raise InvalidParameter(
            f"{len(ids)} payees exceeds batch limit {state.params.max_payments_per_batch}"
        )
    if ids[-1] >= len(state.accounts):
        raise InvalidParameter(
            f"payee id {ids[-1]} >= allocated account count {len(state.accounts)}"
        )
    total_escrow = ensure_u64(
        per_destination * len(ids) + unlocker_fee, "payment escrow"
    )
    state.debit(from_id, total_escrow)
    state.escrow_pool = ensure_u64(state.escrow_pool + total_escrow, "escrow pool")
    payment = Payment(
        pay_index=state.latest_pay_index + 1,
        from_id=from_id,
        per_destination=per_destination,
        payee_count=len(ids),
        pay_data_digest=hashlib.sha256(pay_data).digest(),
        total_escrow=total_escrow,
        unlocker_fee=unlocker_fee,
        status=PaymentStatus.LOCKED if locking_key_hash is not None else PaymentStatus.COMMITTED,
        locking_key_hash=bytes(locking_key_hash) if locking_key_hash is not None else None,
        registered_at_block=state.current_block,
        collectable_from_block=state.current_block + state.params.unlock_period,
    )
    state.payments.append(payment)
    state.log.append(
        PaymentRegistered(
            payment.pay_index,
            from_id,
            per_destination,
            unlocker_fee,
            payment.locking_key_hash,
            sender,
            bytes(pay_data),
        )
    )
    return payment.pay_index


def unlock(state: ProtocolState, pay_index: int, unlocker_id: int, key: bytes) -> None:
    """Reveal the key for a locked payment; pays the unlocker fee at once.

    Legal strictly before the payment's collectable-from block.
    """
    payment = state.payment(pay_index)
    if payment.status != PaymentStatus.LOCKED:
        raise IllegalMove(f"payment {pay_index} is not locked")
    if state.current_block >= payment.collectable_from_block:
        raise IllegalMove(
            f"unlock window closed at block {payment.collectable_from_block}"
        )
    unlocker = state.claimed_account(unlocker_id)
    if locking_key_hash(unlocker_id, key) != payment.locking_key_hash:
        raise Unauthorized("key does not match the locking key hash")
    fee = payment.unlocker_fee
    if state.escrow_pool < fee:
        raise IllegalMove("escrow pool cannot cover the unlocker fee")
    payment.status = PaymentStatus.COMMITTED
    state.escrow_pool -= fee
    state.credit(unlocker.account_id, fee)
    state.log.append(Unlocked(pay_index, unlocker_id, bytes(key)))


def refund_locked_payment(state: ProtocolState, pay_index: int) -> None:
    """Return a timed-out locked payment's whole escrow to the buyer.

    Legal at or after the collectable-from block; anyone may call.
    """
    payment = state.payment(pay_index)
    if payment.status != PaymentStatus.LOCKED:
        raise IllegalMove(f"payment {pay_index} is not locked")
    if state.current_block < payment.collectable_from_block:
        raise IllegalMove(
            f"refundable from block {payment.collectable_from_block}, "
            f"now {state.current_block}"
        )
    if state.escrow_pool < payment.total_escrow:
        raise IllegalMove("escrow pool cannot cover the refund")
    payment.status = PaymentStatus.REFUNDED
    state.escrow_pool -= payment.total_escrow
    state.credit(payment.from_id, payment.total_escrow)
    state.log.append(Refunded(pay_index))


def payment_occurrences(state: ProtocolState, pay_index: int, account_id: int) -> int:
    """How many times an account appears in one payment's payee list."""
    ids = decode_pay_data(state.log.pay_data(pay_index))
    return ids.count(account_id)


def payment_entitlement(
    state: ProtocolState, account_id: int, start: int, end: int
) -> int:
    """Collectable sum for an account over the half-open range (start, end].

    Counts committed payments only; locked and refunded payments contribute
    nothing. Repeated ids in a payee list stack as integer multiples of the
    per-destination amount.
    """
    state.account(account_id)
    if not 0 <= start <= end <= state.latest_pay_index:
        raise InvalidParameter(
            f"range ({start}, {end}] outside payment log (latest {state.latest_pay_index})"
        )
    total = 0
    for pay_index in range(start + 1, end + 1):
        payment = state.payments[pay_index - 1]
        if payment.status != PaymentStatus.COMMITTED:
            continue
        occurrences = payment_occurrences(state, pay_index, account_id)
        if occurrences:
            total += occurrences * payment.per_destination
    return ensure_u64(total, "entitlement")
