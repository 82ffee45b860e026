"""Re-execute a chain log against a fresh state.

The log is a complete transaction transcript: the leading record carries
the instantiation parameters and the initial external balance snapshot, so
replaying it deterministically rebuilds the exact protocol state. A
FinalDigest trailer, when present, is compared against the rebuilt state's
digest.
"""

from __future__ import annotations

from . import collect as game
from . import payments, registration
from .chainlog import (
    Advanced,
    BulkRegistered,
    ChainLog,
    Challenged,
    ChallengeFailed,
    ChallengeSucceeded,
    Claimed,
    CollectOpened,
    Deposited,
    FinalDigest,
    InclusionProved,
    Instantiated,
    ListResponded,
    NEW_ACCOUNT_WIRE,
    PaymentRegistered,
    PaymentSelected,
    Record,
    Refunded,
    Registered,
    SlotFreed,
    Unlocked,
    Withdrawn,
)
from .errors import CodecError, InvariantViolation
from .merkle import MerkleProof
from .state import NEW_ACCOUNT, Params, ProtocolState, TokenAdapter
from .wire import Reader


def _params_from_blob(blob: bytes) -> Params:
    r = Reader(blob)
    p = Params(
        max_account_count=r.u64(),
        unlock_period=r.u64(),
        challenge_period=r.u64(),
        response_period=r.u64(),
        collect_stake=r.u64(),
        challenge_stake=r.u64(),
        max_payments_per_batch=r.u64(),
        instant_slot_threshold=r.u64(),
    )
    r.expect_end()
    return p


def _adapter_from_blob(blob: bytes) -> TokenAdapter:
    r = Reader(blob)
    balances = {}
    for _ in range(r.u32()):
        addr = r.str_()
        balances[addr] = r.u64()
    r.expect_end()
    return TokenAdapter(balances)


def apply_record(state: ProtocolState, rec: Record) -> None:
    """Apply one logged operation to the state."""
    if isinstance(rec, Registered):
        registration.register(state, rec.address)
    elif isinstance(rec, BulkRegistered):
        registration.bulk_register(state, rec.count, rec.root)
    elif isinstance(rec, Claimed):
        registration.claim_bulk_registration_id(
            state, rec.bulk_id, rec.account_id, rec.address,
            MerkleProof.from_bytes(rec.proof_blob),
        )
    elif isinstance(rec, Deposited):
        ref = NEW_ACCOUNT if rec.account_ref == NEW_ACCOUNT_WIRE else rec.account_ref
        state.deposit(ref, rec.amount, rec.from_address)
    elif isinstance(rec, Withdrawn):
        state.withdraw(rec.account_id, rec.amount, rec.to_address, rec.sender)
    elif isinstance(rec, Advanced):
        state.advance_block(rec.blocks)
    elif isinstance(rec, PaymentRegistered):
        payments.register_payment(
            state, rec.from_id, rec.per_destination, rec.pay_data, rec.sender,
            rec.locking_key_hash, rec.unlocker_fee,
        )
    elif isinstance(rec, Unlocked):
        payments.unlock(state, rec.pay_index, rec.unlocker_id, rec.key)
    elif isinstance(rec, Refunded):
        payments.refund_locked_payment(state, rec.pay_index)
    elif isinstance(rec, CollectOpened):
        game.collect(
            state, rec.delegate_id, rec.slot_id, rec.recipient_id,
            rec.last_payment_index, rec.amount, rec.fee, rec.authorization,
            rec.destination_address,
        )
    elif isinstance(rec, Challenged):
        game.challenge(state, rec.delegate_id, rec.slot_id, rec.challenger_id)
    elif isinstance(rec, ListResponded):
        game.respond_with_payment_list(state, rec.delegate_id, rec.slot_id, rec.pairs)
    elif isinstance(rec, PaymentSelected):
        game.select_payment(state, rec.delegate_id, rec.slot_id, rec.pay_index, rec.amount)
    elif isinstance(rec, InclusionProved):
        game.prove_payment_inclusion(state, rec.delegate_id, rec.slot_id, rec.pay_data)
    elif isinstance(rec, ChallengeSucceeded):
        game.challenge_success(state, rec.delegate_id, rec.slot_id)
    elif isinstance(rec, ChallengeFailed):
        game.challenge_failed(state, rec.delegate_id, rec.slot_id)
    elif isinstance(rec, SlotFreed):
        game.free_slot(state, rec.delegate_id, rec.slot_id)
    else:
        raise CodecError(f"record {type(rec).__name__} is not replayable")


def replay(log: ChainLog) -> tuple[ProtocolState, bytes | None]:
    """Rebuild state from a log; returns (state, trailer digest if present)."""
    records = list(log.records)
    if not records or not isinstance(records[0], Instantiated):
        raise CodecError("log must start with an instantiation record")
    head = records[0]
    state = ProtocolState(_params_from_blob(head.params_blob), _adapter_from_blob(head.externals_blob))
    expected = None
    for rec in records[1:]:
        if expected is not None:
            raise CodecError("record after the final digest trailer")
        if isinstance(rec, Instantiated):
            raise CodecError("duplicate instantiation record")
        if isinstance(rec, FinalDigest):
            expected = rec.digest
            continue
        apply_record(state, rec)
    return state, expected


def verify_log(log: ChainLog) -> bytes:
    """Replay and check the trailer digest; returns the rebuilt digest.

    A log without a trailer cannot be verified and is rejected; otherwise
    stripping the trailer would turn any transcript into a passing one.
    """
    state, expected = replay(log)
    state.check_invariants()
    digest = state.digest()
    if expected is None:
        raise InvariantViolation("replay-digest", "log has no final digest trailer")
    if digest != expected:
        raise InvariantViolation(
            "replay-digest",
            f"rebuilt {digest.hex()} != recorded {expected.hex()}",
        )
    return digest
