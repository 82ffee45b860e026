"""Batch payments: escrow math, locking, unlock/refund windows, entitlement."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchpay.codec import encode_pay_data
from batchpay.errors import (
    CodecError,
    IllegalMove,
    InsufficientFunds,
    InvalidParameter,
    Unauthorized,
)
from batchpay.payments import (
    locking_key_hash,
    payment_entitlement,
    payment_occurrences,
    refund_locked_payment,
    register_payment,
    unlock,
)
from batchpay.registration import register
from batchpay.state import PaymentStatus
from tests.conftest import World, small_params


def test_register_payment_escrows_full_amount(world):
    sellers = [world.seller, register(world.state, "s2"), register(world.state, "s3")]
    before = world.balance(world.buyer)
    idx = world.pay(sellers, per_destination=7)
    assert idx == 1
    payment = world.state.payment(idx)
    assert payment.total_escrow == 21
    assert payment.status == PaymentStatus.COMMITTED
    assert payment.collectable_from_block == world.state.current_block + world.params.unlock_period
    assert world.balance(world.buyer) == before - 21
    assert world.state.escrow_pool == 21


def test_register_payment_with_repeats_counts_multiplicity(world):
    idx = world.pay([world.seller, world.seller, world.seller], per_destination=4)
    assert world.state.payment(idx).total_escrow == 12
    assert payment_occurrences(world.state, idx, world.seller) == 3


def test_register_payment_rejects_bad_inputs(world):
    data = encode_pay_data([world.seller])
    with pytest.raises(InvalidParameter):
        register_payment(world.state, world.buyer, 0, data, "buyer")
    with pytest.raises(Unauthorized):
        register_payment(world.state, world.buyer, 1, data, "mallory")
    with pytest.raises(InvalidParameter):
        register_payment(world.state, world.buyer, 1, encode_pay_data([999]), "buyer")
    with pytest.raises(CodecError):
        register_payment(world.state, world.buyer, 1, b"", "buyer")


def test_register_payment_respects_batch_limit():
    world = World(small_params(max_payments_per_batch=3))
    sellers = [register(world.state, f"s{i}") for i in range(4)]
    world.pay(sellers[:3])
    with pytest.raises(InvalidParameter):
        world.pay(sellers)


def test_register_payment_needs_funds(world):
    poor = register(world.state, "poor")
    with pytest.raises(InsufficientFunds):
        register_payment(world.state, poor, 1, encode_pay_data([world.seller]), "poor")


def test_register_payment_to_unclaimed_bulk_id_is_allowed(world):
    # paying a reserved id is legitimate; the owner claims later and collects
    from batchpay.merkle import merkle_root
    from batchpay.registration import bulk_register

    addresses = ["late-1", "late-2"]
    bulk_id = bulk_register(world.state, 2, merkle_root(addresses))
    first = world.state.bulks[bulk_id].first_id
    idx = world.pay([first], per_destination=9)
    world.mature()
    assert payment_entitlement(world.state, first, 0, idx) == 9


def test_empty_payee_list_rejected(world):
    with pytest.raises(InvalidParameter):
        world.pay([], per_destination=1)


def test_unlocker_fee_requires_lock(world):
    data = encode_pay_data([world.seller])
    with pytest.raises(InvalidParameter):
        register_payment(world.state, world.buyer, 1, data, "buyer", unlocker_fee=1)


def locked_payment(world, per_destination=10, fee=3):
    unlocker = register(world.state, "unlocker")
    key = b"secret-key-bytes"
    idx = register_payment(
        world.state,
        world.buyer,
        per_destination,
        encode_pay_data([world.seller]),
        "buyer",
        locking_key_hash=locking_key_hash(unlocker, key),
        unlocker_fee=fee,
    )
    return idx, unlocker, key


def test_unlock_in_window_credits_fee(world):
    idx, unlocker, key = locked_payment(world)
    payment = world.state.payment(idx)
    assert payment.status == PaymentStatus.LOCKED
    assert payment.total_escrow == 13  # 10 to the payee plus fee 3
    unlock(world.state, idx, unlocker, key)
    assert payment.status == PaymentStatus.COMMITTED
    assert world.balance(unlocker) == 3
    assert world.state.escrow_pool == 10
    world.state.check_invariants()


def test_unlock_rejects_wrong_key_or_unlocker(world):
    idx, unlocker, key = locked_payment(world)
    with pytest.raises(Unauthorized):
        unlock(world.state, idx, unlocker, b"wrong-key")
    # the hash commits to the unlocker id, so the right key from the wrong
    # account is just as dead
    intruder = register(world.state, "intruder")
    with pytest.raises(Unauthorized):
        unlock(world.state, idx, intruder, key)
    unlock(world.state, idx, unlocker, key)


def test_unlock_window_edges(world):
    # the unlock window is blocks [registration, collectable_from); the
    # boundary block itself belongs to the refund side
    idx, unlocker, key = locked_payment(world)
    world.advance(world.params.unlock_period - 1)
    unlock(world.state, idx, unlocker, key)

    idx2, unlocker2, key2 = locked_payment(world)
    world.advance(world.params.unlock_period)
    with pytest.raises(IllegalMove):
        unlock(world.state, idx2, unlocker2, key2)


def test_unlock_twice_rejected(world):
    idx, unlocker, key = locked_payment(world)
    unlock(world.state, idx, unlocker, key)
    with pytest.raises(IllegalMove):
        unlock(world.state, idx, unlocker, key)


def test_refund_after_timeout_makes_buyer_whole(world):
    before = world.balance(world.buyer)
    idx, unlocker, key = locked_payment(world)
    assert world.balance(world.buyer) == before - 13
    with pytest.raises(IllegalMove):
        refund_locked_payment(world.state, idx)  # window still open
    world.advance(world.params.unlock_period)
    refund_locked_payment(world.state, idx)
    assert world.balance(world.buyer) == before
    assert world.state.payment(idx).status == PaymentStatus.REFUNDED
    assert world.state.escrow_pool == 0
    world.state.check_invariants()


def test_refund_rejects_unlocked_or_plain_payments(world):
    idx, unlocker, key = locked_payment(world)
    unlock(world.state, idx, unlocker, key)
    world.advance(world.params.unlock_period)
    with pytest.raises(IllegalMove):
        refund_locked_payment(world.state, idx)

    plain = world.pay([world.seller])
    world.advance(world.params.unlock_period)
    with pytest.raises(IllegalMove):
        refund_locked_payment(world.state, plain)


def test_refund_twice_rejected(world):
    idx, _, _ = locked_payment(world)
    world.advance(world.params.unlock_period)
    refund_locked_payment(world.state, idx)
    with pytest.raises(IllegalMove):
        refund_locked_payment(world.state, idx)


# -- entitlement -----------------------------------------------------------


def test_entitlement_sums_committed_occurrences(world):
    other = register(world.state, "other")
    world.pay([world.seller, other], per_destination=5)          # index 1
    world.pay([world.seller, world.seller], per_destination=2)   # index 2
    world.pay([other], per_destination=9)                        # index 3
    assert payment_entitlement(world.state, world.seller, 0, 3) == 9
    assert payment_entitlement(world.state, other, 0, 3) == 14
    # half-open (start, end]: start=1 skips the first payment
    assert payment_entitlement(world.state, world.seller, 1, 3) == 4
    assert payment_entitlement(world.state, world.seller, 2, 3) == 0
    assert payment_entitlement(world.state, world.seller, 3, 3) == 0


def test_entitlement_excludes_locked_and_refunded(world):
    idx, unlocker, key = locked_payment(world, per_destination=10)
    assert payment_entitlement(world.state, world.seller, 0, idx) == 0
    unlock(world.state, idx, unlocker, key)
    assert payment_entitlement(world.state, world.seller, 0, idx) == 10

    idx2, _, _ = locked_payment(world, per_destination=7)
    world.advance(world.params.unlock_period)
    refund_locked_payment(world.state, idx2)
    assert payment_entitlement(world.state, world.seller, 0, idx2) == 10


def test_entitlement_rejects_bad_range(world):
    idx = world.pay([world.seller])
    with pytest.raises(InvalidParameter):
        payment_entitlement(world.state, world.seller, 2, 1)
    with pytest.raises(InvalidParameter):
        payment_entitlement(world.state, world.seller, 0, idx + 1)


def test_occurrences_of_absent_account_is_zero(world):
    other = register(world.state, "other")
    idx = world.pay([world.seller], per_destination=5)
    assert payment_occurrences(world.state, idx, other) == 0


@given(
    st.lists(st.integers(0, 3), min_size=1, max_size=6),
    st.integers(1, 5),
)
@settings(max_examples=40, deadline=None)
def test_entitlement_matches_direct_sum(occurrence_counts, per_destination):
    world = World()
    others = [register(world.state, f"w{i}") for i in range(2)]
    for count in occurrence_counts:
        payees = [world.seller] * count + others
        world.pay(sorted(payees), per_destination=per_destination)
    end = world.state.latest_pay_index
    expected = per_destination * sum(occurrence_counts)
    assert payment_entitlement(world.state, world.seller, 0, end) == expected
    world.state.check_invariants()
