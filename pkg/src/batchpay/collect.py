"""The collect operation and its optimistic challenge game.

A delegate opens a collect slot claiming that a recipient is owed
``amount`` over the payment range (start, end]; the claim is backed by the
delegate's stake and the recipient's signed authorization, and is paid out
after a challenge window rather than verified up front. Anyone who stakes
a challenge can force the delegate to break the claim down into
per-payment amounts, pick one entry, and demand the published payee bytes
as proof. An entry whose amount exceeds the recipient's true share of that
payment cannot be proven, so the deadline lapses and the challenger takes
the delegate's stake. A truthful claim always survives: every entry can be
proven from the chain log, which sends the challenger's stake to the
delegate and reopens the settlement window.

Slot ids above the instant threshold advance the recipient's money and
collected prefix at open time out of the delegate's own pocket; the slot
then only settles the delegate's reimbursement. If the delegate loses the
game on an instant slot the recipient keeps the advance and the prefix
stays moved: the delegate alone eats the loss. That asymmetry is the price
of instant finality and is surfaced in simulation reports.

Deadlines are exclusive: moves are legal strictly before the deadline
block, timeout operations at or after it.
"""

from __future__ import annotations

import hashlib

from .auth import collect_auth_message, verify_collect
from .chainlog import (
    Challenged,
    ChallengeFailed,
    ChallengeSucceeded,
    CollectOpened,
    InclusionProved,
    ListResponded,
    PaymentSelected,
    SlotFreed,
)
from .errors import (
    BadProof,
    BadSignature,
    IllegalMove,
    InsufficientFunds,
    InvalidParameter,
    InvariantViolation,
)
from .payments import payment_occurrences
from .state import (
    SLOT_ID_MAX,
    CollectSlot,
    GameState,
    PaymentStatus,
    ProtocolState,
    ensure_u64,
)


def _slot(state: ProtocolState, delegate_id: int, slot_id: int) -> CollectSlot:
    slot = state.slots.get((delegate_id, slot_id))
    if slot is None:
        raise IllegalMove(f"slot ({delegate_id}, {slot_id}) is empty")
    return slot


def _pay_out(state: ProtocolState, account_id: int, amount: int, destination: str | None) -> None:
    """Credit an account, or route the credit straight to an external address."""
    if destination is None:
        state.credit(account_id, amount)
    elif amount:
        state.adapter.withdraw(destination, amount)


def _drain_pool(state: ProtocolState, amount: int) -> None:
    if state.escrow_pool < amount:
        raise InvariantViolation(
            "conservation",
            f"escrow pool {state.escrow_pool} cannot cover settlement of {amount}",
        )
    state.escrow_pool -= amount


def collect(
    state: ProtocolState,
    delegate_id: int,
    slot_id: int,
    recipient_id: int,
    last_payment_index: int,
    amount: int,
    fee: int,
    authorization: bytes,
    destination_address: str | None = None,
) -> None:
    """Open a collect slot claiming ``amount`` for the recipient.

    The claimed range runs from the recipient's collected prefix
    (exclusive) to ``last_payment_index`` (inclusive), which must not
    exceed the newest payment whose unlock window has elapsed.
    """
    if not 0 <= slot_id <= SLOT_ID_MAX:
        raise InvalidParameter(f"slot id {slot_id} outside [0, {SLOT_ID_MAX}]")
    if (delegate_id, slot_id) in state.slots:
        raise IllegalMove(f"slot ({delegate_id}, {slot_id}) is occupied")
    delegate = state.claimed_account(delegate_id)
    recipient = state.claimed_account(recipient_id)
    ensure_u64(amount, "collect amount")
    ensure_u64(fee, "collect fee")
    ensure_u64(last_payment_index, "last payment index")
    if fee > amount:
        raise InvalidParameter(f"fee {fee} exceeds amount {amount}")
    if last_payment_index <= recipient.last_collected_pay_index:
        raise IllegalMove(
            f"range end {last_payment_index} not past collected prefix "
            f"{recipient.last_collected_pay_index}"
        )
    mature = state.latest_collectable_pay_index()
    if last_payment_index > mature:
        raise IllegalMove(
            f"range end {last_payment_index} beyond matured payments ({mature})"
        )
    # One pending non-instant collect per recipient: its range is not
    # consumed until settlement, so a second claim would overlap it.
    for other in state.slots.values():
        if other.recipient_id == recipient_id and not other.instant:
            raise IllegalMove(
                f"recipient {recipient_id} already has a pending collect "
                f"(slot ({other.delegate_id}, {other.slot_id}))"
            )
    message = collect_auth_message(
        state.instance_id,
        delegate_id,
        slot_id,
        recipient_id,
        last_payment_index,
        amount,
        fee,
        destination_address,
    )
    if len(authorization) != 32 or not verify_collect(
        recipient.address, message, authorization
    ):
        raise BadSignature("collect authorization does not verify")
    instant = slot_id > state.params.instant_slot_threshold
    stake = state.params.collect_stake
    advance = amount - fee if instant else 0
    if delegate.balance < stake + advance:
        raise InsufficientFunds(
            f"delegate {delegate_id} balance {delegate.balance} < "
            f"stake {stake} + advance {advance}"
        )
    start_pay_index = recipient.last_collected_pay_index
    state.debit(delegate_id, stake + advance)
    if instant:
        _pay_out(state, recipient_id, advance, destination_address)
        recipient.last_collected_pay_index = last_payment_index
    state.slots[(delegate_id, slot_id)] = CollectSlot(
        delegate_id=delegate_id,
        slot_id=slot_id,
        recipient_id=recipient_id,
        start_pay_index=start_pay_index,
        end_pay_index=last_payment_index,
        amount=amount,
        fee=fee,
        destination_address=destination_address,
        instant=instant,
        game_state=GameState.WAITING_CHALLENGE,
        deadline_block=state.current_block + state.params.challenge_period,
        held_funds=stake,
    )
    state.log.append(
        CollectOpened(
            delegate_id,
            slot_id,
            recipient_id,
            last_payment_index,
            amount,
            fee,
            destination_address,
            bytes(authorization),
        )
    )


def free_slot(state: ProtocolState, delegate_id: int, slot_id: int) -> None:
    """Settle an unchallenged collect after its window and empty the slot."""
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state != GameState.WAITING_CHALLENGE:
        raise IllegalMove(f"slot in {slot.game_state.name}, not WAITING_CHALLENGE")
    if state.current_block < slot.deadline_block:
        raise IllegalMove(
            f"challenge window open until block {slot.deadline_block}"
        )
    _drain_pool(state, slot.amount)
    if slot.instant:
        # Reimburse the advance and pay the fee; the recipient was paid at open.
        state.credit(delegate_id, slot.amount + slot.held_funds)
    else:
        _pay_out(state, slot.recipient_id, slot.amount - slot.fee, slot.destination_address)
        state.credit(delegate_id, slot.fee + slot.held_funds)
        recipient = state.accounts[slot.recipient_id]
        recipient.last_collected_pay_index = max(
            recipient.last_collected_pay_index, slot.end_pay_index
        )
    del state.slots[(delegate_id, slot_id)]
    state.log.append(SlotFreed(delegate_id, slot_id))


def challenge(state: ProtocolState, delegate_id: int, slot_id: int, challenger_id: int) -> None:
    """Stake against a pending collect, opening the verification game."""
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state != GameState.WAITING_CHALLENGE:
        raise IllegalMove(f"slot in {slot.game_state.name}, not WAITING_CHALLENGE")
    if state.current_block >= slot.deadline_block:
        raise IllegalMove("challenge window already closed")
    if challenger_id == delegate_id:
        raise IllegalMove("a delegate cannot challenge its own slot")
    state.claimed_account(challenger_id)
    stake = state.params.challenge_stake
    if state.accounts[challenger_id].balance < stake:
        raise InsufficientFunds(
            f"challenger {challenger_id} cannot cover stake {stake}"
        )
    state.debit(challenger_id, stake)
    slot.held_funds += stake
    slot.challenger_id = challenger_id
    slot.game_state = GameState.CHALLENGE_STARTED
    slot.deadline_block = state.current_block + state.params.response_period
    state.log.append(Challenged(delegate_id, slot_id, challenger_id))


def respond_with_payment_list(
    state: ProtocolState,
    delegate_id: int,
    slot_id: int,
    pairs: list[tuple[int, int]] | tuple[tuple[int, int], ...],
) -> None:
    """Delegate breaks the claim into per-payment amounts summing to it.

    Entries must carry strictly increasing payment indexes inside the
    slot's range. A rejected list is a no-op; the delegate may retry until
    the deadline.
    """
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state != GameState.CHALLENGE_STARTED:
        raise IllegalMove(f"slot in {slot.game_state.name}, not CHALLENGE_STARTED")
    if state.current_block >= slot.deadline_block:
        raise IllegalMove("response deadline passed")
    total = 0
    prev = slot.start_pay_index
    for pay_index, entry_amount in pairs:
        ensure_u64(entry_amount, "list entry amount")
        if pay_index <= prev:
            raise InvalidParameter("payment indexes must be strictly increasing in range")
        if pay_index > slot.end_pay_index:
            raise InvalidParameter(
                f"payment {pay_index} outside range ({slot.start_pay_index}, "
                f"{slot.end_pay_index}]"
            )
        prev = pay_index
        total += entry_amount
    if total != slot.amount:
        raise InvalidParameter(f"list sums to {total}, claim is {slot.amount}")
    slot.challenge_list = tuple((int(i), int(a)) for i, a in pairs)
    slot.game_state = GameState.WAITING_PAYMENT_SELECTION
    slot.deadline_block = state.current_block + state.params.response_period
    state.log.append(ListResponded(delegate_id, slot_id, slot.challenge_list))


def select_payment(
    state: ProtocolState, delegate_id: int, slot_id: int, pay_index: int, amount: int
) -> None:
    """Challenger singles out one disclosed entry for proof."""
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state != GameState.WAITING_PAYMENT_SELECTION:
        raise IllegalMove(
            f"slot in {slot.game_state.name}, not WAITING_PAYMENT_SELECTION"
        )
    if state.current_block >= slot.deadline_block:
        raise IllegalMove("selection deadline passed")
    if (pay_index, amount) not in slot.challenge_list:
        raise InvalidParameter(f"({pay_index}, {amount}) is not in the disclosed list")
    slot.challenged_entry = (pay_index, amount)
    slot.game_state = GameState.WAITING_PROOF
    slot.deadline_block = state.current_block + state.params.response_period
    state.log.append(PaymentSelected(delegate_id, slot_id, pay_index, amount))


def prove_payment_inclusion(
    state: ProtocolState, delegate_id: int, slot_id: int, pay_data: bytes
) -> None:
    """Delegate proves the selected entry from the published payee bytes.

    The bytes must hash to the payment's stored digest, the payment must be
    committed, and the recipient's occurrences times the per-destination
    amount must equal the selected amount exactly. A failed proof is a
    no-op and may be retried until the deadline.
    """
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state != GameState.WAITING_PROOF:
        raise IllegalMove(f"slot in {slot.game_state.name}, not WAITING_PROOF")
    if state.current_block >= slot.deadline_block:
        raise IllegalMove("proof deadline passed")
    pay_index, claimed = slot.challenged_entry
    payment = state.payment(pay_index)
    if hashlib.sha256(pay_data).digest() != payment.pay_data_digest:
        raise BadProof("payee bytes do not match the payment's digest")
    if payment.status != PaymentStatus.COMMITTED:
        raise BadProof(f"payment {pay_index} is {payment.status.name}, not COMMITTED")
    due = payment_occurrences(state, pay_index, slot.recipient_id) * payment.per_destination
    if due != claimed:
        raise BadProof(
            f"recipient {slot.recipient_id} is due {due} from payment "
            f"{pay_index}, entry claims {claimed}"
        )
    slot.game_state = GameState.PROOF_ACCEPTED
    slot.deadline_block = state.current_block + state.params.response_period
    state.log.append(InclusionProved(delegate_id, slot_id, bytes(pay_data)))


def challenge_success(state: ProtocolState, delegate_id: int, slot_id: int) -> None:
    """Challenger wins on delegate timeout: takes both stakes, slot empties.

    Legal when the delegate sat on a response or proof past the deadline.
    For a non-instant slot the recipient's prefix was never advanced, so
    the entitlement stays collectable; an instant slot's advance stays with
    the recipient at the delegate's expense.
    """
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state not in (GameState.CHALLENGE_STARTED, GameState.WAITING_PROOF):
        raise IllegalMove(
            f"slot in {slot.game_state.name}, not a delegate-move state"
        )
    if state.current_block < slot.deadline_block:
        raise IllegalMove(f"delegate has until block {slot.deadline_block}")
    state.credit(slot.challenger_id, slot.held_funds)
    del state.slots[(delegate_id, slot_id)]
    state.log.append(ChallengeSucceeded(delegate_id, slot_id))


def challenge_failed(state: ProtocolState, delegate_id: int, slot_id: int) -> None:
    """Delegate wins: takes the challenger's stake, slot reopens fresh.

    Legal immediately once a proof was accepted, or when the challenger sat
    on the selection past its deadline. The slot returns to
    WAITING_CHALLENGE with a full new challenge window, open to new
    challengers.
    """
    slot = _slot(state, delegate_id, slot_id)
    if slot.game_state == GameState.WAITING_PAYMENT_SELECTION:
        if state.current_block < slot.deadline_block:
            raise IllegalMove(f"challenger has until block {slot.deadline_block}")
    elif slot.game_state != GameState.PROOF_ACCEPTED:
        raise IllegalMove(
            f"slot in {slot.game_state.name}, not a challenger-loss state"
        )
    stake = state.params.challenge_stake
    slot.held_funds -= stake
    state.credit(delegate_id, stake)
    slot.challenger_id = None
    slot.challenge_list = None
    slot.challenged_entry = None
    slot.game_state = GameState.WAITING_CHALLENGE
    slot.deadline_block = state.current_block + state.params.challenge_period
    state.log.append(ChallengeFailed(delegate_id, slot_id))
