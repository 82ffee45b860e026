"""Balance and entitlement oracles driven purely by the public chain log.

LogView replays the record stream into a shadow ledger that never touches
the engine's state objects. It exists to double-check the engine: settled
balances reconstructed here must match the ledger at every block boundary,
and the entitlement computation is what honest monitors trust when
deciding whether a collect claim is inflated.
"""

from __future__ import annotations

from ..chainlog import (
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
    PaymentRegistered,
    PaymentSelected,
    Record,
    Refunded,
    Registered,
    SlotFreed,
    Unlocked,
    Withdrawn,
)
from ..codec import decode_pay_data
from ..errors import InvalidParameter
from ..wire import Reader


class _ViewPayment:
    __slots__ = ("ids", "per_destination", "status", "collectable_from", "total_escrow", "from_id")

    def __init__(self, ids, per_destination, status, collectable_from, total_escrow, from_id):
        self.ids = ids
        self.per_destination = per_destination
        self.status = status                  # "committed" | "locked" | "refunded"
        self.collectable_from = collectable_from
        self.total_escrow = total_escrow
        self.from_id = from_id


class _ViewSlot:
    __slots__ = (
        "recipient_id", "start", "end", "amount", "fee",
        "destination", "instant", "open_seq", "challenger_id",
    )

    def __init__(self, recipient_id, start, end, amount, fee, destination, instant, open_seq):
        self.recipient_id = recipient_id
        self.start = start
        self.end = end
        self.amount = amount
        self.fee = fee
        self.destination = destination
        self.instant = instant
        self.open_seq = open_seq          # ordinal of the CollectOpened record
        self.challenger_id = None


class LogView:
    """Incrementally consumable shadow ledger built from log records only."""

    def __init__(self) -> None:
        self.block = 0
        self.balances: dict[int, int] = {}
        self.payments: list[_ViewPayment] = []
        self.prefixes: dict[int, int] = {}
        self.slots: dict[tuple[int, int], _ViewSlot] = {}
        self.collect_stake = 0
        self.challenge_stake = 0
        self.unlock_period = 0
        self.instant_slot_threshold = 32768
        self._consumed = 0
        self._mature = 0
        self._open_seq = 0

    # -- feeding -------------------------------------------------------------

    def feed(self, log: ChainLog) -> None:
        """Consume any records appended since the last feed."""
        for rec in log.records[self._consumed:]:
            self._apply(rec)
        self._consumed = len(log.records)

    def _credit(self, account_id: int, amount: int) -> None:
        self.balances[account_id] = self.balances.get(account_id, 0) + amount

    def _apply(self, rec: Record) -> None:
        if isinstance(rec, Instantiated):
            r = Reader(rec.params_blob)
            r.u64()                                # account table bound
            self.unlock_period = r.u64()
            r.u64(); r.u64()                       # game periods
            self.collect_stake = r.u64()
            self.challenge_stake = r.u64()
            r.u64()                                # batch size bound
            self.instant_slot_threshold = r.u64()
        elif isinstance(rec, Registered):
            self.balances.setdefault(rec.account_id, 0)
        elif isinstance(rec, BulkRegistered):
            for i in range(rec.first_id, rec.first_id + rec.count):
                self.balances.setdefault(i, 0)
        elif isinstance(rec, (Claimed, ListResponded, PaymentSelected, InclusionProved, FinalDigest)):
            pass
        elif isinstance(rec, Deposited):
            self._credit(rec.account_id, rec.amount)
        elif isinstance(rec, Withdrawn):
            self._credit(rec.account_id, -rec.amount)
        elif isinstance(rec, Advanced):
            self.block += rec.blocks
        elif isinstance(rec, PaymentRegistered):
            ids = decode_pay_data(rec.pay_data)
            escrow = rec.per_destination * len(ids) + rec.unlocker_fee
            self._credit(rec.from_id, -escrow)
            self.payments.append(
                _ViewPayment(
                    ids,
                    rec.per_destination,
                    "locked" if rec.locking_key_hash is not None else "committed",
                    self.block + self.unlock_period,
                    escrow,
                    rec.from_id,
                )
            )
        elif isinstance(rec, Unlocked):
            p = self.payments[rec.pay_index - 1]
            p.status = "committed"
            fee = p.total_escrow - p.per_destination * len(p.ids)
            self._credit(rec.unlocker_id, fee)
        elif isinstance(rec, Refunded):
            p = self.payments[rec.pay_index - 1]
            p.status = "refunded"
            self._credit(p.from_id, p.total_escrow)
        elif isinstance(rec, CollectOpened):
            start = self.prefixes.get(rec.recipient_id, 0)
            instant = rec.slot_id > self.instant_slot_threshold
            debit = self.collect_stake
            if instant:
                advance = rec.amount - rec.fee
                debit += advance
                if rec.destination_address is None:
                    self._credit(rec.recipient_id, advance)
                self.prefixes[rec.recipient_id] = rec.last_payment_index
            self._credit(rec.delegate_id, -debit)
            self.slots[(rec.delegate_id, rec.slot_id)] = _ViewSlot(
                rec.recipient_id, start, rec.last_payment_index,
                rec.amount, rec.fee, rec.destination_address, instant,
                self._open_seq,
            )
            self._open_seq += 1
        elif isinstance(rec, Challenged):
            self._credit(rec.challenger_id, -self.challenge_stake)
            self.slots[(rec.delegate_id, rec.slot_id)].challenger_id = rec.challenger_id
        elif isinstance(rec, ChallengeSucceeded):
            slot = self.slots.pop((rec.delegate_id, rec.slot_id))
            self._credit(slot.challenger_id, self.collect_stake + self.challenge_stake)
        elif isinstance(rec, ChallengeFailed):
            slot = self.slots[(rec.delegate_id, rec.slot_id)]
            self._credit(rec.delegate_id, self.challenge_stake)
            slot.challenger_id = None
        elif isinstance(rec, SlotFreed):
            slot = self.slots.pop((rec.delegate_id, rec.slot_id))
            if slot.instant:
                self._credit(rec.delegate_id, slot.amount + self.collect_stake)
            else:
                if slot.destination is None:
                    self._credit(slot.recipient_id, slot.amount - slot.fee)
                self._credit(rec.delegate_id, slot.fee + self.collect_stake)
                self.prefixes[slot.recipient_id] = max(
                    self.prefixes.get(slot.recipient_id, 0), slot.end
                )
        else:  # pragma: no cover - every record type is handled above
            raise InvalidParameter(f"unhandled record {type(rec).__name__}")

    # -- queries ---------------------------------------------------------------

    def occurrences(self, pay_index: int, account_id: int) -> int:
        return self.payments[pay_index - 1].ids.count(account_id)

    def entitlement(self, account_id: int, start: int, end: int) -> int:
        """Committed-payment entitlement over (start, end], log-derived."""
        total = 0
        for pay_index in range(start + 1, end + 1):
            p = self.payments[pay_index - 1]
            if p.status == "committed":
                total += p.ids.count(account_id) * p.per_destination
        return total

    def entry_due(self, pay_index: int, account_id: int) -> int:
        """What one payment actually owes an account (0 unless committed)."""
        p = self.payments[pay_index - 1]
        if p.status != "committed":
            return 0
        return p.ids.count(account_id) * p.per_destination

    def mature_end(self) -> int:
        # collectable_from is non-decreasing in pay index (fixed unlock
        # period, blocks only move forward), so a cursor suffices.
        while (
            self._mature < len(self.payments)
            and self.payments[self._mature].collectable_from <= self.block
        ):
            self._mature += 1
        return self._mature

    def settled_balance(self, account_id: int) -> int:
        return self.balances.get(account_id, 0)

    def collectable(self, account_id: int) -> int:
        return self.entitlement(
            account_id, self.prefixes.get(account_id, 0), self.mature_end()
        )

    def oracle_balance(self, account_id: int) -> int:
        """Settled balance plus still-collectable entitlement."""
        return self.settled_balance(account_id) + self.collectable(account_id)


def view_of(log: ChainLog) -> LogView:
    view = LogView()
    view.feed(log)
    return view


def oracle_balance(log: ChainLog, account_id: int) -> int:
    """One-shot convenience over a full log."""
    return view_of(log).oracle_balance(account_id)


# -- canonical monitor strategy ------------------------------------------------

def monitor_verdict(view: LogView, slot) -> str:
    """Judge a pending collect claim against the log.

    Returns "overstated" when the claim exceeds the true entitlement over
    the slot's range (the winnable case), "understated" when it falls short
    (protocol-legal but seller-harming, flagged only), and "ok" otherwise.
    """
    true = view.entitlement(slot.recipient_id, slot.start_pay_index, slot.end_pay_index)
    if slot.amount > true:
        return "overstated"
    if slot.amount < true:
        return "understated"
    return "ok"


def find_inflated_entry(view: LogView, slot) -> tuple[int, int]:
    """First disclosed entry claiming more than its payment owes.

    When the disclosed list sums to more than the true entitlement, some
    entry must exceed its payment's true share (pigeonhole), so this cannot
    miss against an overstated claim.
    """
    for pay_index, amount in slot.challenge_list:
        if amount > view.entry_due(pay_index, slot.recipient_id):
            return (pay_index, amount)
    raise InvalidParameter("no inflated entry: the disclosed list is honest")
