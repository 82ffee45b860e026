"""Error types raised by the protocol engine.

Every rejected operation raises a typed error and leaves state untouched;
callers can rely on the state being exactly as it was before the call.
"""


class ProtocolError(Exception):
    """Base class for all protocol-level rejections."""


class InvalidParameter(ProtocolError):
    """A configuration or call parameter is out of its allowed range."""


class Unauthorized(ProtocolError):
    """Caller is not allowed to act on the target account."""


class UnknownAccount(ProtocolError):
    """Account id does not exist, or is reserved and not yet claimed."""


class TableFull(ProtocolError):
    """Account table reached its configured maximum."""


class InsufficientFunds(ProtocolError):
    """A debit would push a balance below zero."""


class AmountOutOfRange(ProtocolError):
    """A token amount or counter left the unsigned 64-bit range."""


class CodecError(ProtocolError):
    """Malformed payee-list bytes (truncated, non-canonical, overflowing)."""


class BadProof(ProtocolError):
    """A Merkle proof or payment inclusion proof failed verification."""


class BadSignature(ProtocolError):
    """A collect authorization does not verify against the recipient."""


class IllegalMove(ProtocolError):
    """Operation applied in the wrong state, window, or order."""


class InvariantViolation(AssertionError):
    """A global or type invariant broke; names the violated invariant.

    Subclasses AssertionError on purpose: this is a bug trap, not a
    user-facing rejection, and must abort whatever run surfaced it.
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"invariant violated: {invariant}" + (f" ({detail})" if detail else ""))
