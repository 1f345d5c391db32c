"""Exception hierarchy shared by every layer of the ticket protocol."""

from __future__ import annotations


class SmartTicketError(Exception):
    """Base class for all library errors."""


# -- codec -----------------------------------------------------------------

class ComponentSizeError(SmartTicketError, ValueError):
    """A payload component does not fit its fixed slot."""


class StructureError(SmartTicketError, ValueError):
    """A raw buffer is not a well-formed ticket payload.

    ``reason`` is one of ``length``, ``version``, ``suite``,
    ``signature-length``, ``padding`` or ``metadata``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


# -- crypto ----------------------------------------------------------------

class UnknownSuite(SmartTicketError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class WrongSuite(SmartTicketError, ValueError):
    pass


class SuiteRejected(SmartTicketError, ValueError):
    """A suite failed the registry's admission rules."""


class NonceFailure(SmartTicketError, RuntimeError):
    pass


class RangeError(SmartTicketError, ValueError):
    pass


# -- trust center ----------------------------------------------------------

class TrustError(SmartTicketError):
    pass


class DuplicateKey(TrustError):
    pass


class UnknownKey(TrustError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class AlreadyRevoked(TrustError):
    pass


class RefusedRevoked(TrustError):
    pass


class ModeMismatch(TrustError):
    pass


class SkewRejected(TrustError):
    pass


class MalformedDocument(TrustError, ValueError):
    pass


class DocumentRejected(TrustError):
    pass


# -- transport -------------------------------------------------------------

class ChannelError(SmartTicketError):
    pass


class ReplayDetected(ChannelError):
    pass


class BadEnvelopeSignature(ChannelError):
    pass


class UnknownSender(ChannelError):
    pass


class ScriptError(SmartTicketError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")
