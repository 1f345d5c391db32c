"""Printers and readers.

Readers validate offline against the last successfully synced key list and
transaction list; :func:`reader_validate` is the complete decision
procedure and never raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Protocol, Tuple, Union

from . import codec
from .codec import MarkerPattern, ProviderData, SignatureField, TicketMetadata
from .crypto import NonceSource, PrivateKey, PublicKey, is_registered, pattern_hash, sign, verify
from .errors import (
    ChannelError,
    DocumentRejected,
    MalformedDocument,
    ModeMismatch,
    StructureError,
)
from .trust import (
    KeyListDocument,
    KeyRecord,
    SigningMode,
    TransactionListDocument,
    TransactionRecord,
    TrustedCenter,
)


class Outcome(str, Enum):
    ACCEPT = "Accept"
    ACCEPT_EXCEPTIONAL = "AcceptExceptional"
    REJECT = "Reject"


class Reason(str, Enum):
    INVALID_STRUCTURE = "InvalidStructure"
    PATTERN_MISMATCH = "PatternMismatch"
    UNKNOWN_SIGNER = "UnknownSigner"
    BAD_SIGNATURE = "BadSignature"
    REVOKED_NO_TRANSACTION = "RevokedNoTransaction"
    NOT_YET_VALID = "NotYetValid"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class ValidationVerdict:
    outcome: Outcome
    reason: Optional[Reason] = None
    matched_transaction: Optional[TransactionRecord] = None

    def __post_init__(self):
        if (self.reason is not None) != (self.outcome is Outcome.REJECT):
            raise ValueError("reason is required exactly for Reject")
        if (self.matched_transaction is not None) != (self.outcome is Outcome.ACCEPT_EXCEPTIONAL):
            raise ValueError("matched_transaction is required exactly for AcceptExceptional")

    @classmethod
    def reject(cls, reason: Reason) -> "ValidationVerdict":
        return cls(Outcome.REJECT, reason)

    @property
    def accepted(self) -> bool:
        return self.outcome is not Outcome.REJECT

    @property
    def token(self) -> str:
        """Scenario-script spelling: ``accept``, ``accept-exceptional``, ``reject:<Reason>``."""
        if self.outcome is Outcome.ACCEPT:
            return "accept"
        if self.outcome is Outcome.ACCEPT_EXCEPTIONAL:
            return "accept-exceptional"
        return f"reject:{self.reason.value}"

    def __str__(self) -> str:
        if self.outcome is Outcome.ACCEPT:
            return "ACCEPT"
        if self.outcome is Outcome.ACCEPT_EXCEPTIONAL:
            tx = self.matched_transaction
            return f"ACCEPT-EXCEPTIONAL tx={tx.printer_id}/{tx.ticket_id}"
        return f"REJECT {self.reason.value}"


# -- reader -------------------------------------------------------------------

@dataclass(frozen=True)
class ReaderTrustStore:
    """Immutable snapshot; :func:`reader_sync` returns a new one."""

    tc_root_key: PublicKey
    keylist: Optional[KeyListDocument] = None
    transactions: Mapping[Tuple[int, int], TransactionRecord] = field(
        default_factory=lambda: MappingProxyType({}))
    truncation: int = 32
    last_sync: Optional[int] = None


DocumentInput = Union[bytes, KeyListDocument, TransactionListDocument, None]


def _load(doc, cls, root: PublicKey, what: str):
    if doc is None:
        return None
    try:
        if not isinstance(doc, cls):
            doc = cls.from_bytes(doc)
    except MalformedDocument as exc:
        raise DocumentRejected(f"{what}: {exc}") from None
    if len(doc.signature) != 64 or not verify(root, doc.body_bytes(), doc.signature):
        raise DocumentRejected(f"{what}: signature does not verify under the TC root key")
    return doc


def reader_sync(store: ReaderTrustStore, keylist_doc: DocumentInput,
                txlist_doc: DocumentInput, now: int) -> ReaderTrustStore:
    """Install freshly fetched documents, all or nothing.

    Any verification failure raises :class:`DocumentRejected` and the caller
    keeps ``store`` untouched. ``txlist_doc`` may be ``None`` (no exception
    list, e.g. central mode).
    """
    keylist = _load(keylist_doc, KeyListDocument, store.tc_root_key, "key list")
    if keylist is None:
        raise DocumentRejected("key list is required")
    txlist = _load(txlist_doc, TransactionListDocument, store.tc_root_key, "transaction list")
    if txlist is not None and txlist.tc_id != keylist.tc_id:
        raise DocumentRejected("key list and transaction list come from different TCs")
    records = {} if txlist is None else {r.key: r for r in txlist.records}
    return ReaderTrustStore(
        tc_root_key=store.tc_root_key,
        keylist=keylist,
        transactions=MappingProxyType(records),
        truncation=32 if txlist is None else txlist.truncation,
        last_sync=now,
    )


def _as_pattern(p) -> Optional[bytes]:
    if isinstance(p, MarkerPattern):
        return p.data
    return bytes(p)


def reader_validate(store: ReaderTrustStore, raw: bytes,
                    scanned_pattern: Union[MarkerPattern, bytes], now: int) -> ValidationVerdict:
    # 1. structure
    try:
        ticket = codec.decode_payload(raw)
    except StructureError:
        return ValidationVerdict.reject(Reason.INVALID_STRUCTURE)
    meta = ticket.metadata

    # 2. physical pattern
    if _as_pattern(scanned_pattern) != ticket.pattern.data:
        return ValidationVerdict.reject(Reason.PATTERN_MISMATCH)

    # 3. signer resolution
    if store.keylist is None:
        return ValidationVerdict.reject(Reason.UNKNOWN_SIGNER)
    candidates = store.keylist.signer_candidates(meta.tc_id, meta.printer_id)
    if not candidates or not is_registered(meta.suite_id):
        return ValidationVerdict.reject(Reason.UNKNOWN_SIGNER)

    # 4. signature over the signed region, under the ticket's suite
    region = codec.signed_region(raw)
    sig = ticket.signature.sig_bytes
    signer: Optional[KeyRecord] = None
    for entry in candidates:
        key = PublicKey(entry.public_key.point, meta.suite_id)
        if verify(key, region, sig):
            signer = entry
            break
    if signer is None:
        return ValidationVerdict.reject(Reason.BAD_SIGNATURE)

    # 5. revoked signer: only known pre-revocation transactions pass
    matched = None
    if signer.revoked and store.keylist.signing_mode is SigningMode.DISTRIBUTED:
        rec = store.transactions.get((meta.printer_id, meta.ticket_id))
        if (rec is None or rec.issue_ts != meta.issue_ts
                or rec.validity_end != meta.validity_end
                or pattern_hash(ticket.pattern, store.truncation) != rec.pattern_hash):
            return ValidationVerdict.reject(Reason.REVOKED_NO_TRANSACTION)
        matched = rec

    # 6. validity window, inclusive at both ends
    if now < meta.validity_start:
        return ValidationVerdict.reject(Reason.NOT_YET_VALID)
    if now > meta.validity_end:
        return ValidationVerdict.reject(Reason.EXPIRED)

    # 7.
    if matched is not None:
        return ValidationVerdict(Outcome.ACCEPT_EXCEPTIONAL, matched_transaction=matched)
    return ValidationVerdict(Outcome.ACCEPT)


@dataclass
class Reader:
    """Convenience wrapper holding the current store of one reader device."""

    store: ReaderTrustStore

    @classmethod
    def with_root(cls, tc_root_key: PublicKey) -> "Reader":
        return cls(ReaderTrustStore(tc_root_key))

    def sync(self, keylist_doc: DocumentInput, txlist_doc: DocumentInput, now: int) -> None:
        self.store = reader_sync(self.store, keylist_doc, txlist_doc, now)

    def validate(self, raw: bytes, scanned_pattern, now: int) -> ValidationVerdict:
        return reader_validate(self.store, raw, scanned_pattern, now)


# -- printer ------------------------------------------------------------------

class TcChannel(Protocol):
    def request_signature(self, metadata: TicketMetadata, provider: ProviderData,
                          pattern: MarkerPattern) -> Tuple[TicketMetadata, SignatureField]:
        ...

    def report(self, record: TransactionRecord) -> None:
        ...


@dataclass
class DirectChannel:
    """In-process channel straight into a :class:`TrustedCenter`.

    ``online=False`` models an unreachable TC.
    """

    tc: TrustedCenter
    printer_id: int
    clock: Callable[[], int]
    online: bool = True

    def _check(self):
        if not self.online:
            raise ChannelError("trusted center unreachable")

    def request_signature(self, metadata, provider, pattern):
        self._check()
        return self.tc.central_sign(metadata, provider, pattern, self.printer_id, self.clock())

    def report(self, record):
        self._check()
        self.tc.record_transaction(record, self.clock())


def _sign_locally(key: PrivateKey, meta: TicketMetadata, provider: ProviderData,
                  pattern: MarkerPattern, nonce_source: Optional[NonceSource]) -> Tuple[TicketMetadata, bytes]:
    meta = meta.replace(suite_id=key.suite_id)
    region = codec.assemble_signed_region(meta, provider, pattern)
    sig = SignatureField(sign(key, region, nonce_source))
    return meta, codec.encode_payload(meta, provider, pattern, sig)


def printer_issue(printer_key: Optional[PrivateKey], meta: TicketMetadata,
                  provider: ProviderData, pattern: MarkerPattern, mode,
                  tc_channel: TcChannel,
                  nonce_source: Optional[NonceSource] = None) -> bytes:
    """Issue one ticket and return its 704-byte payload.

    Central mode ships the raw components to the TC for signing; the
    printer key is not used. Distributed mode signs locally and must
    report the transaction, otherwise no payload is emitted.
    """
    mode = SigningMode(mode)
    if mode is SigningMode.CENTRAL:
        signed_meta, sig = tc_channel.request_signature(meta, provider, pattern)
        return codec.encode_payload(signed_meta, provider, pattern, sig)
    if printer_key is None:
        raise ModeMismatch("distributed issuance needs a printer ticket-signing key")
    meta, raw = _sign_locally(printer_key, meta, provider, pattern, nonce_source)
    tc_channel.report(TransactionRecord.for_ticket(meta, pattern))
    return raw


def rogue_issue(stolen_key: PrivateKey, meta: TicketMetadata, provider: ProviderData,
                pattern: MarkerPattern, nonce_source: Optional[NonceSource] = None) -> bytes:
    """Adversary model: sign with stolen key material, pick any timestamps, report nothing."""
    return _sign_locally(stolen_key, meta, provider, pattern, nonce_source)[1]
