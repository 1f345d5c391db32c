"""Signed random-pattern smart tickets.

A ticket is a 704-byte payload (metadata, provider data, a 512-byte marker
pattern and a signature) validated offline by readers against key lists and
transaction lists published by a Trusted Center.
"""

from .codec import (
    MarkerPattern,
    ProviderData,
    SignatureField,
    TicketMetadata,
    TicketPayload,
    decode_payload,
    encode_payload,
    signed_region,
)
from .devices import (
    Outcome,
    Reader,
    ReaderTrustStore,
    Reason,
    ValidationVerdict,
    printer_issue,
    reader_sync,
    reader_validate,
    rogue_issue,
)
from .trust import (
    KeyListDocument,
    KeyRecord,
    KeyRole,
    SigningMode,
    TransactionListDocument,
    TransactionRecord,
    TrustedCenter,
    keylist_verify,
    txlist_verify,
)

__version__ = "0.1.0"
