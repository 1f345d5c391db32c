"""Trusted Center: key registry, revocation, transaction log and signed exports.

The TC holds three irrevocable keys of its own: the *root* key that signs
key-list and transaction-list documents (preinstalled on every reader), the
*ticket-signing* key used in central mode, and a *comms* key authenticating
its side of the device channels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple, Union

from . import codec
from .codec import MarkerPattern, ProviderData, SignatureField, TicketMetadata
from .crypto import (
    SCHNORR_P256_SHA256,
    NonceSource,
    PrivateKey,
    PublicKey,
    keypair_generate,
    pattern_hash,
    sign,
    verify,
)
from .errors import (
    AlreadyRevoked,
    DuplicateKey,
    MalformedDocument,
    ModeMismatch,
    RangeError,
    RefusedRevoked,
    SkewRejected,
    TrustError,
    UnknownKey,
)

TC_KEY_ID = 0
DEFAULT_SKEW = 60


class KeyRole(str, Enum):
    TC = "tc-ticket-signing"
    PRINTER = "printer-ticket-signing"
    COMMS = "comms"


class SigningMode(str, Enum):
    CENTRAL = "central"
    DISTRIBUTED = "distributed"


_ROLE_TOKEN = {KeyRole.TC: "tc", KeyRole.PRINTER: "printer"}
_TOKEN_ROLE = {v: k for k, v in _ROLE_TOKEN.items()}


@dataclass(frozen=True)
class KeyRecord:
    key_id: int
    role: KeyRole
    public_key: PublicKey
    registered_at: int
    revoked_at: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.key_id <= 0xFFFFFFFF:
            raise ValueError(f"key_id {self.key_id} does not fit in 32 bits")
        if self.revoked_at is not None and self.revoked_at < self.registered_at:
            raise ValueError("revoked_at precedes registered_at")

    @property
    def revoked(self) -> bool:
        return self.revoked_at is not None

    def sort_key(self) -> tuple:
        return (self.key_id, self.registered_at, self.public_key.to_bytes())


@dataclass(frozen=True)
class TransactionRecord:
    printer_id: int
    ticket_id: int
    issue_ts: int
    validity_end: int
    pattern_hash: bytes
    reported_at: Optional[int] = None

    def __post_init__(self):
        if not 1 <= len(self.pattern_hash) <= 32:
            raise RangeError("pattern_hash must be 1..32 bytes")

    @property
    def key(self) -> Tuple[int, int]:
        return (self.printer_id, self.ticket_id)

    def truncated(self, truncation: int) -> "TransactionRecord":
        if not 1 <= truncation <= len(self.pattern_hash):
            raise RangeError(f"cannot truncate a {len(self.pattern_hash)}-byte hash to {truncation}")
        return replace(self, pattern_hash=self.pattern_hash[:truncation], reported_at=None)

    @classmethod
    def for_ticket(cls, meta: TicketMetadata, pattern: MarkerPattern,
                   reported_at: Optional[int] = None) -> "TransactionRecord":
        return cls(meta.printer_id, meta.ticket_id, meta.issue_ts, meta.validity_end,
                   pattern_hash(pattern, 32), reported_at)


# -- canonical documents -----------------------------------------------------

_DEC = r"(0|[1-9][0-9]*)"
_KL_HEADER = [
    re.compile(r"format=keylist\.v1"),
    re.compile(r"tc=([0-9a-f]{4})"),
    re.compile(r"issued=" + _DEC),
    re.compile(r"mode=(central|distributed)"),
]
_KL_ENTRY = re.compile(
    r"key id=([0-9a-f]{8}) role=(tc|printer) pub=([0-9a-f]{128}) reg=" + _DEC
    + r" rev=(-|0|[1-9][0-9]*)")
_TX_HEADER = [
    re.compile(r"format=txlist\.v1"),
    re.compile(r"tc=([0-9a-f]{4})"),
    re.compile(r"issued=" + _DEC),
    re.compile(r"trunc=([1-9][0-9]?)"),
]
_TX_ENTRY = re.compile(
    r"tx printer=([0-9a-f]{8}) ticket=([0-9a-f]{16}) issue=" + _DEC + r" end=" + _DEC
    + r" ph=((?:[0-9a-f]{2})+)")
_SIG = re.compile(r"sig=([0-9a-f]{128})")


def _split_lines(data: bytes) -> List[str]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(f"not UTF-8: {exc}") from None
    if not text.endswith("\n"):
        raise MalformedDocument("document must end with a newline")
    return text[:-1].split("\n")


def _match(pattern: re.Pattern, line: str, lineno: int) -> re.Match:
    m = pattern.fullmatch(line)
    if m is None:
        raise MalformedDocument(f"line {lineno}: unexpected {line[:40]!r}")
    return m


@dataclass(frozen=True)
class KeyListDocument:
    tc_id: int
    issued_at: int
    signing_mode: SigningMode
    entries: Tuple[KeyRecord, ...]
    signature: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "signing_mode", SigningMode(self.signing_mode))
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        keys = [e.sort_key() for e in entries]
        if keys != sorted(keys) or len(set(keys)) != len(keys):
            raise MalformedDocument("entries must be sorted by key id with no duplicates")
        live = [e.key_id for e in entries if not e.revoked]
        if len(live) != len(set(live)):
            raise MalformedDocument("more than one unrevoked key per key id")
        roles = {e.role for e in entries}
        if not roles <= {KeyRole.TC, KeyRole.PRINTER}:
            raise MalformedDocument("key lists carry ticket-signing keys only")
        if self.signing_mode is SigningMode.CENTRAL:
            if roles - {KeyRole.TC} or sum(e.role is KeyRole.TC for e in entries) != 1:
                raise MalformedDocument("central mode lists exactly one TC key and no printer keys")
        elif KeyRole.TC in roles:
            raise MalformedDocument("distributed mode lists printer keys only")
        for e in entries:
            if (e.role is KeyRole.TC) != (e.key_id == TC_KEY_ID):
                raise MalformedDocument("key id 0 is reserved for the TC ticket-signing key")

    def body_bytes(self) -> bytes:
        lines = [
            "format=keylist.v1",
            f"tc={self.tc_id:04x}",
            f"issued={self.issued_at}",
            f"mode={self.signing_mode.value}",
        ]
        for e in self.entries:
            rev = "-" if e.revoked_at is None else str(e.revoked_at)
            lines.append(
                f"key id={e.key_id:08x} role={_ROLE_TOKEN[e.role]} "
                f"pub={e.public_key.to_bytes().hex()} reg={e.registered_at} rev={rev}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    def to_bytes(self) -> bytes:
        if len(self.signature) != 64:
            raise MalformedDocument("document is unsigned")
        return self.body_bytes() + f"sig={self.signature.hex()}\n".encode("ascii")

    def signed(self, root_key: PrivateKey, nonce_source: Optional[NonceSource] = None) -> "KeyListDocument":
        return replace(self, signature=sign(root_key, self.body_bytes(), nonce_source))

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyListDocument":
        lines = _split_lines(bytes(data))
        if len(lines) < len(_KL_HEADER) + 1:
            raise MalformedDocument("truncated key list")
        head = [_match(p, lines[i], i + 1) for i, p in enumerate(_KL_HEADER)]
        entries = []
        for i, line in enumerate(lines[len(_KL_HEADER):-1], start=len(_KL_HEADER) + 1):
            m = _match(_KL_ENTRY, line, i)
            try:
                entries.append(KeyRecord(
                    key_id=int(m.group(1), 16),
                    role=_TOKEN_ROLE[m.group(2)],
                    # suites are chosen per ticket; entries bind only the curve point
                    public_key=PublicKey.from_bytes(bytes.fromhex(m.group(3)), SCHNORR_P256_SHA256),
                    registered_at=int(m.group(4)),
                    revoked_at=None if m.group(5) == "-" else int(m.group(5)),
                ))
            except ValueError as exc:
                raise MalformedDocument(f"line {i}: {exc}") from None
        sig = _match(_SIG, lines[-1], len(lines))
        doc = cls(
            tc_id=int(head[1].group(1), 16),
            issued_at=int(head[2].group(1)),
            signing_mode=SigningMode(head[3].group(1)),
            entries=tuple(entries),
            signature=bytes.fromhex(sig.group(1)),
        )
        if doc.to_bytes() != bytes(data):
            raise MalformedDocument("document is not in canonical form")
        return doc

    def signer_candidates(self, tc_id: int, printer_id: int) -> List[KeyRecord]:
        """Entries that may have signed a ticket with these ids, unrevoked first."""
        if self.signing_mode is SigningMode.CENTRAL:
            if tc_id != self.tc_id:
                return []
            found = [e for e in self.entries if e.role is KeyRole.TC]
        else:
            found = [e for e in self.entries if e.role is KeyRole.PRINTER and e.key_id == printer_id]
        return sorted(found, key=lambda e: e.revoked)


@dataclass(frozen=True)
class TransactionListDocument:
    tc_id: int
    issued_at: int
    truncation: int
    records: Tuple[TransactionRecord, ...]
    signature: bytes = b""

    def __post_init__(self):
        if not 1 <= self.truncation <= 32:
            raise MalformedDocument(f"truncation {self.truncation} not in 1..32")
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        keys = [r.key for r in records]
        if keys != sorted(keys) or len(set(keys)) != len(keys):
            raise MalformedDocument("records must be sorted by (printer, ticket) without duplicates")
        if any(len(r.pattern_hash) != self.truncation for r in records):
            raise MalformedDocument("pattern hash length differs from truncation")

    def body_bytes(self) -> bytes:
        lines = [
            "format=txlist.v1",
            f"tc={self.tc_id:04x}",
            f"issued={self.issued_at}",
            f"trunc={self.truncation}",
        ]
        for r in self.records:
            lines.append(
                f"tx printer={r.printer_id:08x} ticket={r.ticket_id:016x} "
                f"issue={r.issue_ts} end={r.validity_end} ph={r.pattern_hash.hex()}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    def to_bytes(self) -> bytes:
        if len(self.signature) != 64:
            raise MalformedDocument("document is unsigned")
        return self.body_bytes() + f"sig={self.signature.hex()}\n".encode("ascii")

    def signed(self, root_key: PrivateKey, nonce_source: Optional[NonceSource] = None) -> "TransactionListDocument":
        return replace(self, signature=sign(root_key, self.body_bytes(), nonce_source))

    @classmethod
    def from_bytes(cls, data: bytes) -> "TransactionListDocument":
        lines = _split_lines(bytes(data))
        if len(lines) < len(_TX_HEADER) + 1:
            raise MalformedDocument("truncated transaction list")
        head = [_match(p, lines[i], i + 1) for i, p in enumerate(_TX_HEADER)]
        records = []
        for i, line in enumerate(lines[len(_TX_HEADER):-1], start=len(_TX_HEADER) + 1):
            m = _match(_TX_ENTRY, line, i)
            try:
                records.append(TransactionRecord(
                    printer_id=int(m.group(1), 16),
                    ticket_id=int(m.group(2), 16),
                    issue_ts=int(m.group(3)),
                    validity_end=int(m.group(4)),
                    pattern_hash=bytes.fromhex(m.group(5)),
                ))
            except ValueError as exc:
                raise MalformedDocument(f"line {i}: {exc}") from None
        sig = _match(_SIG, lines[-1], len(lines))
        doc = cls(
            tc_id=int(head[1].group(1), 16),
            issued_at=int(head[2].group(1)),
            truncation=int(head[3].group(1)),
            records=tuple(records),
            signature=bytes.fromhex(sig.group(1)),
        )
        if doc.to_bytes() != bytes(data):
            raise MalformedDocument("document is not in canonical form")
        return doc

    def lookup(self, printer_id: int, ticket_id: int) -> Optional[TransactionRecord]:
        for r in self.records:
            if r.key == (printer_id, ticket_id):
                return r
        return None


Document = Union[KeyListDocument, TransactionListDocument]


def keylist_canonical_bytes(document: KeyListDocument) -> bytes:
    return document.to_bytes()


def txlist_canonical_bytes(document: TransactionListDocument) -> bytes:
    return document.to_bytes()


def _verify_document(doc: Document, root_key: PublicKey) -> bool:
    if len(doc.signature) != 64:
        return False
    return verify(root_key, doc.body_bytes(), doc.signature)


def keylist_verify(document: Union[KeyListDocument, bytes], tc_root_key: PublicKey) -> bool:
    """Check a key list against the preinstalled TC root key.

    Raw bytes are parsed first; unparsable input raises
    :class:`MalformedDocument`.
    """
    if not isinstance(document, KeyListDocument):
        document = KeyListDocument.from_bytes(document)
    return _verify_document(document, tc_root_key)


def txlist_verify(document: Union[TransactionListDocument, bytes], tc_root_key: PublicKey) -> bool:
    if not isinstance(document, TransactionListDocument):
        document = TransactionListDocument.from_bytes(document)
    return _verify_document(document, tc_root_key)


def stamp_issue_time(issue_ts: int, now: int, skew: int = DEFAULT_SKEW,
                     reject: bool = False) -> int:
    """Central-signing timestamp policy: keep ``issue_ts`` only inside ``[now - skew, now]``."""
    if now - skew <= issue_ts <= now:
        return issue_ts
    if reject:
        raise SkewRejected(f"issue_ts {issue_ts} outside skew window at {now}")
    return now


# -- the Trusted Center --------------------------------------------------------

@dataclass
class TrustedCenter:
    """Mutable TC state; calls must be externally serialized."""

    tc_id: int
    signing_mode: SigningMode
    root_key: PrivateKey
    ticket_key: PrivateKey
    comms_key: PrivateKey
    created_at: int = 0
    skew: int = DEFAULT_SKEW
    reject_skew: bool = False
    nonce_source: NonceSource = field(default_factory=NonceSource.system)
    keys: List[KeyRecord] = field(default_factory=list)
    transactions: Dict[Tuple[int, int], TransactionRecord] = field(default_factory=dict)

    def __post_init__(self):
        self.signing_mode = SigningMode(self.signing_mode)
        if not 0 <= self.tc_id <= 0xFFFF:
            raise ValueError("tc_id must fit in 16 bits")

    @classmethod
    def create(cls, tc_id: int, signing_mode, now: int = 0,
               nonce_source: Optional[NonceSource] = None,
               suite_id: int = SCHNORR_P256_SHA256, **kwargs) -> "TrustedCenter":
        src = nonce_source or NonceSource.system()
        root, _ = keypair_generate(SCHNORR_P256_SHA256, src)
        ticket, _ = keypair_generate(suite_id, src)
        comms, _ = keypair_generate(SCHNORR_P256_SHA256, src)
        return cls(tc_id, signing_mode, root, ticket, comms, created_at=now,
                   nonce_source=src, **kwargs)

    @property
    def root_public(self) -> PublicKey:
        return self.root_key.public_key

    @property
    def ticket_public(self) -> PublicKey:
        return self.ticket_key.public_key

    @property
    def comms_public(self) -> PublicKey:
        return self.comms_key.public_key

    # registry

    def _records(self, key_id: int, role: Optional[KeyRole] = None) -> List[KeyRecord]:
        return [k for k in self.keys if k.key_id == key_id and (role is None or k.role is role)]

    def active_key(self, key_id: int, role: KeyRole, now: int) -> KeyRecord:
        """The key in force at ``now``.

        Raises :class:`UnknownKey` for ids never registered in ``role`` and
        :class:`RefusedRevoked` when every such key is revoked.
        """
        records = self._records(key_id, role)
        if not records:
            raise UnknownKey(f"no {role.value} key registered for {key_id}")
        for rec in records:
            if rec.revoked_at is None or rec.revoked_at > now:
                return rec
        raise RefusedRevoked(f"key {key_id} ({role.value}) is revoked")

    def register_printer(self, printer_id: int, public_key: PublicKey, now: int,
                         role: KeyRole = KeyRole.COMMS) -> "TrustedCenter":
        role = KeyRole(role)
        if role is KeyRole.TC:
            raise ValueError("the TC ticket-signing key is not registered through printers")
        if printer_id == TC_KEY_ID:
            raise ValueError("printer id 0 is reserved for the TC")
        if role is KeyRole.PRINTER and self.signing_mode is SigningMode.CENTRAL:
            raise ModeMismatch("printers hold no ticket-signing keys in central mode")
        for rec in self._records(printer_id, role):
            if rec.revoked_at is None:
                raise DuplicateKey(f"printer {printer_id} already has an unrevoked {role.value} key")
            if rec.public_key.point == public_key.point:
                raise DuplicateKey("a revoked key cannot be registered again")
        self.keys.append(KeyRecord(printer_id, role, public_key, now))
        return self

    def revoke(self, key_id: int, revoked_at: int) -> "TrustedCenter":
        """Revoke every live key (ticket-signing and comms) of a device."""
        if key_id == TC_KEY_ID:
            raise TrustError("TC keys are irrevocable trust anchors")
        records = self._records(key_id)
        if not records:
            raise UnknownKey(f"unknown key id {key_id}")
        live = [i for i, k in enumerate(self.keys) if k.key_id == key_id and k.revoked_at is None]
        if not live:
            raise AlreadyRevoked(f"key id {key_id} is already revoked")
        for i in live:
            self.keys[i] = replace(self.keys[i], revoked_at=revoked_at)
        return self

    # issuance

    def central_sign(self, metadata: TicketMetadata, provider: ProviderData,
                     pattern: MarkerPattern, requesting_printer_id: int,
                     now: int) -> Tuple[TicketMetadata, SignatureField]:
        """Sign a ticket on a printer's behalf.

        The TC stamps its own id, suite and the authenticated printer id,
        and owns the issue timestamp: anything outside ``[now - skew, now]``
        is overwritten with ``now`` (or refused when ``reject_skew``).
        Returns the metadata actually signed together with the signature.
        """
        if self.signing_mode is not SigningMode.CENTRAL:
            raise ModeMismatch("central signing is disabled in distributed mode")
        self.active_key(requesting_printer_id, KeyRole.COMMS, now)
        issue_ts = stamp_issue_time(metadata.issue_ts, now, self.skew, self.reject_skew)
        meta = metadata.replace(suite_id=self.ticket_key.suite_id, tc_id=self.tc_id,
                                printer_id=requesting_printer_id, issue_ts=issue_ts)
        record = TransactionRecord.for_ticket(meta, pattern, reported_at=now)
        self._check_new_transaction(record)
        region = codec.assemble_signed_region(meta, provider, pattern)
        sig = SignatureField(sign(self.ticket_key, region, self.nonce_source))
        self.transactions[record.key] = record
        return meta, sig

    def record_transaction(self, record: TransactionRecord, now: int) -> "TrustedCenter":
        if self.signing_mode is not SigningMode.DISTRIBUTED:
            raise ModeMismatch("transactions are reported only in distributed mode")
        self.active_key(record.printer_id, KeyRole.PRINTER, now)
        if len(record.pattern_hash) != 32:
            raise RangeError("reported transactions carry the full 32-byte pattern hash")
        record = replace(record, reported_at=now)
        if self._check_new_transaction(record):
            self.transactions[record.key] = record
        return self

    def _check_new_transaction(self, record: TransactionRecord) -> bool:
        old = self.transactions.get(record.key)
        if old is None:
            return True
        if replace(old, reported_at=None) == replace(record, reported_at=None):
            return False
        raise DuplicateKey(f"transaction {record.printer_id}/{record.ticket_id} already recorded")

    # exports

    def export_keylist(self, now: int) -> KeyListDocument:
        if self.signing_mode is SigningMode.CENTRAL:
            entries = [KeyRecord(TC_KEY_ID, KeyRole.TC, self.ticket_public, self.created_at)]
        else:
            entries = [k for k in self.keys if k.role is KeyRole.PRINTER]
        entries.sort(key=KeyRecord.sort_key)
        doc = KeyListDocument(self.tc_id, now, self.signing_mode, tuple(entries))
        return doc.signed(self.root_key, self.nonce_source)

    def revocation_cutoffs(self) -> Dict[int, int]:
        """Latest ticket-signing revocation time per revoked printer."""
        cut: Dict[int, int] = {}
        for k in self.keys:
            if k.role is KeyRole.PRINTER and k.revoked_at is not None:
                cut[k.key_id] = max(cut.get(k.key_id, k.revoked_at), k.revoked_at)
        return cut

    def export_transactions(self, truncation: int, now: int) -> TransactionListDocument:
        """Pre-revocation transactions of revoked printers, hashes truncated.

        Unrevoked printers need no exception list, so their records are
        never exported.
        """
        return build_txlist(self.tc_id, now, truncation, self.transactions.values(),
                            self.revocation_cutoffs(), self.root_key, self.nonce_source)

    def comms_key_of(self, device_id: int, now: int) -> PublicKey:
        return self.active_key(device_id, KeyRole.COMMS, now).public_key


def build_keylist(tc_id: int, issued_at: int, mode, entries: Iterable[KeyRecord],
                  root_key: PrivateKey, nonce_source: Optional[NonceSource] = None) -> KeyListDocument:
    """Assemble and sign a key list outside a live TC (used by the CLI)."""
    entries = sorted(entries, key=KeyRecord.sort_key)
    return KeyListDocument(tc_id, issued_at, SigningMode(mode), tuple(entries)).signed(root_key, nonce_source)


def build_txlist(tc_id: int, issued_at: int, truncation: int,
                 records: Iterable[TransactionRecord], cutoffs: Dict[int, int],
                 root_key: PrivateKey, nonce_source: Optional[NonceSource] = None) -> TransactionListDocument:
    """Filter full-hash records by revocation cutoff, truncate and sign."""
    if not isinstance(truncation, int) or not 1 <= truncation <= 32:
        raise RangeError(f"truncation must be in 1..32, got {truncation!r}")
    kept = sorted(
        (r.truncated(truncation) for r in records
         if r.printer_id in cutoffs and r.reported_at is not None
         and r.reported_at < cutoffs[r.printer_id]),
        key=lambda r: r.key)
    return TransactionListDocument(tc_id, issued_at, truncation, tuple(kept)).signed(root_key, nonce_source)


# -- flat transaction log (unsigned, full hashes, TC-internal) ---------------

_LOG_ENTRY = re.compile(
    r"tx printer=([0-9a-f]{8}) ticket=([0-9a-f]{16}) issue=" + _DEC + r" end=" + _DEC
    + r" ph=([0-9a-f]{64}) reported=" + _DEC)


def dump_transaction_log(records: Iterable[TransactionRecord]) -> str:
    out = []
    for r in records:
        if r.reported_at is None or len(r.pattern_hash) != 32:
            raise ValueError("log records carry a full hash and a report time")
        out.append(f"tx printer={r.printer_id:08x} ticket={r.ticket_id:016x} issue={r.issue_ts} "
                   f"end={r.validity_end} ph={r.pattern_hash.hex()} reported={r.reported_at}\n")
    return "".join(out)


def load_transaction_log(text: str) -> List[TransactionRecord]:
    records = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _match(_LOG_ENTRY, line, i)
        records.append(TransactionRecord(int(m.group(1), 16), int(m.group(2), 16), int(m.group(3)),
                                         int(m.group(4)), bytes.fromhex(m.group(5)), int(m.group(6))))
    return records


def revocation_cutoffs(keylist: KeyListDocument) -> Dict[int, int]:
    """Per-printer revocation cutoff as recorded in a key list."""
    cut: Dict[int, int] = {}
    for e in keylist.entries:
        if e.role is KeyRole.PRINTER and e.revoked_at is not None:
            cut[e.key_id] = max(cut.get(e.key_id, e.revoked_at), e.revoked_at)
    return cut
