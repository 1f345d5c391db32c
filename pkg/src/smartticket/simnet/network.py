"""Message bodies and the in-process links between devices and the TC."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .. import codec, errors
from ..codec import MarkerPattern, ProviderData, SignatureField, TicketMetadata
from ..crypto import NonceSource, PrivateKey
from ..errors import ChannelError, SmartTicketError
from ..trust import KeyRole, TransactionRecord, TrustedCenter
from .channel import BodyType, Envelope, Receiver, Sender

TC_SENDER_ID = 0

_REC = struct.Struct(">IQIIB")
_LEN = struct.Struct(">I")


class SimClock:
    """Monotone simulated Unix clock."""

    def __init__(self, now: int = 0):
        self._now = int(now)

    @property
    def now(self) -> int:
        return self._now

    def __call__(self) -> int:
        return self._now

    def advance(self, seconds: int) -> int:
        if seconds < 0:
            raise ValueError("the clock only moves forward")
        self._now += int(seconds)
        return self._now

    def set(self, t: int) -> int:
        if t < self._now:
            raise ValueError(f"cannot move clock back from {self._now} to {t}")
        self._now = int(t)
        return self._now


# -- bodies -------------------------------------------------------------------

def encode_sign_request(meta: TicketMetadata, provider: ProviderData, pattern: MarkerPattern) -> bytes:
    return codec.assemble_signed_region(meta, provider, pattern)


def decode_sign_request(body: bytes) -> Tuple[TicketMetadata, ProviderData, MarkerPattern]:
    if len(body) != codec.SIGNED_REGION_SIZE:
        raise ChannelError("malformed sign request")
    # reuse the payload decoder with a placeholder signature to validate fields
    try:
        t = codec.decode_payload(body + bytes([1]) + bytes(codec.MAX_SIGNATURE_LEN))
    except errors.StructureError as exc:
        raise ChannelError(f"malformed sign request: {exc}") from None
    return t.metadata, t.provider, t.pattern


def encode_sign_response(meta: TicketMetadata, sig: SignatureField) -> bytes:
    return meta.to_bytes() + sig.to_bytes()


def decode_sign_response(body: bytes, provider: ProviderData,
                         pattern: MarkerPattern) -> Tuple[TicketMetadata, SignatureField]:
    if len(body) != codec.METADATA_SIZE + codec.SIGNATURE_FIELD_SIZE:
        raise ChannelError("malformed sign response")
    raw = body[:codec.METADATA_SIZE] + provider.data + pattern.data + body[codec.METADATA_SIZE:]
    try:
        t = codec.decode_payload(raw)
    except errors.StructureError as exc:
        raise ChannelError(f"malformed sign response: {exc}") from None
    return t.metadata, t.signature


def encode_record(rec: TransactionRecord) -> bytes:
    return _REC.pack(rec.printer_id, rec.ticket_id, rec.issue_ts, rec.validity_end,
                     len(rec.pattern_hash)) + rec.pattern_hash


def decode_record(body: bytes) -> TransactionRecord:
    if len(body) < _REC.size:
        raise ChannelError("malformed transaction report")
    p, t, issue, end, n = _REC.unpack_from(body)
    if len(body) != _REC.size + n:
        raise ChannelError("malformed transaction report")
    return TransactionRecord(p, t, issue, end, body[_REC.size:])


def encode_documents(keylist: bytes, txlist: bytes) -> bytes:
    return _LEN.pack(len(keylist)) + keylist + _LEN.pack(len(txlist)) + txlist


def decode_documents(body: bytes) -> Tuple[bytes, bytes]:
    try:
        (n,) = _LEN.unpack_from(body)
        keylist = body[4:4 + n]
        (m,) = _LEN.unpack_from(body, 4 + n)
        txlist = body[8 + n:8 + n + m]
    except struct.error:
        raise ChannelError("malformed document bundle") from None
    if len(keylist) != n or len(txlist) != m or len(body) != 8 + n + m:
        raise ChannelError("malformed document bundle")
    return keylist, txlist


def encode_error(exc: Exception) -> bytes:
    return f"{type(exc).__name__}\n{exc}".encode("utf-8")


def raise_error(body: bytes) -> None:
    name, _, message = body.decode("utf-8", "replace").partition("\n")
    cls = getattr(errors, name, None)
    if not (isinstance(cls, type) and issubclass(cls, SmartTicketError)) or cls is errors.ScriptError:
        cls = ChannelError
    raise cls(message)


# -- TC side ------------------------------------------------------------------

@dataclass
class TcServer:
    """Envelope front end of a :class:`TrustedCenter`.

    Senders authenticate with any comms key ever registered for their id, so
    that a revoked device gets a proper ``RefusedRevoked`` from the TC logic
    rather than an anonymous channel failure.
    """

    tc: TrustedCenter
    clock: Callable[[], int]
    nonce_source: Optional[NonceSource] = None
    sender: Sender = field(init=False)
    receiver: Receiver = field(init=False)

    def __post_init__(self):
        self.sender = Sender(TC_SENDER_ID, self.tc.comms_key, self.nonce_source)
        self.receiver = Receiver(self._device_keys)

    def _device_keys(self, device_id: int):
        return [k.public_key for k in self.tc.keys
                if k.key_id == device_id and k.role is KeyRole.COMMS]

    def handle(self, envelope: Envelope) -> Envelope:
        body = self.receiver.receive(envelope)
        now = self.clock()
        try:
            if envelope.body_type == BodyType.SIGN_REQUEST:
                meta, provider, pattern = decode_sign_request(body)
                meta, sig = self.tc.central_sign(meta, provider, pattern, envelope.sender_id, now)
                return self.sender.send(BodyType.SIGN_RESPONSE, encode_sign_response(meta, sig))
            if envelope.body_type == BodyType.REPORT:
                rec = decode_record(body)
                if rec.printer_id != envelope.sender_id:
                    raise ChannelError("printers may only report their own transactions")
                self.tc.record_transaction(rec, now)
                return self.sender.send(BodyType.REPORT_ACK, encode_record(rec))
            raise ChannelError(f"unexpected body type {envelope.body_type}")
        except (SmartTicketError, ValueError) as exc:
            return self.sender.send(BodyType.ERROR, encode_error(exc))

    def publish(self, truncation: int = 32) -> Envelope:
        now = self.clock()
        keylist = self.tc.export_keylist(now).to_bytes()
        txlist = self.tc.export_transactions(truncation, now).to_bytes()
        return self.sender.send(BodyType.DOCUMENTS, encode_documents(keylist, txlist))


@dataclass
class Link:
    """Transport between one device and the TC server; ``up=False`` drops everything.

    Every envelope crossing the link is appended to ``log``.
    """

    server: TcServer
    up: bool = True
    log: List[Envelope] = field(default_factory=list)

    def roundtrip(self, envelope: Envelope) -> Envelope:
        if not self.up:
            raise ChannelError("trusted center unreachable")
        self.log.append(envelope)
        response = self.server.handle(envelope)
        self.log.append(response)
        return response


@dataclass
class EnvelopeChannel:
    """Printer-side :class:`~smartticket.devices.TcChannel` over signed envelopes."""

    printer_id: int
    comms_key: PrivateKey
    link: Link
    nonce_source: Optional[NonceSource] = None
    sender: Sender = field(init=False)
    receiver: Receiver = field(init=False)

    def __post_init__(self):
        self.sender = Sender(self.printer_id, self.comms_key, self.nonce_source)
        self.receiver = Receiver({TC_SENDER_ID: self.link.server.tc.comms_public})

    def _call(self, body_type: BodyType, body: bytes, expect: BodyType) -> bytes:
        response = self.link.roundtrip(self.sender.send(body_type, body))
        payload = self.receiver.receive(response)
        if response.body_type == BodyType.ERROR:
            raise_error(payload)
        if response.body_type != expect:
            raise ChannelError(f"unexpected response type {response.body_type}")
        return payload

    def request_signature(self, metadata, provider, pattern):
        body = self._call(BodyType.SIGN_REQUEST, encode_sign_request(metadata, provider, pattern),
                          BodyType.SIGN_RESPONSE)
        return decode_sign_response(body, provider, pattern)

    def report(self, record):
        self._call(BodyType.REPORT, encode_record(record), BodyType.REPORT_ACK)
