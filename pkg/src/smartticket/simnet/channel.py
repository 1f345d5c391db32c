"""Authenticated, replay-protected envelopes over an in-process transport.

An envelope is signed by the sender's comms key over
``sender_id (4B) || counter (8B) || body_type (1B) || body``; receivers
accept each sender's counters only in strictly increasing order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Dict, Iterable, List, Optional, Union

from ..crypto import NonceSource, PrivateKey, PublicKey, sign, verify
from ..errors import BadEnvelopeSignature, ReplayDetected, UnknownSender

_HEAD = struct.Struct(">IQB")
_LEN = struct.Struct(">I")
SIG_LEN = 64


class BodyType(IntEnum):
    SIGN_REQUEST = 1
    SIGN_RESPONSE = 2
    REPORT = 3
    REPORT_ACK = 4
    DOCUMENTS = 5
    ERROR = 6


@dataclass(frozen=True)
class Envelope:
    sender_id: int
    counter: int
    body_type: int
    body: bytes
    signature: bytes

    def signed_bytes(self) -> bytes:
        return envelope_message(self.sender_id, self.counter, self.body_type, self.body)

    def to_bytes(self) -> bytes:
        return (_HEAD.pack(self.sender_id, self.counter, self.body_type)
                + _LEN.pack(len(self.body)) + self.body + self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        if len(data) < _HEAD.size + _LEN.size + SIG_LEN:
            raise ValueError("envelope too short")
        sender_id, counter, body_type = _HEAD.unpack_from(data)
        (n,) = _LEN.unpack_from(data, _HEAD.size)
        start = _HEAD.size + _LEN.size
        if len(data) != start + n + SIG_LEN:
            raise ValueError("envelope length mismatch")
        return cls(sender_id, counter, body_type, data[start:start + n], data[start + n:])


def envelope_message(sender_id: int, counter: int, body_type: int, body: bytes) -> bytes:
    return _HEAD.pack(sender_id, counter, body_type) + bytes(body)


def channel_send(sender_key: PrivateKey, sender_id: int, counter: int, body_type: int,
                 body: bytes, nonce_source: Optional[NonceSource] = None) -> Envelope:
    msg = envelope_message(sender_id, counter, body_type, body)
    return Envelope(sender_id, counter, int(body_type), bytes(body), sign(sender_key, msg, nonce_source))


KeyLookup = Callable[[int], Iterable[PublicKey]]


@dataclass
class Receiver:
    """Per-endpoint receive state: trusted sender keys and last seen counters.

    ``trusted`` maps a sender id to the keys that may have signed for it;
    it can be a dict or a callable for keys that change over time.
    """

    trusted: Union[Dict[int, PublicKey], KeyLookup]
    last_counter: Dict[int, int] = field(default_factory=dict)

    def _keys(self, sender_id: int) -> List[PublicKey]:
        if callable(self.trusted):
            return list(self.trusted(sender_id))
        key = self.trusted.get(sender_id)
        return [] if key is None else [key]

    def receive(self, envelope: Envelope) -> bytes:
        keys = self._keys(envelope.sender_id)
        if not keys:
            raise UnknownSender(f"no comms key for sender {envelope.sender_id}")
        msg = envelope.signed_bytes()
        if not any(verify(k, msg, envelope.signature) for k in keys):
            raise BadEnvelopeSignature(f"bad signature from sender {envelope.sender_id}")
        last = self.last_counter.get(envelope.sender_id)
        if last is not None and envelope.counter <= last:
            raise ReplayDetected(
                f"counter {envelope.counter} from sender {envelope.sender_id} not above {last}")
        self.last_counter[envelope.sender_id] = envelope.counter
        return envelope.body


def channel_receive(receiver: Receiver, envelope: Envelope) -> bytes:
    return receiver.receive(envelope)


@dataclass
class Sender:
    sender_id: int
    key: PrivateKey
    nonce_source: Optional[NonceSource] = None
    counter: int = 0

    def send(self, body_type: int, body: bytes) -> Envelope:
        self.counter += 1
        return channel_send(self.key, self.sender_id, self.counter, body_type, body, self.nonce_source)
