"""Scripted, deterministic theft scenarios.

Script syntax, one directive per line, ``#`` starts a comment::

    seed <u64>                      clock <unix>           advance <seconds>
    mode central|distributed        printer <name>         reader <name>
    issue <printer> <ticket> start=<unix> end=<unix>
    steal <printer>
    rogue-issue <printer> <ticket> claim=<unix> start=<unix> end=<unix>
    revoke <printer>
    sync <reader> [trunc=<n>]
    validate <reader> <ticket>
    expect <reader> <ticket> accept|accept-exceptional|reject:<Reason>
    expect-refused <ticket> [<ErrorName>]

``expect`` validates the ticket at the current clock and compares.
``expect-refused`` checks that issuing the ticket was refused by the TC.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .. import codec
from ..codec import MarkerPattern, ProviderData, TicketMetadata
from ..crypto import SCHNORR_P256_SHA256, NonceSource, PrivateKey, keypair_generate
from ..devices import Reader, Reason, printer_issue, rogue_issue
from ..errors import ChannelError, DocumentRejected, ScriptError, SmartTicketError
from ..trust import KeyRole, SigningMode, TrustedCenter
from .channel import Receiver
from .network import TC_SENDER_ID, EnvelopeChannel, Link, SimClock, TcServer, decode_documents

DEFAULT_TC_ID = 1

_ARITY = {
    "seed": (1, ()), "clock": (1, ()), "advance": (1, ()), "mode": (1, ()),
    "printer": (1, ()), "reader": (1, ()), "steal": (1, ()), "revoke": (1, ()),
    "issue": (2, ("start", "end")),
    "rogue-issue": (2, ("claim", "start", "end")),
    "sync": (1, ()),
    "validate": (2, ()),
    "expect": (3, ()),
    "expect-refused": (1, ()),
}
_OPTIONAL = {"sync": ("trunc",), "expect-refused": ()}


@dataclass(frozen=True)
class Directive:
    line: int
    name: str
    args: Tuple[str, ...]
    opts: Tuple[Tuple[str, int], ...] = ()

    def opt(self, key: str, default: Optional[int] = None) -> Optional[int]:
        return dict(self.opts).get(key, default)


@dataclass(frozen=True)
class Scenario:
    directives: Tuple[Directive, ...]

    @property
    def expectations(self) -> List[Directive]:
        return [d for d in self.directives if d.name in ("expect", "expect-refused")]


def _int(tok: str, line: int, what: str) -> int:
    try:
        v = int(tok, 10)
    except ValueError:
        raise ScriptError(line, f"{what} must be a decimal integer, got {tok!r}") from None
    if v < 0:
        raise ScriptError(line, f"{what} must be non-negative")
    return v


def parse_scenario(text: str) -> Scenario:
    directives = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, *toks = line.split()
        if name not in _ARITY:
            raise ScriptError(lineno, f"unknown directive {name!r}")
        npos, required = _ARITY[name]
        optional = _OPTIONAL.get(name, ())
        pos = [t for t in toks if "=" not in t]
        kv = [t for t in toks if "=" in t]
        extra_pos = 1 if name == "expect-refused" else 0
        if not npos <= len(pos) <= npos + extra_pos:
            raise ScriptError(lineno, f"{name} takes {npos} positional argument(s)")
        opts: Dict[str, int] = {}
        for t in kv:
            k, _, v = t.partition("=")
            if k not in required and k not in optional:
                raise ScriptError(lineno, f"{name} does not accept {k}=")
            if k in opts:
                raise ScriptError(lineno, f"duplicate {k}=")
            opts[k] = _int(v, lineno, k)
        missing = [k for k in required if k not in opts]
        if missing:
            raise ScriptError(lineno, f"{name} is missing {', '.join(k + '=' for k in missing)}")
        if name in ("seed", "clock", "advance"):
            _int(pos[0], lineno, name)
        if name == "mode" and pos[0] not in ("central", "distributed"):
            raise ScriptError(lineno, f"mode must be central or distributed, got {pos[0]!r}")
        if name == "expect":
            _parse_token(pos[2], lineno)
        directives.append(Directive(lineno, name, tuple(pos), tuple(sorted(opts.items()))))
    return Scenario(tuple(directives))


def _parse_token(tok: str, line: int) -> str:
    if tok in ("accept", "accept-exceptional"):
        return tok
    if tok.startswith("reject:"):
        reason = tok[len("reject:"):]
        if reason in {r.value for r in Reason}:
            return tok
    raise ScriptError(line, f"bad expected verdict {tok!r}")


@dataclass
class Expectation:
    line: int
    subject: str
    expected: str
    actual: str

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass
class ScenarioReport:
    events: List[str] = field(default_factory=list)
    expectations: List[Expectation] = field(default_factory=list)
    verdicts: List[Tuple[int, str, str, str]] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(e.passed for e in self.expectations)

    @property
    def total(self) -> int:
        return len(self.expectations)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    @property
    def failures(self) -> List[Expectation]:
        return [e for e in self.expectations if not e.passed]

    def summary(self) -> str:
        return f"{self.passed}/{self.total} expectations passed"

    def render(self) -> str:
        lines = list(self.events)
        for e in self.expectations:
            status = "PASS" if e.passed else "FAIL"
            lines.append(f"line {e.line}: expect {e.subject} {e.expected}: {status} (actual {e.actual})")
        lines.append(self.summary())
        return "\n".join(lines) + "\n"


@dataclass
class _Printer:
    name: str
    printer_id: int
    comms_key: PrivateKey
    ticket_key: Optional[PrivateKey]
    channel: EnvelopeChannel
    next_seq: int = 1
    stolen: bool = False


@dataclass
class _Ticket:
    name: str
    raw: Optional[bytes]
    pattern: Optional[MarkerPattern]
    refusal: Optional[str] = None


@dataclass
class _ReaderDev:
    reader: Reader
    receiver: Receiver


class _World:
    def __init__(self, seed: int):
        self.seed = seed
        self.clock = SimClock(0)
        self.mode = SigningMode.DISTRIBUTED
        self.tc: Optional[TrustedCenter] = None
        self.server: Optional[TcServer] = None
        self.printers: Dict[str, _Printer] = {}
        self.readers: Dict[str, _ReaderDev] = {}
        self.tickets: Dict[str, _Ticket] = {}
        self.report = ScenarioReport()

    def start(self):
        if self.tc is not None:
            return
        self.rng = random.Random(self.seed)
        self.nonces = NonceSource.deterministic(self.seed)
        self.tc = TrustedCenter.create(DEFAULT_TC_ID, self.mode, now=self.clock.now,
                                       nonce_source=self.nonces)
        self.server = TcServer(self.tc, self.clock, self.nonces)

    def log(self, d: Directive, text: str):
        self.report.events.append(f"line {d.line}: {d.name} {' '.join(d.args)}: {text}".rstrip())

    def printer(self, d: Directive, name: str) -> _Printer:
        try:
            return self.printers[name]
        except KeyError:
            raise ScriptError(d.line, f"undeclared printer {name!r}") from None

    def reader(self, d: Directive, name: str) -> _ReaderDev:
        try:
            return self.readers[name]
        except KeyError:
            raise ScriptError(d.line, f"undeclared reader {name!r}") from None

    def ticket(self, d: Directive, name: str) -> _Ticket:
        try:
            return self.tickets[name]
        except KeyError:
            raise ScriptError(d.line, f"undeclared ticket {name!r}") from None

    def new_ticket_name(self, d: Directive, name: str):
        if name in self.tickets:
            raise ScriptError(d.line, f"ticket {name!r} already declared")

    def pattern(self) -> MarkerPattern:
        return MarkerPattern(self.rng.randbytes(codec.PATTERN_SIZE))

    def meta(self, p: _Printer, issue_ts: int, start: int, end: int, d: Directive) -> TicketMetadata:
        ticket_id = (p.printer_id << 32) | p.next_seq
        p.next_seq += 1
        try:
            return TicketMetadata(suite_id=SCHNORR_P256_SHA256, tc_id=self.tc.tc_id,
                                  printer_id=p.printer_id, ticket_id=ticket_id,
                                  issue_ts=issue_ts, validity_start=start, validity_end=end)
        except SmartTicketError as exc:
            raise ScriptError(d.line, str(exc)) from None


def _digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()[:16]


def _run_directive(w: _World, d: Directive) -> None:
    a = d.args
    if d.name == "seed":
        if w.tc is not None:
            raise ScriptError(d.line, "seed must precede all actors")
        w.seed = int(a[0])
    elif d.name == "clock":
        try:
            w.clock.set(int(a[0]))
        except ValueError as exc:
            raise ScriptError(d.line, str(exc)) from None
    elif d.name == "advance":
        w.clock.advance(int(a[0]))
    elif d.name == "mode":
        if w.tc is not None:
            raise ScriptError(d.line, "mode must precede all actors")
        w.mode = SigningMode(a[0])
    elif d.name == "printer":
        w.start()
        if a[0] in w.printers:
            raise ScriptError(d.line, f"printer {a[0]!r} already declared")
        pid = len(w.printers) + 1
        now = w.clock.now
        comms, comms_pub = keypair_generate(SCHNORR_P256_SHA256, w.nonces)
        w.tc.register_printer(pid, comms_pub, now, KeyRole.COMMS)
        ticket_key = None
        if w.mode is SigningMode.DISTRIBUTED:
            ticket_key, ticket_pub = keypair_generate(SCHNORR_P256_SHA256, w.nonces)
            w.tc.register_printer(pid, ticket_pub, now, KeyRole.PRINTER)
        channel = EnvelopeChannel(pid, comms, Link(w.server), w.nonces)
        w.printers[a[0]] = _Printer(a[0], pid, comms, ticket_key, channel)
        w.log(d, f"printer id {pid}")
    elif d.name == "reader":
        w.start()
        if a[0] in w.readers:
            raise ScriptError(d.line, f"reader {a[0]!r} already declared")
        w.readers[a[0]] = _ReaderDev(Reader.with_root(w.tc.root_public),
                                     Receiver({TC_SENDER_ID: w.tc.comms_public}))
        w.log(d, "reader with preinstalled TC root key")
    elif d.name == "issue":
        p = w.printer(d, a[0])
        w.new_ticket_name(d, a[1])
        if p.stolen:
            raise ScriptError(d.line, f"printer {p.name!r} has been stolen")
        now = w.clock.now
        meta = w.meta(p, now, d.opt("start"), d.opt("end"), d)
        pattern = w.pattern()
        try:
            raw = printer_issue(p.ticket_key, meta, ProviderData(), pattern, w.mode,
                                p.channel, w.nonces)
        except (SmartTicketError, ValueError) as exc:
            w.tickets[a[1]] = _Ticket(a[1], None, pattern, type(exc).__name__)
            w.log(d, f"refused: {type(exc).__name__}")
            return
        w.tickets[a[1]] = _Ticket(a[1], raw, pattern)
        w.log(d, f"ticket {meta.printer_id}/{meta.ticket_id} sha256:{_digest(raw)}")
    elif d.name == "steal":
        p = w.printer(d, a[0])
        p.stolen = True
        w.log(d, "attacker holds the printer's key material")
    elif d.name == "rogue-issue":
        _rogue(w, d)
    elif d.name == "revoke":
        p = w.printer(d, a[0])
        try:
            w.tc.revoke(p.printer_id, w.clock.now)
        except SmartTicketError as exc:
            raise ScriptError(d.line, str(exc)) from None
        w.log(d, f"revoked at {w.clock.now}")
    elif d.name == "sync":
        r = w.reader(d, a[0])
        trunc = d.opt("trunc", 32)
        if not 1 <= trunc <= 32:
            raise ScriptError(d.line, "trunc must be in 1..32")
        envelope = w.server.publish(trunc)
        try:
            keylist, txlist = decode_documents(r.receiver.receive(envelope))
            r.reader.sync(keylist, txlist, w.clock.now)
        except (ChannelError, DocumentRejected) as exc:
            w.log(d, f"rejected: {type(exc).__name__}")
            return
        w.log(d, f"trunc={trunc} transactions={len(r.reader.store.transactions)}")
    elif d.name in ("validate", "expect"):
        r = w.reader(d, a[0])
        t = w.ticket(d, a[1])
        if t.raw is None:
            actual = f"not-issued:{t.refusal}"
        else:
            verdict = r.reader.validate(t.raw, t.pattern, w.clock.now)
            actual = verdict.token
            w.report.verdicts.append((d.line, a[0], a[1], str(verdict)))
        if d.name == "validate":
            w.log(d, actual)
        else:
            w.report.expectations.append(Expectation(d.line, f"{a[0]} {a[1]}", a[2], actual))
    elif d.name == "expect-refused":
        t = w.ticket(d, a[0])
        expected = f"refused:{a[1]}" if len(a) > 1 else "refused"
        if t.refusal is None:
            actual = "issued"
        else:
            actual = f"refused:{t.refusal}" if len(a) > 1 else "refused"
        w.report.expectations.append(Expectation(d.line, a[0], expected, actual))


def _rogue(w: _World, d: Directive) -> None:
    a = d.args
    p = w.printer(d, a[0])
    w.new_ticket_name(d, a[1])
    if not p.stolen:
        raise ScriptError(d.line, f"printer {p.name!r} has not been stolen")
    meta = w.meta(p, d.opt("claim"), d.opt("start"), d.opt("end"), d)
    pattern = w.pattern()
    refusal = None
    if w.mode is SigningMode.CENTRAL:
        # The attacker's only route to a TC signature is the stolen comms key.
        try:
            signed_meta, sig = p.channel.request_signature(meta, ProviderData(), pattern)
        except (SmartTicketError, ValueError) as exc:
            refusal = type(exc).__name__
        else:
            raw = codec.encode_payload(signed_meta, ProviderData(), pattern, sig)
            w.tickets[a[1]] = _Ticket(a[1], raw, pattern)
            w.log(d, f"TC signed (issue_ts forced to {signed_meta.issue_ts}) sha256:{_digest(raw)}")
            return
        raw = rogue_issue(p.comms_key, meta, ProviderData(), pattern, w.nonces)
        w.tickets[a[1]] = _Ticket(a[1], raw, pattern, refusal)
        w.log(d, f"TC refused ({refusal}); forged with comms key sha256:{_digest(raw)}")
        return
    raw = rogue_issue(p.ticket_key, meta, ProviderData(), pattern, w.nonces)
    w.tickets[a[1]] = _Ticket(a[1], raw, pattern)
    w.log(d, f"unreported ticket {meta.printer_id}/{meta.ticket_id} claim={meta.issue_ts} sha256:{_digest(raw)}")


def scenario_run(script: Union[str, Scenario], seed: int = 0) -> ScenarioReport:
    """Run a script against fresh TC, printer and reader instances."""
    scenario = parse_scenario(script) if isinstance(script, str) else script
    w = _World(seed)
    for d in scenario.directives:
        _run_directive(w, d)
    return w.report


CANONICAL_THEFT_SCRIPT = """\
# Distributed signing: a printer is stolen and used to backdate a ticket.
seed 42
clock 1700000000
mode distributed
printer P1
reader R1
issue P1 T1 start=1700000000 end=1731536000
advance 3600
steal P1
advance 1800
revoke P1
rogue-issue P1 T2 claim=1699990000 start=1699990000 end=1731536000
sync R1
expect R1 T1 accept-exceptional
expect R1 T2 reject:RevokedNoTransaction
"""

CENTRAL_THEFT_SCRIPT = """\
# Central signing: printers hold only comms keys; the TC owns the timestamp.
seed 7
clock 1700000000
mode central
printer P1
reader R1
issue P1 T1 start=1700000000 end=1731536000
advance 3600
steal P1
revoke P1
rogue-issue P1 T2 claim=1699990000 start=1699990000 end=1731536000
sync R1
expect R1 T1 accept
expect-refused T2 RefusedRevoked
expect R1 T2 reject:BadSignature
"""
