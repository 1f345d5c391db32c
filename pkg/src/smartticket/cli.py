"""``smartticket`` command line.

Exit codes: 0 success, 1 verification reject, 2 usage error, 3 I/O or
format error.  Machine output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from . import codec
from .codec import MarkerPattern, ProviderData, SignatureField, TicketMetadata
from .crypto import (
    NonceSource,
    PrivateKey,
    dump_private,
    dump_public,
    is_registered,
    keypair_generate,
    load_private,
    load_public,
    sign,
    verify,
)
from .devices import ReaderTrustStore, reader_sync, reader_validate
from .errors import DocumentRejected, MalformedDocument, ScriptError, SmartTicketError
from .simnet.scenario import scenario_run
from .trust import (
    TC_KEY_ID,
    KeyListDocument,
    KeyRecord,
    KeyRole,
    SigningMode,
    TransactionListDocument,
    TransactionRecord,
    build_keylist,
    build_txlist,
    dump_transaction_log,
    load_transaction_log,
    revocation_cutoffs,
    stamp_issue_time,
)

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_FORMAT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _suite(text: str) -> int:
    try:
        v = int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"suite must be two hex digits, got {text!r}") from None
    return v


def _nonces(args) -> Optional[NonceSource]:
    seed = getattr(args, "nonce_seed", None)
    return None if seed is None else NonceSource.deterministic(seed)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _write(path: str, data, out) -> None:
    if isinstance(data, str):
        Path(path).write_text(data, encoding="utf-8")
    else:
        Path(path).write_bytes(data)
    print(path, file=out)


def _now(args) -> int:
    return int(time.time()) if args.now is None else args.now


# -- subcommands ------------------------------------------------------------

def cmd_keygen(args, out) -> int:
    if not is_registered(args.suite):
        raise UsageError(f"unknown suite {args.suite:02x}")
    priv, pub = keypair_generate(args.suite, _nonces(args))
    _write(args.out + ".key", dump_private(priv), out)
    _write(args.out + ".pub", dump_public(pub), out)
    return EXIT_OK


def _parse_printer_entry(value: str, default_reg: int) -> KeyRecord:
    # ID:PUBFILE[:REG]
    parts = value.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"--printer expects ID:PUBFILE[:REGISTERED], got {value!r}")
    try:
        pid = int(parts[0], 0)
        reg = int(parts[2]) if len(parts) == 3 else default_reg
    except ValueError:
        raise UsageError(f"bad --printer value {value!r}") from None
    if pid == TC_KEY_ID:
        raise UsageError("printer id 0 is reserved for the TC")
    return KeyRecord(pid, KeyRole.PRINTER, load_public(_read_text(parts[1])), reg)


def cmd_keylist_build(args, out) -> int:
    root = load_private(_read_text(args.root))
    mode = SigningMode(args.mode)
    entries: List[KeyRecord] = []
    if mode is SigningMode.CENTRAL:
        if not args.tc_key or args.printer:
            raise UsageError("central mode needs --tc-key and no --printer entries")
        entries.append(KeyRecord(TC_KEY_ID, KeyRole.TC, load_public(_read_text(args.tc_key)), args.issued))
    else:
        if args.tc_key:
            raise UsageError("distributed mode lists printer keys only")
        entries = [_parse_printer_entry(p, args.issued) for p in args.printer]
    doc = build_keylist(args.tc_id, args.issued, mode, entries, root, _nonces(args))
    _write(args.out, doc.to_bytes(), out)
    return EXIT_OK


def _verify_doc(cls, args, out) -> int:
    root = load_public(_read_text(args.root))
    try:
        doc = cls.from_bytes(_read_bytes(args.input))
    except MalformedDocument as exc:
        print(f"REJECT malformed: {exc}", file=out)
        return EXIT_REJECT
    if verify(root, doc.body_bytes(), doc.signature):
        print("OK", file=out)
        return EXIT_OK
    print("REJECT signature", file=out)
    return EXIT_REJECT


def cmd_keylist_verify(args, out) -> int:
    return _verify_doc(KeyListDocument, args, out)


def cmd_txlist_verify(args, out) -> int:
    return _verify_doc(TransactionListDocument, args, out)


def cmd_revoke(args, out) -> int:
    root = load_private(_read_text(args.root))
    doc = KeyListDocument.from_bytes(_read_bytes(args.keylist))
    found = False
    entries = []
    for e in doc.entries:
        if e.key_id == args.key_id and e.revoked_at is None:
            e = KeyRecord(e.key_id, e.role, e.public_key, e.registered_at, args.at)
            found = True
        entries.append(e)
    if not found:
        print(f"no unrevoked entry with key id {args.key_id}", file=sys.stderr)
        return EXIT_FORMAT
    issued = args.issued if args.issued is not None else max(doc.issued_at, args.at)
    new = build_keylist(doc.tc_id, issued, doc.signing_mode, entries, root, _nonces(args))
    _write(args.out, new.to_bytes(), out)
    return EXIT_OK


def _pattern(args) -> MarkerPattern:
    if args.pattern and args.random_pattern:
        raise UsageError("--pattern and --random-pattern are exclusive")
    if args.pattern:
        return MarkerPattern(_read_bytes(args.pattern))
    if args.random_pattern:
        return MarkerPattern(random.Random(args.seed).randbytes(codec.PATTERN_SIZE))
    raise UsageError("give --pattern FILE or --random-pattern")


def _provider(args) -> ProviderData:
    return ProviderData(_read_bytes(args.provider)) if args.provider else ProviderData()


def _emit_ticket(args, raw: bytes, out) -> None:
    _write(args.out, codec.ticket_to_hex(raw) if args.hex else raw, out)


def _append_log(path: Optional[str], record: TransactionRecord) -> None:
    if path:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(dump_transaction_log([record]))


def _meta(args, key: PrivateKey, issue_ts: int) -> TicketMetadata:
    return TicketMetadata(suite_id=key.suite_id, tc_id=args.tc_id, printer_id=args.printer_id,
                          ticket_id=args.ticket_id, issue_ts=issue_ts,
                          validity_start=args.start, validity_end=args.end)


def _sign_ticket(key: PrivateKey, meta, provider, pattern, args) -> bytes:
    region = codec.assemble_signed_region(meta, provider, pattern)
    sig = SignatureField(sign(key, region, _nonces(args)))
    return codec.encode_payload(meta, provider, pattern, sig)


def cmd_issue(args, out) -> int:
    key = load_private(_read_text(args.key))
    now = _now(args)
    meta = _meta(args, key, now if args.issued is None else args.issued)
    pattern = _pattern(args)
    raw = _sign_ticket(key, meta, _provider(args), pattern, args)
    _emit_ticket(args, raw, out)
    _append_log(args.log, TransactionRecord.for_ticket(meta, pattern, reported_at=now))
    return EXIT_OK


def cmd_sign_central(args, out) -> int:
    key = load_private(_read_text(args.tc_key))
    now = _now(args)
    requested = now if args.issued is None else args.issued
    meta = _meta(args, key, stamp_issue_time(requested, now, args.skew, args.reject_skew))
    pattern = _pattern(args)
    raw = _sign_ticket(key, meta, _provider(args), pattern, args)
    _emit_ticket(args, raw, out)
    _append_log(args.log, TransactionRecord.for_ticket(meta, pattern, reported_at=now))
    return EXIT_OK


def cmd_report(args, out) -> int:
    ticket = codec.decode_payload(codec.read_ticket_bytes(_read_bytes(args.ticket)))
    record = TransactionRecord.for_ticket(ticket.metadata, ticket.pattern, reported_at=_now(args))
    _append_log(args.log, record)
    print(f"tx {record.printer_id}/{record.ticket_id}", file=out)
    return EXIT_OK


def cmd_txlist_export(args, out) -> int:
    root = load_private(_read_text(args.root))
    keylist = KeyListDocument.from_bytes(_read_bytes(args.keylist))
    records = load_transaction_log(_read_text(args.log)) if args.log else []
    doc = build_txlist(keylist.tc_id, args.issued, args.trunc, records,
                       revocation_cutoffs(keylist), root, _nonces(args))
    _write(args.out, doc.to_bytes(), out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    root = load_public(_read_text(args.root))
    store = ReaderTrustStore(root)
    keylist = _read_bytes(args.keylist)
    txlist = _read_bytes(args.txlist) if args.txlist else None
    now = _now(args)
    try:
        store = reader_sync(store, keylist, txlist, now)
    except DocumentRejected as exc:
        print(f"trust documents rejected: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    raw = codec.read_ticket_bytes(_read_bytes(args.ticket))
    if args.pattern:
        scanned = _read_bytes(args.pattern)
    elif len(raw) == codec.PAYLOAD_SIZE:
        scanned = raw[codec.PATTERN_OFFSET:codec.SIGNATURE_OFFSET]
    else:
        scanned = b""
    verdict = reader_validate(store, raw, scanned, now)
    print(str(verdict), file=out)
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_scenario_run(args, out) -> int:
    report = scenario_run(_read_text(args.script), seed=args.seed)
    out.write(report.render())
    return EXIT_OK if report.ok else EXIT_REJECT


# -- parser -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ticket_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tc-id", type=int, required=True)
    p.add_argument("--printer-id", type=int, required=True)
    p.add_argument("--ticket-id", type=int, required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--end", type=int, required=True)
    p.add_argument("--issued", type=int, help="claimed issue timestamp (default: now)")
    p.add_argument("--now", type=int)
    p.add_argument("--provider", help="32-byte provider data file")
    p.add_argument("--pattern", help="512-byte marker pattern file")
    p.add_argument("--random-pattern", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed for --random-pattern")
    p.add_argument("--nonce-seed", type=int, help="deterministic signing nonces")
    p.add_argument("--log", help="append the transaction to this log file")
    p.add_argument("--hex", action="store_true", help="write lowercase hex instead of raw bytes")
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smartticket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="generate a key pair")
    p.add_argument("--suite", type=_suite, default=1)
    p.add_argument("--role", choices=["root", "tc", "printer", "comms"], required=True)
    p.add_argument("--nonce-seed", type=int, help="deterministic key derivation seed")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.key and PREFIX.pub")
    p.set_defaults(func=cmd_keygen)

    kl = sub.add_parser("keylist", help="build or verify key lists")
    klsub = kl.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = klsub.add_parser("build")
    p.add_argument("--root", required=True, help="TC root private key")
    p.add_argument("--tc-id", type=int, required=True)
    p.add_argument("--mode", choices=["central", "distributed"], required=True)
    p.add_argument("--issued", type=int, required=True)
    p.add_argument("--tc-key", help="TC ticket-signing public key (central mode)")
    p.add_argument("--printer", action="append", default=[], metavar="ID:PUBFILE[:REGISTERED]")
    p.add_argument("--nonce-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keylist_build)
    p = klsub.add_parser("verify")
    p.add_argument("--root", required=True, help="TC root public key")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_keylist_verify)

    p = sub.add_parser("issue", help="sign a ticket locally (distributed mode)")
    p.add_argument("--key", required=True, help="printer ticket-signing private key")
    _ticket_flags(p)
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("sign-central", help="sign a ticket as the TC (central mode)")
    p.add_argument("--tc-key", required=True, help="TC ticket-signing private key")
    p.add_argument("--skew", type=int, default=60)
    p.add_argument("--reject-skew", action="store_true")
    _ticket_flags(p)
    p.set_defaults(func=cmd_sign_central)

    p = sub.add_parser("report", help="append a ticket's transaction to a log")
    p.add_argument("--ticket", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--now", type=int)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("revoke", help="mark a key revoked in a key list and re-sign it")
    p.add_argument("--keylist", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--key-id", type=int, required=True)
    p.add_argument("--at", type=int, required=True)
    p.add_argument("--issued", type=int)
    p.add_argument("--nonce-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_revoke)

    tx = sub.add_parser("txlist", help="export or verify transaction lists")
    txsub = tx.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = txsub.add_parser("export")
    p.add_argument("--root", required=True)
    p.add_argument("--keylist", required=True)
    p.add_argument("--log")
    p.add_argument("--trunc", type=int, default=32)
    p.add_argument("--issued", type=int, required=True)
    p.add_argument("--nonce-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_txlist_export)
    p = txsub.add_parser("verify")
    p.add_argument("--root", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_txlist_verify)

    p = sub.add_parser("verify", help="validate a ticket like an offline reader")
    p.add_argument("--ticket", required=True)
    p.add_argument("--keylist", required=True)
    p.add_argument("--root", required=True, help="TC root public key")
    p.add_argument("--txlist")
    p.add_argument("--pattern", help="scanned pattern (default: the embedded one)")
    p.add_argument("--now", type=int)
    p.set_defaults(func=cmd_verify)

    sc = sub.add_parser("scenario", help="run simulation scripts")
    scsub = sc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = scsub.add_parser("run")
    p.add_argument("script")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_scenario_run)
    return parser


def run(argv: Sequence[str], out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(list(argv))
        return args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (OSError, SmartTicketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
