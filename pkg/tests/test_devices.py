import pytest

from conftest import T0, YEAR, Deployment, make_meta
from smartticket import codec
from smartticket.codec import ProviderData
from smartticket.crypto import SCHNORR_P256_SHA256, NonceSource, keypair_generate, verify
from smartticket.devices import (
    Outcome,
    ReaderTrustStore,
    Reason,
    ValidationVerdict,
    reader_sync,
    reader_validate,
    rogue_issue,
)
from smartticket.errors import ChannelError, DocumentRejected, RefusedRevoked
from smartticket.trust import build_keylist


def test_accept_fresh_ticket(distributed):
    raw, pattern = distributed.issue()
    distributed.sync()
    v = distributed.reader.validate(raw, pattern, T0 + 10)
    assert v.outcome is Outcome.ACCEPT and v.reason is None
    assert str(v) == "ACCEPT"


def test_accept_exceptional_for_reported_ticket(distributed):
    raw, pattern = distributed.issue()
    distributed.clock.now += 10
    distributed.tc.revoke(7, distributed.clock.now)
    distributed.sync()
    v = distributed.reader.validate(raw, pattern, distributed.clock.now)
    assert v.outcome is Outcome.ACCEPT_EXCEPTIONAL
    assert v.matched_transaction.key == (7, 1)
    assert str(v) == "ACCEPT-EXCEPTIONAL tx=7/1"


def test_revoked_signer_without_record(distributed):
    distributed.clock.now += 10
    distributed.tc.revoke(7, distributed.clock.now)
    meta = make_meta(ticket_id=99, issue_ts=T0 - 1000)
    pattern = distributed.pattern()
    raw = rogue_issue(distributed.ticket_keys[7], meta, ProviderData(), pattern)
    distributed.sync()
    v = distributed.reader.validate(raw, pattern, distributed.clock.now)
    assert v.outcome is Outcome.REJECT and v.reason is Reason.REVOKED_NO_TRANSACTION
    assert str(v) == "REJECT RevokedNoTransaction"


@pytest.mark.parametrize("field,value", [("issue_ts", T0 - 1), ("validity_end", T0 + 2 * YEAR)])
def test_copied_ids_with_changed_fields_rejected(distributed, field, value):
    raw, pattern = distributed.issue()
    distributed.clock.now += 10
    distributed.tc.revoke(7, distributed.clock.now)
    distributed.sync()
    meta = codec.decode_payload(raw).metadata.replace(**{field: value})
    forged = rogue_issue(distributed.ticket_keys[7], meta, ProviderData(), pattern)
    v = distributed.reader.validate(forged, pattern, distributed.clock.now)
    assert v.reason is Reason.REVOKED_NO_TRANSACTION


def test_zero_signature_rejected(distributed):
    raw, pattern = distributed.issue()
    distributed.sync()
    forged = raw[:573] + bytes(64) + raw[637:]
    assert distributed.reader.validate(forged, pattern, T0).reason is Reason.BAD_SIGNATURE


def test_pattern_mismatch(distributed):
    raw, _ = distributed.issue()
    distributed.sync()
    v = distributed.reader.validate(raw, distributed.pattern(), T0)
    assert v.reason is Reason.PATTERN_MISMATCH


def test_unknown_signer(distributed):
    key, _ = keypair_generate(SCHNORR_P256_SHA256, NonceSource.deterministic(77))
    pattern = distributed.pattern()
    raw = rogue_issue(key, make_meta(printer_id=55), ProviderData(), pattern)
    distributed.sync()
    assert distributed.reader.validate(raw, pattern, T0).reason is Reason.UNKNOWN_SIGNER


def test_unsynced_reader_knows_no_signer(distributed):
    raw, pattern = distributed.issue()
    assert distributed.reader.validate(raw, pattern, T0).reason is Reason.UNKNOWN_SIGNER


def test_invalid_structure(distributed):
    raw, pattern = distributed.issue()
    distributed.sync()
    assert distributed.reader.validate(raw[:703], pattern, T0).reason is Reason.INVALID_STRUCTURE


def test_step_ordering_structure_before_pattern(distributed):
    raw, _ = distributed.issue()
    distributed.sync()
    v = distributed.reader.validate(raw[:703], distributed.pattern(), T0)
    assert v.reason is Reason.INVALID_STRUCTURE


def test_step_ordering_signature_before_validity(distributed):
    raw, pattern = distributed.issue()
    distributed.sync()
    forged = raw[:573] + bytes(64) + raw[637:]
    assert distributed.reader.validate(forged, pattern, T0 + 2 * YEAR).reason is Reason.BAD_SIGNATURE
    assert distributed.reader.validate(raw, pattern, T0 + 2 * YEAR).reason is Reason.EXPIRED


def test_validity_boundaries(distributed):
    raw, pattern = distributed.issue(start=T0 + 100, end=T0 + 200)
    distributed.sync()
    r = distributed.reader
    assert r.validate(raw, pattern, T0 + 99).reason is Reason.NOT_YET_VALID
    assert r.validate(raw, pattern, T0 + 100).outcome is Outcome.ACCEPT
    assert r.validate(raw, pattern, T0 + 200).outcome is Outcome.ACCEPT
    assert r.validate(raw, pattern, T0 + 201).reason is Reason.EXPIRED


def test_verdict_invariants():
    with pytest.raises(ValueError):
        ValidationVerdict(Outcome.REJECT)
    with pytest.raises(ValueError):
        ValidationVerdict(Outcome.ACCEPT, Reason.EXPIRED)
    with pytest.raises(ValueError):
        ValidationVerdict(Outcome.ACCEPT_EXCEPTIONAL)


# -- sync ----------------------------------------------------------------------------

def test_sync_is_atomic_on_bad_txlist(distributed):
    distributed.sync()
    before = distributed.reader.store
    kl = distributed.tc.export_keylist(T0 + 5).to_bytes()
    tx = bytearray(distributed.tc.export_transactions(32, T0 + 5).to_bytes())
    tx[-5] ^= 0x01
    with pytest.raises(DocumentRejected):
        distributed.reader.sync(kl, bytes(tx), T0 + 5)
    assert distributed.reader.store is before
    assert before.last_sync == T0


def test_sync_rejects_keylist_signed_by_other_key(distributed):
    other, _ = keypair_generate(SCHNORR_P256_SHA256, NonceSource.deterministic(5))
    doc = distributed.tc.export_keylist(T0)
    forged = build_keylist(doc.tc_id, doc.issued_at, doc.signing_mode, doc.entries, other,
                           NonceSource.deterministic(6))
    store = ReaderTrustStore(distributed.tc.root_public)
    with pytest.raises(DocumentRejected):
        reader_sync(store, forged, None, T0)


def test_sync_requires_keylist(distributed):
    with pytest.raises(DocumentRejected):
        reader_sync(ReaderTrustStore(distributed.tc.root_public), None, None, T0)


def test_store_is_immutable(distributed):
    distributed.sync()
    with pytest.raises(TypeError):
        distributed.reader.store.transactions[(1, 1)] = None


def test_validate_is_pure(distributed):
    raw, pattern = distributed.issue()
    distributed.sync()
    store = distributed.reader.store
    first = reader_validate(store, raw, pattern, T0)
    assert reader_validate(store, raw, pattern, T0) == first
    assert distributed.reader.store is store


# -- printers --------------------------------------------------------------------------

def test_distributed_issue_signed_by_printer_key(distributed):
    raw, _ = distributed.issue()
    pub = distributed.ticket_keys[7].public_key
    assert verify(pub, codec.signed_region(raw), codec.decode_payload(raw).signature.sig_bytes)
    assert (7, 1) in distributed.tc.transactions


def test_central_issue_signed_by_tc_key(central):
    raw, pattern = central.issue()
    ticket = codec.decode_payload(raw)
    assert verify(central.tc.ticket_public, codec.signed_region(raw), ticket.signature.sig_bytes)
    central.sync()
    assert central.reader.validate(raw, pattern, T0).outcome is Outcome.ACCEPT


def test_offline_printer_emits_nothing(distributed):
    distributed.channels[7].online = False
    with pytest.raises(ChannelError):
        distributed.issue()
    assert distributed.tc.transactions == {}


def test_offline_central_printer_emits_nothing(central):
    central.channels[7].online = False
    with pytest.raises(ChannelError):
        central.issue()


def test_central_refuses_revoked_printer(central):
    central.tc.revoke(7, T0)
    with pytest.raises(RefusedRevoked):
        central.issue()


def test_central_rogue_with_comms_key_rejected(central):
    """The only key a central printer holds cannot mint tickets."""
    raw_ok, pattern_ok = central.issue()
    pattern = central.pattern()
    forged = rogue_issue(central.comms[7], make_meta(ticket_id=2), ProviderData(), pattern)
    central.sync()
    assert central.reader.validate(forged, pattern, T0).reason is Reason.BAD_SIGNATURE
    assert central.reader.validate(raw_ok, pattern_ok, T0).outcome is Outcome.ACCEPT


def test_central_pre_revocation_ticket_survives(central):
    raw, pattern = central.issue()
    central.clock.now += 10
    central.tc.revoke(7, central.clock.now)
    central.sync()
    assert central.reader.store.transactions == {}
    assert central.reader.validate(raw, pattern, central.clock.now).outcome is Outcome.ACCEPT


def test_truncation_monotonicity():
    """Shorter truncation never turns an accepted legitimate ticket into a reject."""
    outcomes = {}
    for n in (1, 2, 4, 8, 16, 32):
        d = Deployment("distributed", seed=11)
        raw, pattern = d.issue()
        d.clock.now += 5
        d.tc.revoke(7, d.clock.now)
        d.sync(n)
        outcomes[n] = d.reader.validate(raw, pattern, d.clock.now).outcome
    assert set(outcomes.values()) == {Outcome.ACCEPT_EXCEPTIONAL}


def test_deterministic_with_seeded_nonces():
    runs = []
    for _ in range(2):
        d = Deployment("distributed", seed=9)
        runs.append(d.issue()[0])
    assert runs[0] == runs[1]


def test_reader_tries_reregistered_key():
    d = Deployment("distributed")
    old_raw, old_pattern = d.issue(ticket_id=1)
    d.clock.now += 10
    d.tc.revoke(7, d.clock.now)
    d.clock.now += 10
    key, pub = keypair_generate(SCHNORR_P256_SHA256, d.nonces)
    from smartticket.trust import KeyRole
    d.tc.register_printer(7, pub, d.clock.now, KeyRole.PRINTER)
    comms, cpub = keypair_generate(SCHNORR_P256_SHA256, d.nonces)
    d.tc.register_printer(7, cpub, d.clock.now, KeyRole.COMMS)
    d.ticket_keys[7] = key
    new_raw, new_pattern = d.issue(ticket_id=2)
    d.sync()
    assert d.reader.validate(new_raw, new_pattern, d.clock.now).outcome is Outcome.ACCEPT
    assert d.reader.validate(old_raw, old_pattern, d.clock.now).outcome is Outcome.ACCEPT_EXCEPTIONAL
