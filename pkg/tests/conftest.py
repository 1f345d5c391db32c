import random

import pytest

from smartticket.codec import MarkerPattern, ProviderData, TicketMetadata
from smartticket.crypto import SCHNORR_P256_SHA256, NonceSource, keypair_generate
from smartticket.devices import DirectChannel, Reader
from smartticket.trust import KeyRole, TrustedCenter

T0 = 1_700_000_000
YEAR = 365 * 24 * 3600


class Clock:
    def __init__(self, now=T0):
        self.now = now

    def __call__(self):
        return self.now


def random_pattern(rng: random.Random) -> MarkerPattern:
    return MarkerPattern(rng.randbytes(512))


def make_meta(printer_id=7, ticket_id=1, issue_ts=T0, start=T0, end=T0 + YEAR,
              tc_id=1, suite_id=SCHNORR_P256_SHA256):
    return TicketMetadata(suite_id=suite_id, tc_id=tc_id, printer_id=printer_id,
                          ticket_id=ticket_id, issue_ts=issue_ts,
                          validity_start=start, validity_end=end)


class Deployment:
    """A TC, one or more printers and a reader, wired with direct channels."""

    def __init__(self, mode, seed=1, printers=(7,)):
        self.nonces = NonceSource.deterministic(seed)
        self.rng = random.Random(seed)
        self.clock = Clock()
        self.tc = TrustedCenter.create(1, mode, now=T0 - 100, nonce_source=self.nonces)
        self.mode = self.tc.signing_mode
        self.comms = {}
        self.ticket_keys = {}
        self.channels = {}
        for pid in printers:
            self.add_printer(pid)
        self.reader = Reader.with_root(self.tc.root_public)

    def add_printer(self, pid):
        comms, pub = keypair_generate(SCHNORR_P256_SHA256, self.nonces)
        self.tc.register_printer(pid, pub, self.clock.now - 50, KeyRole.COMMS)
        self.comms[pid] = comms
        if self.mode.value == "distributed":
            key, kpub = keypair_generate(SCHNORR_P256_SHA256, self.nonces)
            self.tc.register_printer(pid, kpub, self.clock.now - 50, KeyRole.PRINTER)
            self.ticket_keys[pid] = key
        self.channels[pid] = DirectChannel(self.tc, pid, self.clock)

    def pattern(self):
        return random_pattern(self.rng)

    def issue(self, pid=7, ticket_id=1, start=None, end=None):
        from smartticket.devices import printer_issue
        start = self.clock.now if start is None else start
        end = start + YEAR if end is None else end
        meta = make_meta(pid, ticket_id, self.clock.now, start, end)
        pattern = self.pattern()
        raw = printer_issue(self.ticket_keys.get(pid), meta, ProviderData(), pattern,
                            self.mode, self.channels[pid], self.nonces)
        return raw, pattern

    def sync(self, truncation=32):
        now = self.clock.now
        self.reader.sync(self.tc.export_keylist(now), self.tc.export_transactions(truncation, now), now)


@pytest.fixture
def distributed():
    return Deployment("distributed")


@pytest.fixture
def central():
    return Deployment("central")


# -- acceptance summary --------------------------------------------------------------
# Tests tagged ``@pytest.mark.criterion(n, "title")`` are folded into one
# PASS/FAIL line per criterion at the end of the run.

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    mark = getattr(report, "criterion", None)
    if mark is None:
        return
    number, title = mark
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.when == "call" or report.failed:
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if not entry["ran"]:
            status = "SKIP"
        else:
            status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {entry['title']}")
