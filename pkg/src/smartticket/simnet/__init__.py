"""Deterministic in-process harness: clock, secure channel model, scenarios."""

from .channel import (
    BodyType,
    Envelope,
    Receiver,
    Sender,
    channel_receive,
    channel_send,
)
from .network import EnvelopeChannel, Link, SimClock, TcServer, TC_SENDER_ID
from .scenario import (
    CANONICAL_THEFT_SCRIPT,
    CENTRAL_THEFT_SCRIPT,
    Scenario,
    ScenarioReport,
    parse_scenario,
    scenario_run,
)

__all__ = [
    "BodyType", "Envelope", "Receiver", "Sender", "channel_send", "channel_receive",
    "EnvelopeChannel", "Link", "SimClock", "TcServer", "TC_SENDER_ID",
    "CANONICAL_THEFT_SCRIPT", "CENTRAL_THEFT_SCRIPT", "Scenario", "ScenarioReport",
    "parse_scenario", "scenario_run",
]
