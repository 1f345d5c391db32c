"""
Anatomy of a 704-byte ticket
============================

Build one ticket by hand and print where every field lands.
"""

from smartticket import codec
from smartticket.codec import MarkerPattern, ProviderData, SignatureField, TicketMetadata
from smartticket.crypto import SCHNORR_P256_SHA256, NonceSource, keypair_generate, sign

# a printer key and some metadata
key, pub = keypair_generate(SCHNORR_P256_SHA256, NonceSource.deterministic(1))
meta = TicketMetadata(suite_id=SCHNORR_P256_SHA256, tc_id=1, printer_id=7, ticket_id=42,
                      issue_ts=1_700_000_000, validity_start=1_700_000_000,
                      validity_end=1_731_536_000)
provider = ProviderData(b"ACME TRANSIT".ljust(32, b"\0"))
pattern = MarkerPattern(bytes(i % 256 for i in range(512)))

# sign the first 572 bytes, then append the signature field
region = codec.assemble_signed_region(meta, provider, pattern)
sig = sign(key, region, NonceSource.deterministic(2))
raw = codec.encode_payload(meta, provider, pattern, SignatureField(sig))

fields = [
    ("metadata", 0, codec.METADATA_SIZE),
    ("provider", codec.PROVIDER_OFFSET, codec.PROVIDER_SIZE),
    ("pattern", codec.PATTERN_OFFSET, codec.PATTERN_SIZE),
    ("signature", codec.SIGNATURE_OFFSET, codec.SIGNATURE_FIELD_SIZE),
]
for name, off, size in fields:
    print(f"{name:10s} [{off:3d}, {off + size:3d})  {raw[off:off + min(size, 12)].hex()}...")
print("total", len(raw), "bytes; signature length byte =", raw[codec.SIGNATURE_OFFSET])

# decoding gives back the same components
assert codec.decode_payload(raw).metadata == meta

# an RSA-2048 signature would not fit
try:
    codec.encode_payload(meta, provider, pattern, bytes(256))
except ValueError as exc:
    print("256-byte signature:", exc)
