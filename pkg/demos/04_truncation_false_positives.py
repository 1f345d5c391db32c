"""
How short can the exported pattern hash be?
===========================================

A thief holding a revoked printer key copies a legitimately reported
ticket's ids and timestamps, then searches for a new marker pattern whose
truncated hash matches the exported record.
"""

import math
import random

from smartticket.crypto import pattern_hash

rng = random.Random(0)
target_pattern = rng.randbytes(512)

print("bytes  expected tries  found after  P(success in 2^18)")
for truncation in (1, 2, 3):
    target = pattern_hash(target_pattern, truncation)
    budget = 2 ** 18
    found = None
    for attempt in range(1, budget + 1):
        if pattern_hash(rng.randbytes(512), truncation) == target:
            found = attempt
            break
    p = 1 - (1 - 2.0 ** (-8 * truncation)) ** budget
    print(f"{truncation:5d}  {2 ** (8 * truncation):14d}  {str(found):>11s}  {p:.4f}")

print("full 32-byte hash: P(success in 2^20) ~", f"{2 ** 20 / 2 ** 256:.1e}")
print("1 - e^-4 =", round(1 - math.exp(-4), 4))
