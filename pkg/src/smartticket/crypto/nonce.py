"""Sources of secret scalars (signing nonces and private keys)."""

from __future__ import annotations

import hashlib
import secrets
from typing import Iterable, Optional

from ..errors import NonceFailure


class NonceSource:
    """Draws scalars in ``[1, q-1]``.

    Three modes:

    * ``NonceSource.system()``: ``secrets`` randomness, the production default.
    * ``NonceSource.deterministic(seed)``: each draw is
      ``SHA-256(seed || secret || digest || counter)`` mapped into range,
      with ``counter`` incremented on every draw.  Distinct digests under
      one secret never share a nonce; equal seeds replay identically.
    * ``NonceSource.fixed([k1, k2, ...])``: test hook returning the given
      values in order.

    A deterministic or fixed source carries mutable state and must not be
    shared between concurrent signers.
    """

    def __init__(self, mode: str, seed: int = 0,
                 values: Optional[Iterable[int]] = None,
                 max_draws: Optional[int] = None):
        if mode not in ("system", "deterministic", "fixed"):
            raise ValueError(f"unknown nonce mode {mode!r}")
        self.mode = mode
        self.seed = seed
        self.max_draws = max_draws
        self.counter = 0
        self._values = list(values) if values is not None else []

    @classmethod
    def system(cls) -> "NonceSource":
        return cls("system")

    @classmethod
    def deterministic(cls, seed: int, max_draws: Optional[int] = None) -> "NonceSource":
        return cls("deterministic", seed=seed, max_draws=max_draws)

    @classmethod
    def fixed(cls, values: Iterable[int]) -> "NonceSource":
        return cls("fixed", values=values)

    def draw(self, q: int, secret: int, digest: bytes) -> int:
        """Return a scalar in ``[1, q-1]`` bound to ``secret`` and ``digest``."""
        if self.mode == "system":
            return secrets.randbelow(q - 1) + 1
        if self.max_draws is not None and self.counter >= self.max_draws:
            raise NonceFailure("deterministic nonce source exhausted")
        if self.mode == "fixed":
            if self.counter >= len(self._values):
                raise NonceFailure("fixed nonce sequence exhausted")
            k = self._values[self.counter]
            self.counter += 1
            if not 1 <= k < q:
                raise NonceFailure(f"fixed nonce {k} out of range")
            return k
        nbytes = (q.bit_length() + 7) // 8
        h = hashlib.sha256(
            self.seed.to_bytes(8, "big")
            + secret.to_bytes(nbytes, "big")
            + digest
            + self.counter.to_bytes(8, "big")
        ).digest()
        self.counter += 1
        return 1 + int.from_bytes(h, "big") % (q - 1)
