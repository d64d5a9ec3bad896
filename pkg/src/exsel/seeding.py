"""Deterministic seed derivation for independent random streams.

One global seed fans out into per-stage (and per-substage) streams by
hashing the seed together with a salt, so stages stay reproducible in
isolation and adding a stage never shifts another stage's stream.
"""

import hashlib
import random

_SEED_BITS = 64


def derive_seed(*parts: object) -> int:
    """Map an arbitrary tuple of parts (seed, salts, indices) to a 64-bit seed."""
    token = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (1 << _SEED_BITS)


def derive_rng(*parts: object) -> random.Random:
    """A fresh `random.Random` seeded from `derive_seed(*parts)`."""
    return random.Random(derive_seed(*parts))
