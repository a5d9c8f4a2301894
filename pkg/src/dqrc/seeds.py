"""Stable seed derivation.

Every random stream in the package is seeded through ``derive_seed`` from a
master seed plus role labels/indices, so placement, thread count, and call
order can never change results.  blake2b is used rather than ``hash()``
because the latter is salted per process.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: int | str) -> int:
    """Collapse (seed, label, index, ...) into a stable 64-bit seed."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(repr(part).encode())
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "little")
