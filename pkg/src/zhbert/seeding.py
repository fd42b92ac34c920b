"""Deterministic seed derivation.

All randomness flows from one root seed. Consumers derive sub-seeds from
(root, purpose labels) so no two purposes ever share an RNG stream and
reruns with the same root seed reproduce every draw.
"""

import hashlib


def derive_seed(root: int, *labels) -> int:
    """Return a 64-bit sub-seed for (root, labels). Stable across runs."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root)).encode("utf-8"))
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")
