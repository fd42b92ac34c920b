"""MinHash signatures over character shingles.

Shingle hashing uses blake2b (stable across processes, unlike Python's
salted ``hash``). Each of the k permutations is a salted bijective mixer
over the 64-bit space: x -> splitmix64_fin(x XOR salt_i), which vectorizes
in numpy and behaves like an independent random permutation per salt. The
fraction of matching signature components estimates shingle-set Jaccard
similarity.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError
from ..seeding import derive_seed

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class MinHashSignature:
    values: tuple[int, ...]
    shingle_size: int

    def __len__(self) -> int:
        return len(self.values)


def shingles(doc: str, shingle_size: int) -> set[str]:
    """Character shingles; a doc shorter than the shingle is one shingle."""
    if shingle_size < 1:
        raise ConfigError("shingle_size must be >= 1")
    if len(doc) < shingle_size:
        return {doc}
    return {doc[i : i + shingle_size] for i in range(len(doc) - shingle_size + 1)}


def _shingle_hash(s: str) -> int:
    return int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "little")


def permutation_params(k: int, seed: int) -> np.ndarray:
    """One 64-bit salt per permutation."""
    rng = np.random.default_rng(derive_seed(seed, "minhash-salts"))
    return rng.integers(0, np.iinfo(np.uint64).max, size=k, dtype=np.uint64)


def _mix(values: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps, which is the point.
    v = values.copy()
    v ^= v >> np.uint64(30)
    v *= _MIX1
    v ^= v >> np.uint64(27)
    v *= _MIX2
    v ^= v >> np.uint64(31)
    return v


def minhash_signature(
    doc: str,
    k: int = 128,
    shingle_size: int = 5,
    seed: int = 0,
    *,
    params: np.ndarray | None = None,
) -> MinHashSignature:
    """k-component signature of the doc's shingle set. Deterministic for a
    given (doc, k, shingle_size, seed)."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    if not doc:
        raise InputError("cannot sign an empty document")
    salts = params if params is not None else permutation_params(k, seed)
    xs = np.array(
        sorted(_shingle_hash(s) for s in shingles(doc, shingle_size)), dtype=np.uint64
    )
    # (k, n_shingles): per-salt mixed values; min over shingles per salt.
    mixed = _mix(xs[None, :] ^ salts[:, None])
    return MinHashSignature(
        values=tuple(int(v) for v in mixed.min(axis=1)), shingle_size=shingle_size
    )


def estimated_jaccard(sig_a: MinHashSignature, sig_b: MinHashSignature) -> float:
    if len(sig_a) != len(sig_b) or sig_a.shingle_size != sig_b.shingle_size:
        raise InputError("signatures are not comparable (k or shingle size differ)")
    matches = sum(1 for x, y in zip(sig_a.values, sig_b.values) if x == y)
    return matches / len(sig_a)
