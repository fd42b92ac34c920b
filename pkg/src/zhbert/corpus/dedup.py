"""Near-duplicate removal: banded LSH candidate generation, then a
signature-similarity confirmation against the threshold. Documents stream
in order and the first occurrence of any content is always the one kept."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from ..errors import ConfigError
from .minhash import MinHashSignature, estimated_jaccard, minhash_signature, permutation_params

log = logging.getLogger(__name__)

NEAR_MISS_MARGIN = 0.1


@dataclass(frozen=True)
class DropRecord:
    index: int
    kept_index: int
    estimated_similarity: float


@dataclass
class DedupResult:
    kept_indices: list[int]
    kept_docs: list[str]
    drops: list[DropRecord]


def dedup(
    docs: Iterable[str],
    threshold: float = 0.8,
    k: int = 128,
    shingle_size: int = 5,
    *,
    bands: int = 32,
    seed: int = 0,
) -> DedupResult:
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold must be in (0, 1], got {threshold}")
    if k % bands != 0:
        raise ConfigError(f"k={k} must be divisible by bands={bands}")
    rows = k // bands
    params = permutation_params(k, seed)

    buckets: list[dict[tuple[int, ...], list[int]]] = [{} for _ in range(bands)]
    signatures: dict[int, MinHashSignature] = {}
    result = DedupResult(kept_indices=[], kept_docs=[], drops=[])

    for index, doc in enumerate(docs):
        sig = minhash_signature(doc, k, shingle_size, seed, params=params)
        keys = [tuple(sig.values[band * rows : (band + 1) * rows]) for band in range(bands)]
        candidates: set[int] = set()
        for band, key in enumerate(keys):
            candidates.update(buckets[band].get(key, ()))

        dropped = False
        for cand in sorted(candidates):
            sim = estimated_jaccard(sig, signatures[cand])
            if sim >= threshold:
                result.drops.append(
                    DropRecord(index=index, kept_index=cand, estimated_similarity=sim)
                )
                dropped = True
                break
            if sim >= threshold - NEAR_MISS_MARGIN:
                log.debug(
                    "doc %d near-miss vs kept %d (est %.3f < threshold %.3f)",
                    index, cand, sim, threshold,
                )
        if dropped:
            continue

        signatures[index] = sig
        result.kept_indices.append(index)
        result.kept_docs.append(doc)
        for band, key in enumerate(keys):
            buckets[band].setdefault(key, []).append(index)

    return result
