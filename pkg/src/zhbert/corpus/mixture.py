"""Ratio-weighted batch sampling over named sources.

Two flavors share the same budgeting rule (each source contributes its
ratio of the batch token budget, overshooting by at most one document):

* ``mixture_sampler`` — stateless, with-replacement; a pure function of
  (seed, step), used by the dry-run CLI and share-convergence checks.
* ``MixtureStream`` — without-replacement epochs with a seeded reshuffle
  on exhaustion, used by the training loop. Consumption order alone
  determines batches, so sequential runs are bit-reproducible.
"""

from __future__ import annotations

import random
from typing import Callable, Sequence

from ..errors import ConfigError
from ..seeding import derive_seed
from .manifest import CorpusManifest


def _check_sources(manifest: CorpusManifest, docs_by_source: dict[str, Sequence]) -> None:
    for src in manifest.sources:
        if src.name not in docs_by_source:
            raise ConfigError(f"source {src.name!r} has no documents loaded")
        if len(docs_by_source[src.name]) == 0:
            raise ConfigError(f"source {src.name!r} is empty")


def mixture_sampler(
    manifest: CorpusManifest,
    docs_by_source: dict[str, Sequence],
    batch_tokens: int,
    seed: int,
    step: int,
    *,
    length_fn: Callable = len,
) -> list[tuple[str, object]]:
    """One batch of (source_name, document) pairs, token share per source
    equal to its manifest ratio in expectation."""
    _check_sources(manifest, docs_by_source)
    rng = random.Random(derive_seed(seed, "mixture", step))
    batch: list[tuple[str, object]] = []
    for src in manifest.sources:
        budget = src.ratio * batch_tokens
        if budget <= 0:
            continue
        docs = docs_by_source[src.name]
        taken = 0
        while taken < budget:
            doc = docs[rng.randrange(len(docs))]
            batch.append((src.name, doc))
            taken += length_fn(doc)
    rng.shuffle(batch)
    return batch


class MixtureStream:
    """Epoch-based mixture stream for training.

    Per source, documents are visited in a seeded permutation; exhausting
    a source starts a new epoch with a fresh permutation derived from
    (seed, source, epoch). ``push_back`` returns unused documents to the
    front so packing leftovers are never lost.
    """

    def __init__(
        self,
        manifest: CorpusManifest,
        docs_by_source: dict[str, Sequence],
        seed: int,
        *,
        length_fn: Callable = len,
    ):
        _check_sources(manifest, docs_by_source)
        self.manifest = manifest
        self.docs = docs_by_source
        self.seed = seed
        self.length_fn = length_fn
        self._epoch = {s.name: 0 for s in manifest.sources}
        self._order: dict[str, list[int]] = {}
        self._cursor = {s.name: 0 for s in manifest.sources}
        self._pushed: dict[str, list] = {s.name: [] for s in manifest.sources}
        for s in manifest.sources:
            self._reshuffle(s.name)

    def _reshuffle(self, name: str) -> None:
        order = list(range(len(self.docs[name])))
        random.Random(derive_seed(self.seed, "epoch", name, self._epoch[name])).shuffle(order)
        self._order[name] = order
        self._cursor[name] = 0

    def _next_doc(self, name: str):
        if self._pushed[name]:
            return self._pushed[name].pop()
        if self._cursor[name] >= len(self._order[name]):
            self._epoch[name] += 1
            self._reshuffle(name)
        doc = self.docs[name][self._order[name][self._cursor[name]]]
        self._cursor[name] += 1
        return doc

    def push_back(self, name: str, doc) -> None:
        self._pushed[name].append(doc)

    def batch(self, step: int, batch_tokens: int) -> list[tuple[str, object]]:
        rng = random.Random(derive_seed(self.seed, "mixture", step))
        batch: list[tuple[str, object]] = []
        for src in self.manifest.sources:
            budget = src.ratio * batch_tokens
            if budget <= 0:
                continue
            taken = 0
            while taken < budget:
                doc = self._next_doc(src.name)
                batch.append((src.name, doc))
                taken += self.length_fn(doc)
        rng.shuffle(batch)
        return batch
