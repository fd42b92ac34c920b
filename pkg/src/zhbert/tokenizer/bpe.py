"""Byte-pair encoding over position-marked, word-internal symbols.

Each word from the segmenter becomes a symbol sequence where the first
character is stored bare and every later character carries the
continuation marker (default ``##``). Merges join adjacent symbols inside
one word and never cross word boundaries, so a merged symbol keeps the
markedness of its left operand. Training is deterministic: pair counts
are tallied in corpus order and ties are broken by lexicographic order of
the pair.

A word-initial token string never starts with the marker (merges that
would produce one are skipped), so "starts with the marker" is an
unambiguous continuation test at decode time.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import ConfigError, InputError
from ..seeding import derive_seed
from .segment import RunSegmenter

log = logging.getLogger(__name__)

MARKER = "##"
PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, SEP, MASK)

SIZE_POLICIES = ("exact", "round_to_64")


def resolve_target_size(target: int, size_policy: str) -> int:
    """Vocabulary size actually aimed for under the given policy.

    ``exact`` keeps the target; ``round_to_64`` rounds it up to the next
    multiple of 64 (a size already on the grid is kept).
    """
    if size_policy == "exact":
        return int(target)
    if size_policy == "round_to_64":
        return ((int(target) + 63) // 64) * 64
    raise ConfigError(f"unknown size_policy {size_policy!r}; expected one of {SIZE_POLICIES}")


@dataclass
class TokenizerModel:
    """Learned vocabulary and merges, plus everything encode/decode needs.

    Token ids are dense list indices: id == position in ``vocab``.
    """

    vocab: list[str]
    merges: list[tuple[str, str]]
    continuation_prefix: str = MARKER
    specials: tuple[str, ...] = SPECIALS
    segmenter: RunSegmenter = field(default_factory=RunSegmenter)
    size_policy: str = "exact"
    target_size: int = 0

    def __post_init__(self):
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self.token_to_id) != len(self.vocab):
            raise ConfigError("vocab contains duplicate tokens")
        self.merge_ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        self._special_set = set(self.specials)
        for sp in self.specials:
            if sp.startswith(self.continuation_prefix):
                raise ConfigError(f"special token {sp!r} carries the continuation prefix")
            if sp not in self.token_to_id:
                raise ConfigError(f"special token {sp!r} missing from vocab")
        for a, b in self.merges:
            if _merge_output(a, b, self.continuation_prefix) not in self.token_to_id:
                raise ConfigError(f"merge ({a!r}, {b!r}) output missing from vocab")
        self._word_cache: dict[str, tuple[int, ...]] = {}
        self.unk_count = 0

    # -- id helpers -------------------------------------------------------

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset(self.token_to_id[s] for s in self.specials)

    def is_special_id(self, token_id: int) -> bool:
        return self.vocab[token_id] in self._special_set

    def is_continuation_id(self, token_id: int) -> bool:
        tok = self.vocab[token_id]
        return tok not in self._special_set and tok.startswith(self.continuation_prefix)

    # -- encode / decode --------------------------------------------------

    def encode(self, text: str) -> list[int]:
        """Token ids for ``text``; characters outside the alphabet map to unk."""
        ids: list[int] = []
        for word in self.segmenter.segment(text):
            ids.extend(self._encode_word(word))
        return ids

    def _encode_word(self, word: str) -> tuple[int, ...]:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        symbols = word_symbols(word, self.continuation_prefix)
        symbols = self._apply_merges(symbols)
        ids = []
        for sym in symbols:
            tid = self.token_to_id.get(sym)
            if tid is None:
                tid = self.unk_id
                self.unk_count += 1
                log.debug("symbol %r not in vocab; emitting unk", sym)
            ids.append(tid)
        out = tuple(ids)
        self._word_cache[word] = out
        return out

    def _apply_merges(self, symbols: list[str]) -> list[str]:
        # Lowest-rank applicable merge first; all its occurrences are
        # collapsed left to right before looking for the next merge.
        while len(symbols) > 1:
            best_rank = None
            best_pair = None
            for a, b in zip(symbols, symbols[1:]):
                rank = self.merge_ranks.get((a, b))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_pair = rank, (a, b)
            if best_pair is None:
                break
            merged = _merge_output(best_pair[0], best_pair[1], self.continuation_prefix)
            out: list[str] = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best_pair:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            symbols = out
        return symbols

    def decode(self, ids: Sequence[int]) -> str:
        parts: list[str] = []
        for tid in ids:
            tok = self.vocab[tid]
            if tok in self._special_set:
                parts.append(tok)
            elif tok.startswith(self.continuation_prefix):
                parts.append(tok[len(self.continuation_prefix) :])
            else:
                parts.append(tok)
        return "".join(parts)

    def with_merge_prefix(self, n_merges: int) -> "TokenizerModel":
        """Model restricted to the first ``n_merges`` merges (same alphabet)."""
        keep = self.merges[:n_merges]
        # Merge outputs can only collide with earlier merge outputs (never
        # with specials or the single-char alphabet), so the base vocab ends
        # where the unique merge outputs begin.
        n_outputs = len(
            {_merge_output(a, b, self.continuation_prefix) for a, b in self.merges}
        )
        alphabet_end = len(self.vocab) - n_outputs
        vocab = list(self.vocab[:alphabet_end])
        seen = set(vocab)
        for a, b in keep:
            out = _merge_output(a, b, self.continuation_prefix)
            if out not in seen:
                vocab.append(out)
                seen.add(out)
        return TokenizerModel(
            vocab=vocab,
            merges=list(keep),
            continuation_prefix=self.continuation_prefix,
            specials=self.specials,
            segmenter=self.segmenter,
            size_policy=self.size_policy,
            target_size=self.target_size,
        )


def word_symbols(word: str, marker: str = MARKER) -> list[str]:
    """Initial symbol sequence for a word: bare first char, marked rest."""
    return [word[0]] + [marker + ch for ch in word[1:]]


def _merge_output(a: str, b: str, marker: str) -> str:
    # b is always a continuation symbol; the result keeps a's markedness.
    return a + b[len(marker) :]


def train_bpe(
    corpus: Iterable[str],
    target_size: int,
    size_policy: str = "exact",
    *,
    segmenter: RunSegmenter | None = None,
    specials: tuple[str, ...] = SPECIALS,
    marker: str = MARKER,
    sample_fraction: float = 1.0,
    sample_seed: int = 0,
) -> TokenizerModel:
    """Learn a BPE vocabulary of (up to) the policy-resolved target size.

    Deterministic given corpus order: the most frequent adjacent pair wins
    each round and equal counts are broken by lexicographic order of the
    pair. Stops early if no mergeable pair remains (logged).

    ``sample_fraction`` < 1 trains on a seeded document subsample.
    """
    segmenter = segmenter or RunSegmenter()
    docs = list(corpus)
    if not docs or all(len(d) == 0 for d in docs):
        raise InputError("training corpus is empty")
    if not 0.0 < sample_fraction <= 1.0:
        raise ConfigError(f"sample_fraction must be in (0, 1], got {sample_fraction}")
    if sample_fraction < 1.0:
        rng = random.Random(derive_seed(sample_seed, "bpe-sample"))
        n_keep = max(1, round(len(docs) * sample_fraction))
        docs = [docs[i] for i in sorted(rng.sample(range(len(docs)), n_keep))]

    word_freqs: Counter[str] = Counter()
    for doc in docs:
        for word in segmenter.segment(doc):
            word_freqs[word] += 1

    splits = {word: word_symbols(word, marker) for word in word_freqs}
    alphabet = sorted({sym for syms in splits.values() for sym in syms})
    resolved = resolve_target_size(target_size, size_policy)
    base_size = len(specials) + len(alphabet)
    if resolved < base_size:
        raise ConfigError(
            f"target vocab size {resolved} is below specials+alphabet size {base_size}"
        )

    vocab = list(specials) + alphabet
    vocab_set = set(vocab)
    merges: list[tuple[str, str]] = []

    while len(vocab) < resolved:
        pair_counts: Counter[tuple[str, str]] = Counter()
        for word, freq in word_freqs.items():
            syms = splits[word]
            for a, b in zip(syms, syms[1:]):
                pair_counts[(a, b)] += freq
        best_pair = _pick_pair(pair_counts, marker, set(specials))
        if best_pair is None:
            log.info(
                "merge pairs exhausted at vocab size %d (target %d)", len(vocab), resolved
            )
            break
        merged = _merge_output(best_pair[0], best_pair[1], marker)
        merges.append(best_pair)
        if merged not in vocab_set:
            vocab.append(merged)
            vocab_set.add(merged)
        for word in word_freqs:
            syms = splits[word]
            if len(syms) < 2:
                continue
            out: list[str] = []
            i = 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best_pair:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            splits[word] = out

    return TokenizerModel(
        vocab=vocab,
        merges=merges,
        continuation_prefix=marker,
        specials=specials,
        segmenter=segmenter,
        size_policy=size_policy,
        target_size=target_size,
    )


def _pick_pair(
    pair_counts: Counter[tuple[str, str]], marker: str, specials: set[str]
) -> tuple[str, str] | None:
    """Best mergeable pair: max count, ties to the lexicographically smaller pair.

    Two kinds of pair are skipped: those whose output would be a
    word-initial symbol starting with the marker (they would make the
    continuation test ambiguous) and those whose output collides with a
    reserved special token string.
    """
    if not pair_counts:
        return None
    for pair, _count in sorted(pair_counts.items(), key=lambda kv: (-kv[1], kv[0])):
        out = _merge_output(pair[0], pair[1], marker)
        if not pair[0].startswith(marker) and out.startswith(marker):
            continue
        if out in specials:
            continue
        return pair
    return None
