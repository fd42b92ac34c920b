"""Word segmentation for the pre-tokenizer.

Word boundaries decide which subwords carry the continuation marker, and
whole-word masking later treats each segmenter word as one unit. The rule
implemented here: every maximal run of non-CJK characters is one word;
CJK runs are split by longest dictionary match, single characters when no
dictionary word matches. Segmentation always partitions the input exactly,
which is what makes decode(encode(text)) an identity.
"""

from __future__ import annotations

from typing import Iterable

_CJK_RANGES = (
    (0x3400, 0x4DBF),  # extension A
    (0x4E00, 0x9FFF),  # unified ideographs
    (0xF900, 0xFAFF),  # compatibility ideographs
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


class RunSegmenter:
    """Default pluggable segmenter (see module docstring for the rule)."""

    def __init__(self, dictionary: Iterable[str] = ()):
        self.dictionary = sorted(set(dictionary))
        self._words = set(self.dictionary)
        self._max_word_len = max((len(w) for w in self._words), default=1)

    def segment(self, text: str) -> list[str]:
        words: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            if is_cjk(text[i]):
                j = i
                while j < n and is_cjk(text[j]):
                    j += 1
                words.extend(self._segment_cjk_run(text[i:j]))
                i = j
            else:
                j = i
                while j < n and not is_cjk(text[j]):
                    j += 1
                words.append(text[i:j])
                i = j
        return words

    def _segment_cjk_run(self, run: str) -> list[str]:
        words: list[str] = []
        i = 0
        n = len(run)
        while i < n:
            match_len = 1
            for length in range(min(self._max_word_len, n - i), 1, -1):
                if run[i : i + length] in self._words:
                    match_len = length
                    break
            words.append(run[i : i + match_len])
            i += match_len
        return words
