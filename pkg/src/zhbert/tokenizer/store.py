"""On-disk tokenizer format.

Four UTF-8 text files in one directory, chosen for diffability and
bit-exact golden tests:

  vocab.txt      one escaped token per line, id = line number
  merges.txt     one escaped pair per line ("left right"), rank = line number
  segmenter.txt  one escaped dictionary word per line
  meta.txt       key=value lines (marker, specials, size policy, ...)

Tokens may contain whitespace (non-CJK runs keep their spaces), so
whitespace and backslashes are escaped to keep every entry on one line.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import InputError
from .bpe import TokenizerModel
from .segment import RunSegmenter

FORMAT_VERSION = "1"

_ESCAPES = [("\\", "\\\\"), ("\n", "\\n"), ("\r", "\\r"), ("\t", "\\t"), (" ", "\\s")]


def escape_token(tok: str) -> str:
    for raw, esc in _ESCAPES:
        tok = tok.replace(raw, esc)
    return tok


def unescape_token(tok: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(tok):
        if tok[i] == "\\" and i + 1 < len(tok):
            nxt = tok[i + 1]
            mapped = {"\\": "\\", "n": "\n", "r": "\r", "t": "\t", "s": " "}.get(nxt)
            if mapped is None:
                raise InputError(f"bad escape sequence \\{nxt} in token file")
            out.append(mapped)
            i += 2
        else:
            out.append(tok[i])
            i += 1
    return "".join(out)


def save_tokenizer(model: TokenizerModel, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_lines(out / "vocab.txt", (escape_token(t) for t in model.vocab))
    _write_lines(
        out / "merges.txt",
        (f"{escape_token(a)} {escape_token(b)}" for a, b in model.merges),
    )
    _write_lines(
        out / "segmenter.txt", (escape_token(w) for w in model.segmenter.dictionary)
    )
    meta = [
        f"format_version={FORMAT_VERSION}",
        f"continuation_prefix={escape_token(model.continuation_prefix)}",
        "specials=" + ",".join(escape_token(s) for s in model.specials),
        f"size_policy={model.size_policy}",
        f"target_size={model.target_size}",
        f"vocab_size={len(model.vocab)}",
    ]
    _write_lines(out / "meta.txt", meta)


def load_tokenizer(model_dir: str | Path) -> TokenizerModel:
    d = Path(model_dir)
    if not (d / "vocab.txt").exists():
        raise InputError(f"no tokenizer model at {d} (vocab.txt missing)")
    vocab = [unescape_token(line) for line in _read_lines(d / "vocab.txt")]
    merges = []
    for line in _read_lines(d / "merges.txt"):
        a, b = line.split(" ")
        merges.append((unescape_token(a), unescape_token(b)))
    dictionary = [unescape_token(line) for line in _read_lines(d / "segmenter.txt")]
    meta = dict(line.split("=", 1) for line in _read_lines(d / "meta.txt"))
    return TokenizerModel(
        vocab=vocab,
        merges=merges,
        continuation_prefix=unescape_token(meta["continuation_prefix"]),
        specials=tuple(unescape_token(s) for s in meta["specials"].split(",")),
        segmenter=RunSegmenter(dictionary),
        size_policy=meta.get("size_policy", "exact"),
        target_size=int(meta.get("target_size", "0")),
    )


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _read_lines(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        return [line.rstrip("\n") for line in fh]
