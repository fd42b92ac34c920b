"""Document-per-record storage: a uint32 little-endian byte length followed
by that many UTF-8 bytes, repeated. Simple, seekable, append-friendly."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import InputError

RECORD_SUFFIX = ".rec"


def write_records(path: str | Path, docs: Iterable[str]) -> int:
    n = 0
    with open(path, "wb") as fh:
        for doc in docs:
            data = doc.encode("utf-8")
            fh.write(struct.pack("<I", len(data)))
            fh.write(data)
            n += 1
    return n


def read_records(path: str | Path) -> list[str]:
    return list(iter_records(path))


def iter_records(path: str | Path) -> Iterator[str]:
    with open(path, "rb") as fh:
        while True:
            header = fh.read(4)
            if not header:
                return
            if len(header) < 4:
                raise InputError(f"truncated record header in {path}")
            (length,) = struct.unpack("<I", header)
            data = fh.read(length)
            if len(data) < length:
                raise InputError(f"truncated record body in {path}")
            yield data.decode("utf-8")


def record_files(directory: str | Path) -> list[Path]:
    files = sorted(Path(directory).glob(f"*{RECORD_SUFFIX}"))
    if not files:
        raise InputError(f"no {RECORD_SUFFIX} files in {directory}")
    return files
