"""Mixture manifest: named sources with batch ratios that sum to one."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError, InputError


@dataclass(frozen=True)
class Source:
    name: str
    path: str
    ratio: float


@dataclass(frozen=True)
class CorpusManifest:
    sources: tuple[Source, ...]

    def __post_init__(self):
        if not self.sources:
            raise ConfigError("manifest has no sources")
        names = [s.name for s in self.sources]
        if len(set(names)) != len(names):
            raise ConfigError("manifest source names must be unique")
        for s in self.sources:
            if s.ratio < 0:
                raise ConfigError(f"ratio for source {s.name!r} is negative")
        total = sum(s.ratio for s in self.sources)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"ratio: source ratios sum to {total!r}, expected 1.0")

    def ratios(self) -> dict[str, float]:
        return {s.name: s.ratio for s in self.sources}


def parse_manifest(path: str | Path) -> CorpusManifest:
    """Format: one ``name ratio path`` line per source; '#' comments."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"manifest file {p} not found")
    sources: list[Source] = []
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            raise ConfigError(f"{p}:{lineno}: expected 'name ratio path', got {raw!r}")
        name, ratio_s, src_path = parts
        try:
            ratio = float(ratio_s)
        except ValueError:
            raise ConfigError(f"{p}:{lineno}: ratio {ratio_s!r} is not a number") from None
        sources.append(Source(name=name, path=src_path, ratio=ratio))
    return CorpusManifest(sources=tuple(sources))


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# name ratio path\n")
        for s in manifest.sources:
            fh.write(f"{s.name} {s.ratio!r} {s.path}\n")
