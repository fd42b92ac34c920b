from .dedup import DedupResult, DropRecord, dedup
from .manifest import CorpusManifest, Source, parse_manifest, write_manifest
from .minhash import (
    MinHashSignature,
    estimated_jaccard,
    minhash_signature,
    permutation_params,
    shingles,
)
from .mixture import MixtureStream, mixture_sampler
from .records import iter_records, read_records, record_files, write_records

__all__ = [
    "CorpusManifest",
    "DedupResult",
    "DropRecord",
    "MinHashSignature",
    "MixtureStream",
    "Source",
    "dedup",
    "estimated_jaccard",
    "iter_records",
    "minhash_signature",
    "mixture_sampler",
    "parse_manifest",
    "permutation_params",
    "read_records",
    "record_files",
    "shingles",
    "write_manifest",
    "write_records",
]
