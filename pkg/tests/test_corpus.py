import random

import pytest

from corpusgen import make_corpus, make_dedup_fixture
from oracles import ref_sequential_dedup, ref_shingle_jaccard

from zhbert.corpus import (
    CorpusManifest,
    MixtureStream,
    Source,
    dedup,
    estimated_jaccard,
    minhash_signature,
    mixture_sampler,
    parse_manifest,
    read_records,
    write_manifest,
    write_records,
)
from zhbert.errors import ConfigError, InputError


class TestRecords:
    def test_round_trip(self, tmp_path):
        docs = ["中文文档", "hello\nworld", "", "mixed 中 text"]
        write_records(tmp_path / "docs.rec", docs)
        assert read_records(tmp_path / "docs.rec") == docs

    def test_truncated_file_rejected(self, tmp_path):
        write_records(tmp_path / "docs.rec", ["abcdef"])
        data = (tmp_path / "docs.rec").read_bytes()
        (tmp_path / "bad.rec").write_bytes(data[:-2])
        with pytest.raises(InputError):
            read_records(tmp_path / "bad.rec")


class TestManifest:
    def test_parse_and_validate(self, tmp_path):
        path = tmp_path / "mix.manifest"
        path.write_text(
            "# comment\nbaike 0.03 baike.rec\nweb 0.57 web.rec\n"
            "fin34 0.10 a.rec\nfin45 0.10 b.rec\ncosmo 0.20 c.rec\n",
            encoding="utf-8",
        )
        manifest = parse_manifest(path)
        assert [s.ratio for s in manifest.sources] == [0.03, 0.57, 0.10, 0.10, 0.20]
        assert abs(sum(s.ratio for s in manifest.sources) - 1.0) < 1e-9

    def test_bad_sum_rejected_names_field(self, tmp_path):
        path = tmp_path / "bad.manifest"
        path.write_text("a 0.5 a.rec\nb 0.4 b.rec\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="ratio"):
            parse_manifest(path)

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError):
            CorpusManifest(
                (Source("a", "x.rec", 0.5), Source("a", "y.rec", 0.5))
            )

    def test_write_read_round_trip(self, tmp_path):
        manifest = CorpusManifest((Source("a", "x.rec", 0.25), Source("b", "y.rec", 0.75)))
        write_manifest(manifest, tmp_path / "m")
        assert parse_manifest(tmp_path / "m") == manifest


class TestMinHash:
    def test_identical_docs_estimate_one(self):
        a = minhash_signature("今天天气很好我们出去玩", seed=3)
        b = minhash_signature("今天天气很好我们出去玩", seed=3)
        assert estimated_jaccard(a, b) == 1.0

    def test_disjoint_docs_estimate_zero(self):
        a = minhash_signature("aaaaaaaaaaaaaaa", seed=3)
        b = minhash_signature("bbbbbbbbbbbbbbb", seed=3)
        assert estimated_jaccard(a, b) == 0.0

    def test_short_doc_single_shingle(self):
        sig = minhash_signature("ab", k=16, shingle_size=5, seed=0)
        assert len(sig) == 16
        same = minhash_signature("ab", k=16, shingle_size=5, seed=0)
        assert estimated_jaccard(sig, same) == 1.0

    def test_half_overlap_estimate_close(self):
        # True shingle Jaccard 0.5 by construction: doc B = first half of A
        # plus a disjoint half of equal shingle count.
        base = "abcdefghijklmnopqrstuvwxyz0123456789"
        other = "ABCDEFGHIJKLMNOPQRSTUVWXYZ!@#$%^&*()"
        truth = ref_shingle_jaccard(base, base, 5)
        assert truth == 1.0
        doc_a, doc_b = base + other[:0], base  # placeholder to keep names clear
        doc_a = base
        doc_b_halfnew = base[: len(base) // 2 + 2] + other
        truth = ref_shingle_jaccard(doc_a, doc_b_halfnew, 5)
        est = estimated_jaccard(
            minhash_signature(doc_a, k=256, seed=5),
            minhash_signature(doc_b_halfnew, k=256, seed=5),
        )
        assert abs(est - truth) <= 0.1  # ~3 sigma at k=256

    def test_unbiased_over_seeds(self):
        docs, _ = make_dedup_fixture(seed=4, n_unique=0, n_planted_pairs=3, doc_chars=200)
        for i in range(0, len(docs), 2):
            a, b = docs[i], docs[i + 1]
            truth = ref_shingle_jaccard(a, b, 5)
            estimates = [
                estimated_jaccard(
                    minhash_signature(a, k=128, seed=s), minhash_signature(b, k=128, seed=s)
                )
                for s in range(40)
            ]
            assert abs(sum(estimates) / len(estimates) - truth) <= 0.02

    def test_signature_length_and_determinism(self):
        sig = minhash_signature("任意一段不短的文字样本内容", k=64, seed=9)
        assert len(sig.values) == 64
        again = minhash_signature("任意一段不短的文字样本内容", k=64, seed=9)
        assert sig == again

    def test_incomparable_signatures_rejected(self):
        a = minhash_signature("abcdef", k=16, seed=0)
        b = minhash_signature("abcdef", k=32, seed=0)
        with pytest.raises(InputError):
            estimated_jaccard(a, b)


class TestDedup:
    def test_exact_duplicate_dropped(self):
        docs = ["第一篇文档内容很长", "另一篇完全不同的文字", "第一篇文档内容很长"]
        result = dedup(docs, threshold=0.8)
        assert result.kept_indices == [0, 1]
        assert len(result.drops) == 1
        assert result.drops[0].index == 2
        assert result.drops[0].kept_index == 0

    def test_all_unique_nothing_dropped(self):
        docs = make_corpus(seed=21, n_docs=30)
        result = dedup(docs, threshold=0.8)
        assert result.kept_indices == list(range(30))
        assert result.drops == []

    def test_first_occurrence_always_kept(self):
        docs, _ = make_dedup_fixture(seed=8, n_unique=50, n_planted_pairs=10)
        result = dedup(docs, threshold=0.8)
        dropped = {d.index for d in result.drops}
        for d in result.drops:
            assert d.kept_index < d.index
            assert d.kept_index not in dropped

    def test_planted_pairs_match_bruteforce_oracle(self):
        docs, _ = make_dedup_fixture(seed=12, n_unique=120, n_planted_pairs=15)
        kept_oracle, dropped_oracle = ref_sequential_dedup(docs, 0.8, 5)
        result = dedup(docs, threshold=0.8, k=256, bands=64, seed=0)
        assert set(d.index for d in result.drops) == set(dropped_oracle)
        assert result.kept_indices == kept_oracle

    def test_threshold_validation(self):
        with pytest.raises(ConfigError):
            dedup(["abc"], threshold=0.0)
        with pytest.raises(ConfigError):
            dedup(["abc"], threshold=0.8, k=100, bands=32)

    def test_deterministic(self):
        docs, _ = make_dedup_fixture(seed=14, n_unique=40, n_planted_pairs=5)
        a = dedup(docs, threshold=0.8)
        b = dedup(docs, threshold=0.8)
        assert a.kept_indices == b.kept_indices
        assert [(d.index, d.kept_index) for d in a.drops] == [
            (d.index, d.kept_index) for d in b.drops
        ]


def two_source_setup(ratio_a=0.5):
    manifest = CorpusManifest(
        (Source("a", "a.rec", ratio_a), Source("b", "b.rec", 1.0 - ratio_a))
    )
    rng = random.Random(0)
    docs = {
        "a": [[1] * rng.randint(5, 30) for _ in range(50)],
        "b": [[2] * rng.randint(5, 30) for _ in range(50)],
    }
    return manifest, docs


class TestMixture:
    def test_single_source_gets_everything(self):
        manifest = CorpusManifest((Source("only", "x.rec", 1.0),))
        docs = {"only": [[1, 2, 3]] * 5}
        batch = mixture_sampler(manifest, docs, 100, seed=0, step=0)
        assert all(name == "only" for name, _ in batch)
        assert sum(len(d) for _, d in batch) >= 100

    def test_even_split_converges(self):
        manifest, docs = two_source_setup(0.5)
        totals = {"a": 0, "b": 0}
        for step in range(300):
            for name, doc in mixture_sampler(manifest, docs, 2000, seed=1, step=step):
                totals[name] += len(doc)
        share = totals["a"] / (totals["a"] + totals["b"])
        assert abs(share - 0.5) <= 0.01

    def test_deterministic_per_step(self):
        manifest, docs = two_source_setup()
        a = mixture_sampler(manifest, docs, 500, seed=7, step=3)
        b = mixture_sampler(manifest, docs, 500, seed=7, step=3)
        assert a == b
        c = mixture_sampler(manifest, docs, 500, seed=7, step=4)
        assert a != c

    def test_empty_source_rejected(self):
        manifest = CorpusManifest((Source("a", "x", 1.0),))
        with pytest.raises(ConfigError):
            mixture_sampler(manifest, {"a": []}, 100, seed=0, step=0)

    def test_stream_epoch_wrap_reshuffles(self):
        manifest = CorpusManifest((Source("a", "x", 1.0),))
        docs = {"a": [[i] for i in range(10)]}
        stream = MixtureStream(manifest, docs, seed=5)
        first_epoch = [stream._next_doc("a")[0] for _ in range(10)]
        second_epoch = [stream._next_doc("a")[0] for _ in range(10)]
        assert sorted(first_epoch) == sorted(second_epoch) == list(range(10))
        assert first_epoch != second_epoch  # reshuffled

    def test_stream_push_back_returns_doc_first(self):
        manifest = CorpusManifest((Source("a", "x", 1.0),))
        docs = {"a": [[i] for i in range(10)]}
        stream = MixtureStream(manifest, docs, seed=5)
        doc = stream._next_doc("a")
        stream.push_back("a", doc)
        assert stream._next_doc("a") == doc
