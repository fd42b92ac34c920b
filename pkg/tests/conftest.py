import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpusgen import dictionary, make_corpus  # noqa: E402

from zhbert.encoder import EncoderConfig, init_checkpoint
from zhbert.tokenizer import RunSegmenter, train_bpe


@pytest.fixture(scope="session")
def fixture_corpus():
    return make_corpus(seed=11, n_docs=60)


@pytest.fixture(scope="session")
def tok_model(fixture_corpus):
    return train_bpe(
        fixture_corpus, 220, "exact", segmenter=RunSegmenter(dictionary())
    )


@pytest.fixture(scope="session")
def toy_config(tok_model):
    return EncoderConfig(
        layers=2,
        hidden=8,
        heads=2,
        ffn_round_multiple=4,
        global_layer_interval=2,
        local_window_radius=2,
        max_context=64,
        vocab_size=11,
    )


@pytest.fixture()
def toy_checkpoint(toy_config):
    return init_checkpoint(toy_config, seed=7)
