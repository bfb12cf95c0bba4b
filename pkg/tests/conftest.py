import os

import pytest
import torch

from config import RunConfig
from corpus.vocabulary import WordVocabulary
from processing.lexicon import load_lexicon
from scenegraph.graph import GraphVocabulary, SceneGraph

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(ROOT, "data")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(os.path.join(DATA_DIR, "lexicon.txt"))


@pytest.fixture
def rider_graph():
    # "a young man riding the big black horse in the field"
    return SceneGraph(
        ["man", "horse", "field"],
        {0: ["young"], 1: ["big", "black"]},
        [(0, "riding", 1), (1, "in", 2)],
    )


@pytest.fixture
def graph_vocab():
    return GraphVocabulary.from_symbols(
        objects=["man", "horse", "field", "dog", "car", "street"],
        attributes=["young", "big", "black", "red"],
        relations=["riding", "in", "on", "near"],
    )


@pytest.fixture
def word_vocab():
    return WordVocabulary(["a", "the", "man", "dog", "horse", "riding", "on", "red"])


@pytest.fixture
def tiny_config():
    return RunConfig(d_e=8, d_x=8, d_f=8, d_h=12, max_len=8, seed=0,
                     batch_size=4, xe_epochs=2, rl_epochs=1, beam=3,
                     align_epochs=2, align_batch_size=4, disc_out_dim=8)


@pytest.fixture
def float64():
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield
    torch.set_default_dtype(previous)
