import pytest

from analysis.spice import spice_lite
from corpus.grammar import NP, START, coarsen_graph, generate, load_grammar, load_productions
from corpus.ingest import ingest_image_graphs, read_graphs, write_graphs
from corpus.unpaired import make_unpaired, split_items
from corpus.vocabulary import EOS_ID, PAD, UNK_ID, WordVocabulary, build_vocab
from errors import CorpusError, DecodeError, GraphFormatError, MissingInputError, VocabularyError
from processing.parser import parse
from processing.validator import validate
from scenegraph.graph import IMAGE, SENTENCE, SceneGraph


@pytest.fixture(scope="module")
def grammar(data_dir):
    return load_grammar(data_dir)


# ---------------- grammar ----------------

def test_coarsening_is_many_to_one(grammar):
    fine = grammar.sentence_vocabulary_sizes()
    coarse = grammar.image_vocabulary_sizes()
    assert all(c < f for c, f in zip(coarse, fine))
    assert grammar.coarsen("terrier") == "dog"
    assert grammar.coarsen("parked_on") == "on"


def test_grammar_productions_are_probabilistic(grammar):
    starts = grammar.productions.productions(lhs=START)
    assert sum(p.prob() for p in starts) == pytest.approx(1.0)
    assert max(p.rhs().count(NP) for p in starts) == 4
    assert sum(p.prob() for p in grammar.productions.productions(lhs=NP)) == pytest.approx(1.0)


@pytest.mark.parametrize("text", [
    "S -> NP [0.5] | NP REL NP [0.4]\nNP -> DET NOUN [1.0]\n",
    "S -> NP NP [1.0]\nNP -> DET NOUN [1.0]\n",
    "S -> NP REL NP REL NP REL NP REL NP [1.0]\nNP -> DET NOUN [1.0]\n",
    "S -> NP [1.0]\nNP -> ADJ NOUN [1.0]\n",
    "NP -> DET NOUN [1.0]\nS -> NP [1.0]\n",
])
def test_load_productions_rejects_bad_grammars(tmp_path, text):
    path = tmp_path / "grammar.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(CorpusError):
        load_productions(str(path))


def test_coarsen_graph_merges_duplicates(grammar):
    graph = SceneGraph(["puppy", "stallion"], {0: ["crimson", "scarlet"]}, [(0, "beside", 1)])
    image = coarsen_graph(graph, grammar)
    assert image.modality == IMAGE
    assert image.objects == ("dog", "horse")
    assert image.attributes_of(0) == ("red",)
    assert image.relations == ((0, "near", 1),)


def test_generate_is_deterministic(grammar):
    first = generate(grammar, 20, seed=3)
    second = generate(grammar, 20, seed=3)
    assert [i.sentence for i in first] == [i.sentence for i in second]
    assert [i.sentence for i in first] != [i.sentence for i in generate(grammar, 20, seed=4)]


def test_generated_sentences_parse_back(grammar):
    for item in generate(grammar, 1000, seed=0):
        assert len(item.sentence) <= 16
        parsed = parse(item.sentence, grammar.lexicon)
        assert parsed == item.latent.with_id("")
        assert spice_lite(parsed, item.latent) == 1.0
        assert validate(item.image).ok
        assert all(len(a) <= 3 for a in item.image.attributes.values())


def test_generate_needs_items(grammar):
    with pytest.raises(CorpusError):
        generate(grammar, 0, seed=0)


# ---------------- word vocabulary ----------------

def test_build_vocab_threshold_and_order():
    sentences = [["a", "dog"], ["a", "cat"], ["a", "dog"]]
    vocab = build_vocab(sentences, min_count=2)
    assert vocab.words[4:] == ["a", "dog"]
    assert vocab.id_of("cat") == UNK_ID


def test_build_vocab_empty():
    with pytest.raises(VocabularyError):
        build_vocab([], min_count=1)
    with pytest.raises(VocabularyError):
        build_vocab([["a"]], min_count=2)


def test_encode_decode():
    vocab = WordVocabulary(["a", "dog"])
    ids = vocab.encode(["a", "dog", "zebra"])
    assert ids == [4, 5, UNK_ID]
    assert vocab.decode(ids + [EOS_ID, 4]) == ["a", "dog", "<unk>"]
    assert vocab.words[0] == PAD
    with pytest.raises(DecodeError):
        vocab.decode([99])


# ---------------- unpaired split ----------------

def _pairs(n):
    return [(SceneGraph([f"obj{k}"], {}, [], IMAGE, str(k)), [f"word{k}"]) for k in range(n)]


def test_make_unpaired_breaks_every_pair():
    images, sentences = make_unpaired(_pairs(5), seed=0)
    for image, sentence in zip(images, sentences):
        assert sentence != [image.objects[0].replace("obj", "word")]
    assert sorted(s[0] for s in sentences) == [f"word{k}" for k in range(5)]
    assert [g.graph_id for g in images] == [f"img{k}" for k in range(5)]


def test_make_unpaired_is_seeded():
    assert make_unpaired(_pairs(8), seed=1) == make_unpaired(_pairs(8), seed=1)


def test_make_unpaired_needs_two_pairs():
    with pytest.raises(CorpusError):
        make_unpaired(_pairs(1), seed=0)


def test_split_items_proportions():
    train, val, test = split_items(list(range(100)), seed=0)
    assert (len(train), len(val), len(test)) == (80, 10, 10)
    assert sorted(train + val + test) == list(range(100))


# ---------------- ingestion ----------------

def test_ingest_skips_bad_records(tmp_path):
    path = tmp_path / "graphs.sg"
    path.write_text(
        "graph ok sentence\nobj 0 dog\nend\n\n"
        "graph bad image\nobj 0 dog\nrel 0 near 5\nend\n\n"
        "graph broken image\nobj x dog\nend\n",
        encoding="utf-8",
    )
    graphs, errors = ingest_image_graphs(path)
    assert [g.graph_id for g in graphs] == ["ok"]
    assert graphs[0].modality == IMAGE
    assert len(errors) == 2
    assert "line 5" in errors[0]


def test_ingest_missing_file(tmp_path):
    with pytest.raises(MissingInputError):
        ingest_image_graphs(tmp_path / "nope.sg")


def test_ingest_golden_file(data_dir):
    graphs, errors = ingest_image_graphs(f"{data_dir}/golden_graphs.txt")
    assert len(graphs) == 3 and errors == []


def test_read_graphs_is_strict(tmp_path):
    path = tmp_path / "graphs.sg"
    write_graphs([SceneGraph(["dog"], {}, [], SENTENCE, "a")], path)
    assert read_graphs(path)[0].graph_id == "a"
    path.write_text("graph a image\nobj 0 dog\n", encoding="utf-8")
    with pytest.raises(GraphFormatError):
        read_graphs(path)
