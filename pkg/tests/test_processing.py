import pytest

from errors import InexpressibleGraphError, NoObjectsError, ParseError
from processing.cleaner import read_sentences, tokenize, truncate, write_sentences
from processing.explainability import explain_parse, format_report
from processing.lexicon import ADJ, DET, NOUN, UNK, VERB, tag
from processing.parser import parse, parse_corpus, parse_with_trace
from processing.realizer import realize
from scenegraph.graph import SceneGraph


def test_tokenize_and_truncate():
    assert tokenize("A Dog, on the MAT!") == ["a", "dog", "on", "the", "mat"]
    assert truncate(list("abcdef"), 4) == ["a", "b", "c", "d"]


def test_sentence_file(tmp_path):
    path = tmp_path / "s.txt"
    write_sentences([["a", "dog"], ["the", "red", "car"]], path)
    assert read_sentences(path) == [["a", "dog"], ["the", "red", "car"]]


def test_tagging(lexicon):
    assert tag(["red", "car", "zebra"], lexicon) == [ADJ, NOUN, UNK]
    assert tag(["a", "red", "car"], lexicon) == [DET, ADJ, NOUN]
    assert tag(["car", "zzz"], lexicon) == [NOUN, UNK]
    assert tag(["the", "dog", "chases", "a", "cat"], lexicon) == [DET, NOUN, VERB, DET, NOUN]


# ---------------- parser ----------------

def test_parse_rider(lexicon, rider_graph):
    tokens = "a young man riding the big black horse in the field".split()
    assert parse(tokens, lexicon) == rider_graph


def test_parse_tall_man_rides_horse(lexicon):
    graph = parse("the tall man rides a horse".split(), lexicon)
    assert graph == SceneGraph(["man", "horse"], {0: ["tall"]}, [(0, "rides", 1)])
    assert realize(graph, lexicon) == "a tall man rides the horse".split()


def test_parse_verb_preposition_relation(lexicon):
    graph = parse("a car parked on the street".split(), lexicon)
    assert graph.relations == ((0, "parked_on", 1),)


def test_parse_conjunction_repeats_relation(lexicon):
    graph = parse("a dog near a car and a man".split(), lexicon)
    assert graph.objects == ("dog", "car", "man")
    assert graph.relations == ((0, "near", 1), (0, "near", 2))


def test_parse_skips_unknown_words(lexicon):
    graph = parse("a dog xyzzy near the car".split(), lexicon)
    assert graph.objects == ("dog", "car")
    assert graph.relations == ((0, "near", 1),)


def test_parse_failures(lexicon):
    with pytest.raises(NoObjectsError):
        parse(["the", "red"], lexicon)
    with pytest.raises(ParseError):
        parse([], lexicon)


def test_parse_corpus_reports_failures(lexicon):
    graphs, failures = parse_corpus([["a", "dog"], ["the"], ["a", "car"]], lexicon)
    assert graphs[1] is None
    assert [g.graph_id for g in graphs if g is not None] == ["0", "2"]
    assert [index for index, _ in failures] == [1]


def test_parse_trace_explanation(lexicon):
    _, trace = parse_with_trace("a red car on the street".split(), lexicon)
    report = explain_parse(trace)
    assert [step["rule"] for step in report["steps"]] == ["R1", "R1", "R1", "R2"]
    text = format_report(report)
    assert "R2 [3:6] 'on the street' -> relation (0, on, 1)" in text


def test_trace_lists_skipped_words(lexicon):
    _, trace = parse_with_trace("a dog xyzzy".split(), lexicon)
    assert explain_parse(trace)["skipped_tokens"] == ["xyzzy"]


# ---------------- realizer ----------------

def test_realize_rider(lexicon, rider_graph):
    assert " ".join(realize(rider_graph, lexicon)) == "a young man riding the big black horse in the field"


def test_realize_uses_an_before_vowel(lexicon):
    assert realize(SceneGraph(["horse"], {0: ["old"]}), lexicon) == ["an", "old", "horse"]


def test_realize_then_parse_is_identity(lexicon):
    graph = SceneGraph(["dog", "car", "street"], {0: ["small"], 1: ["red", "old"]},
                       [(0, "sitting_in", 1), (1, "on", 2)])
    assert parse(realize(graph, lexicon), lexicon) == graph


def test_realize_rejects_non_chain(lexicon):
    graph = SceneGraph(["dog", "car", "man"], {}, [(0, "near", 1), (0, "near", 2)])
    with pytest.raises(InexpressibleGraphError):
        realize(graph, lexicon)


def test_realize_rejects_too_many_relations(lexicon):
    graph = SceneGraph(["dog"] * 5, {}, [(i, "near", i + 1) for i in range(4)])
    with pytest.raises(InexpressibleGraphError):
        realize(graph, lexicon)


def test_realize_rejects_bad_relation(lexicon):
    graph = SceneGraph(["dog", "car"], {}, [(0, "on_near", 1)])
    with pytest.raises(InexpressibleGraphError):
        realize(graph, lexicon)
