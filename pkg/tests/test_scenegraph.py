import os

import numpy as np
import pytest

from errors import GraphError, GraphFormatError, SymbolLookupError
from processing.validator import validate
from scenegraph.graph import (IMAGE, NONE_ATTRIBUTE, SELF_RELATION, SENTENCE, UNKNOWN_OBJECT, GraphVocabulary,
                              SceneGraph, filter_rare_symbols, to_tuples)
from scenegraph.interchange import deserialize, deserialize_many, read_records, serialize, serialize_many


# ---------------- data model ----------------

def test_to_tuples_two_dogs():
    graph = SceneGraph(["dog", "dog", "table"], {}, [(0, "near", 2), (1, "near", 2)])
    assert to_tuples(graph) == {("dog",), ("table",), ("dog", "near", "table")}


def test_to_tuples_attributes(rider_graph):
    tuples = to_tuples(rider_graph)
    assert ("horse", "black") in tuples
    assert ("man", "riding", "horse") in tuples
    assert len(tuples) == 3 + 3 + 2


def test_to_tuples_dangling_relation():
    graph = SceneGraph(["dog"], {}, [(0, "near", 3)])
    with pytest.raises(GraphError):
        to_tuples(graph)


def test_graph_is_canonical():
    a = SceneGraph(["cat"], {0: ["white"], 1: []}, [])
    b = SceneGraph(("cat",), {0: ("white",)}, ())
    assert a == b
    assert a.attributes_of(0) == ("white",)
    assert a.attributes_of(3) == ()


def test_vocabulary_reserved_ids(rider_graph):
    vocab = GraphVocabulary.from_graphs([rider_graph])
    assert vocab.objects.id_of(UNKNOWN_OBJECT) == 0
    assert vocab.attributes.id_of(NONE_ATTRIBUTE) == 0
    assert vocab.relations.id_of(SELF_RELATION) == 0
    assert [vocab.objects.id_of(s) for s in ("man", "horse", "field")] == [1, 2, 3]
    with pytest.raises(SymbolLookupError):
        vocab.objects.id_of("giraffe")


def test_vocabulary_dict_form(rider_graph):
    vocab = GraphVocabulary.from_graphs([rider_graph])
    assert GraphVocabulary.from_dict(vocab.to_dict()) == vocab


def test_filter_rare_symbols_drops_relations_to_removed_objects():
    graphs = [
        SceneGraph(["dog", "unicorn"], {0: ["brown"]}, [(0, "near", 1)]),
        SceneGraph(["dog"], {0: ["brown"]}, []),
    ]
    filtered = filter_rare_symbols(graphs, 2)
    assert filtered[0] == SceneGraph(["dog"], {0: ["brown"]}, [])
    assert filter_rare_symbols(graphs, 0) == graphs


# ---------------- validation ----------------

def test_validate_reports_every_problem():
    graph = SceneGraph(["dog"], {0: ["red", "red"]}, [(0, "on", 1), (0, "on", 1)])
    report = validate(graph)
    assert not report.ok
    text = str(report)
    assert "duplicate attribute" in text
    assert "dangling object id 1" in text
    assert "duplicate relation" in text


def test_validate_empty_and_vocabulary(graph_vocab):
    assert "empty graph" in str(validate(SceneGraph([])))
    report = validate(SceneGraph(["giraffe"], {0: ["tall"]}, []), graph_vocab)
    assert "unknown object symbol 'giraffe'" in str(report)
    assert "unknown attribute symbol 'tall'" in str(report)


def test_validate_ok(rider_graph, graph_vocab):
    report = validate(rider_graph, graph_vocab)
    assert report.ok
    assert str(report) == "valid graph"


# ---------------- interchange ----------------

def test_serialize_layout(rider_graph):
    text = serialize(rider_graph.with_id("r1"))
    assert text.splitlines() == [
        "graph r1 sentence",
        "obj 0 man",
        "obj 1 horse",
        "obj 2 field",
        "attr 0 young",
        "attr 1 big",
        "attr 1 black",
        "rel 0 riding 1",
        "rel 1 in 2",
        "end",
    ]
    assert deserialize(text) == rider_graph.with_id("r1")


def _random_graph(rng, index):
    objects = [str(o) for o in rng.choice(["man", "horse", "dog", "car", "field", "table"], size=int(rng.integers(1, 6)))]
    attributes = {}
    for idx in range(len(objects)):
        count = int(rng.integers(0, 4))
        attributes[idx] = [str(a) for a in rng.choice(["red", "big", "old", "young"], size=count, replace=False)]
    relations = [(int(rng.integers(len(objects))), str(rng.choice(["on", "near", "riding_on"])),
                  int(rng.integers(len(objects)))) for _ in range(int(rng.integers(0, 4)))]
    modality = IMAGE if index % 2 else SENTENCE
    return SceneGraph(objects, attributes, relations, modality, f"g{index}")


def test_interchange_round_trip_on_random_graphs():
    rng = np.random.default_rng(0)
    graphs = [_random_graph(rng, i) for i in range(1000)]
    for graph in graphs:
        assert deserialize(serialize(graph)) == graph
    assert deserialize_many(serialize_many(graphs)) == graphs


def test_serialize_rejects_whitespace_symbol():
    with pytest.raises(GraphError):
        serialize(SceneGraph(["fire hydrant"]))


def test_unknown_field_names_line_and_field():
    text = "graph g1 image\nobj 0 dog\ncolour 0 red\nend\n"
    with pytest.raises(GraphFormatError) as info:
        deserialize(text)
    assert info.value.line_no == 3
    assert info.value.field == "colour"


def test_missing_end():
    with pytest.raises(GraphFormatError) as info:
        deserialize("graph g1 image\nobj 0 dog\n")
    assert info.value.field == "end"


def test_read_records_keeps_going_after_bad_record(rider_graph):
    text = serialize_many([rider_graph.with_id("a")]) + "\ngraph b image\nobj zero dog\nend\n\n" \
        + serialize(SceneGraph(["dog"], {}, [], IMAGE, "c"))
    results = list(read_records(text))
    assert len(results) == 3
    assert isinstance(results[1][1], GraphFormatError)
    assert results[2][1].graph_id == "c"
    with pytest.raises(GraphFormatError):
        deserialize_many(text)


def test_golden_file(data_dir):
    with open(os.path.join(data_dir, "golden_graphs.txt"), encoding="utf-8") as f:
        text = f.read()
    graphs = deserialize_many(text)
    assert [g.graph_id for g in graphs] == ["street-scene", "rider", "lone-dog"]
    assert all(g.modality == IMAGE for g in graphs)
    assert graphs[1].attributes_of(1) == ("black", "big")
    assert serialize_many(graphs) == text
