"""
Scene graph data model, graph vocabularies and tuple extraction.

Objects are addressed by index, so a graph can hold two objects with the
same symbol ("two dogs").
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from errors import GraphError, SymbolLookupError

IMAGE = "image"
SENTENCE = "sentence"
MODALITIES = (IMAGE, SENTENCE)

SELF_RELATION = "<self>"
NONE_ATTRIBUTE = "<none>"
UNKNOWN_OBJECT = "<unk>"

Relation = Tuple[int, str, int]


@dataclass(frozen=True)
class SceneGraph:
    objects: Tuple[str, ...]
    attributes: Mapping[int, Tuple[str, ...]] = field(default_factory=dict)
    relations: Tuple[Relation, ...] = ()
    modality: str = SENTENCE
    graph_id: str = ""

    def __post_init__(self):
        # canonical form: tuples everywhere, attribute map sorted, no empty lists
        object.__setattr__(self, "objects", tuple(self.objects))
        attrs = {k: tuple(v) for k, v in sorted(dict(self.attributes).items(), key=_attribute_order) if len(v)}
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "relations", tuple(tuple(r) for r in self.relations))

    def attributes_of(self, index: int) -> Tuple[str, ...]:
        return self.attributes.get(index, ())

    def with_modality(self, modality: str) -> "SceneGraph":
        return SceneGraph(self.objects, self.attributes, self.relations, modality, self.graph_id)

    def with_id(self, graph_id: str) -> "SceneGraph":
        return SceneGraph(self.objects, self.attributes, self.relations, self.modality, graph_id)


def to_tuples(graph: SceneGraph) -> set:
    """
    Flatten a graph into object, attribute and relation tuples of symbols.

    Args:
        graph: a well-formed scene graph

    Returns:
        set of 1-tuples (object), 2-tuples (object, attribute) and
        3-tuples (subject, relation, object)
    """
    n = len(graph.objects)
    tuples = set()
    for symbol in graph.objects:
        tuples.add((symbol,))
    for index, attrs in graph.attributes.items():
        if not _is_index(index, n):
            raise GraphError(f"attribute key {index!r} is not an object id")
        for attr in attrs:
            tuples.add((graph.objects[index], attr))
    for subj, rel, obj in graph.relations:
        if not (_is_index(subj, n) and _is_index(obj, n)):
            raise GraphError(f"relation ({subj}, {rel}, {obj}) has a dangling object id")
        tuples.add((graph.objects[subj], rel, graph.objects[obj]))
    return tuples


def _is_index(value, n) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and 0 <= value < n


def _attribute_order(item):
    key = item[0]
    return (0, key, "") if isinstance(key, int) else (1, 0, str(key))


# ---------------- vocabularies ----------------

class Lexicon:
    """Dense symbol -> id map; the reserved symbol always sits at id 0."""

    def __init__(self, reserved: str, symbols: Iterable[str] = ()):
        self.reserved = reserved
        self._ids: Dict[str, int] = {reserved: 0}
        self._symbols: List[str] = [reserved]
        for symbol in symbols:
            self.add(symbol)

    def add(self, symbol: str) -> int:
        if symbol not in self._ids:
            self._ids[symbol] = len(self._symbols)
            self._symbols.append(symbol)
        return self._ids[symbol]

    def id_of(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise SymbolLookupError(f"unknown symbol '{symbol}'") from None

    def symbol(self, index: int) -> str:
        return self._symbols[index]

    def __contains__(self, symbol) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._symbols)

    @property
    def symbols(self) -> List[str]:
        return list(self._symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, Lexicon) and self._symbols == other._symbols


@dataclass
class GraphVocabulary:
    objects: Lexicon = field(default_factory=lambda: Lexicon(UNKNOWN_OBJECT))
    attributes: Lexicon = field(default_factory=lambda: Lexicon(NONE_ATTRIBUTE))
    relations: Lexicon = field(default_factory=lambda: Lexicon(SELF_RELATION))

    @classmethod
    def from_graphs(cls, graphs: Iterable[SceneGraph]) -> "GraphVocabulary":
        vocab = cls()
        for graph in graphs:
            vocab.add_graph(graph)
        return vocab

    @classmethod
    def from_symbols(cls, objects=(), attributes=(), relations=()) -> "GraphVocabulary":
        return cls(Lexicon(UNKNOWN_OBJECT, objects),
                   Lexicon(NONE_ATTRIBUTE, attributes),
                   Lexicon(SELF_RELATION, relations))

    def add_graph(self, graph: SceneGraph):
        for symbol in graph.objects:
            self.objects.add(symbol)
        for attrs in graph.attributes.values():
            for attr in attrs:
                self.attributes.add(attr)
        for _, rel, _ in graph.relations:
            self.relations.add(rel)

    def to_dict(self) -> dict:
        return {
            "objects": self.objects.symbols,
            "attributes": self.attributes.symbols,
            "relations": self.relations.symbols,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GraphVocabulary":
        return cls.from_symbols(data["objects"][1:], data["attributes"][1:], data["relations"][1:])


def filter_rare_symbols(graphs: Sequence[SceneGraph], min_count: int) -> List[SceneGraph]:
    """
    Drop objects, attributes and relations seen fewer than ``min_count``
    times across ``graphs``. Relations touching a dropped object go too.
    A min_count of 0 or 1 returns the graphs unchanged.
    """
    if min_count <= 1:
        return list(graphs)

    object_counts = Counter(s for g in graphs for s in g.objects)
    attr_counts = Counter(a for g in graphs for attrs in g.attributes.values() for a in attrs)
    rel_counts = Counter(r for g in graphs for _, r, _ in g.relations)

    filtered = []
    for graph in graphs:
        keep = [i for i, s in enumerate(graph.objects) if object_counts[s] >= min_count]
        remap = {old: new for new, old in enumerate(keep)}
        attrs = {
            remap[i]: [a for a in graph.attributes_of(i) if attr_counts[a] >= min_count]
            for i in keep
        }
        rels = [
            (remap[s], r, remap[o]) for s, r, o in graph.relations
            if s in remap and o in remap and rel_counts[r] >= min_count
        ]
        filtered.append(SceneGraph([graph.objects[i] for i in keep], attrs, rels,
                                   graph.modality, graph.graph_id))
    return filtered
