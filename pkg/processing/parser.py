"""
Rule-based sentence -> scene graph parser over the closed template grammar.

Rules, applied left to right:
    R1  DET? ADJ* NOUN                    -> object, ADJs become its attributes
    R2  object (VERB | VERB PREP | PREP) object
                                          -> relation; multi-word symbols are
                                             joined with "_"
    R3  "and" + object after a relation   -> repeats the pending relation head
                                             (subject, relation) for the new object
UNK tokens never become nodes.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from errors import NoObjectsError, ParseError
from processing.lexicon import ADJ, CONJ, DET, NOUN, PREP, UNK, VERB, Lexicon, tag
from scenegraph.graph import SENTENCE, SceneGraph

RELATION_JOINER = "_"


@dataclass
class TraceEntry:
    rule: str
    span: Tuple[int, int]
    element: tuple


@dataclass
class ParseTrace:
    tokens: List[str]
    tags: List[str]
    entries: List[TraceEntry] = field(default_factory=list)

    def add(self, rule, span, element):
        self.entries.append(TraceEntry(rule, span, element))


def parse_with_trace(tokens: List[str], lexicon: Lexicon) -> Tuple[SceneGraph, ParseTrace]:
    if not tokens:
        raise ParseError("cannot parse an empty sentence")

    tags = tag(tokens, lexicon)
    trace = ParseTrace(list(tokens), tags)
    objects, attributes, relations = [], {}, []

    last = None
    head = None
    rel_words, rel_start = [], None
    conj_at = None

    def add_relation(rule, span, subj, symbol, obj):
        triplet = (subj, symbol, obj)
        if triplet not in relations:
            relations.append(triplet)
            trace.add(rule, span, ("relation", triplet))

    i, n = 0, len(tokens)
    while i < n:
        t = tags[i]
        if t == UNK:
            i += 1
        elif t in (DET, ADJ, NOUN):
            start, j, adjs = i, i, []
            if tags[j] == DET:
                j += 1
            while j < n and tags[j] in (ADJ, UNK):
                if tags[j] == ADJ and tokens[j] not in adjs:
                    adjs.append(tokens[j])
                j += 1
            if j < n and tags[j] == NOUN:
                idx = len(objects)
                objects.append(tokens[j])
                trace.add("R1", (start, j + 1), ("object", idx, tokens[j]))
                if adjs:
                    attributes[idx] = adjs
                    for adj in adjs:
                        trace.add("R1", (start, j + 1), ("attribute", idx, adj))
                if rel_words and last is not None:
                    symbol = RELATION_JOINER.join(rel_words)
                    add_relation("R2", (rel_start, j + 1), last, symbol, idx)
                    head = (last, symbol)
                elif conj_at is not None and head is not None:
                    add_relation("R3", (conj_at, j + 1), head[0], head[1], idx)
                rel_words, conj_at = [], None
                last = idx
                i = j + 1
            else:
                # determiner/adjectives with no noun to attach to
                i = j
        elif t in (VERB, PREP):
            if not rel_words:
                rel_start = i
            rel_words.append(tokens[i])
            i += 1
        elif t == CONJ:
            conj_at = i
            rel_words = []
            i += 1
        else:
            i += 1

    if not objects:
        raise NoObjectsError(f"no objects found in '{' '.join(tokens)}'")
    return SceneGraph(objects, attributes, relations, SENTENCE), trace


def parse(tokens: List[str], lexicon: Lexicon) -> SceneGraph:
    graph, _ = parse_with_trace(tokens, lexicon)
    return graph


def parse_corpus(sentences, lexicon: Lexicon):
    """
    Parse a batch of tokenized sentences.

    Returns:
        (graphs, failures) where failures lists (index, message) for
        sentences with no parse; their slot in graphs is None
    """
    graphs, failures = [], []
    for index, tokens in enumerate(sentences):
        try:
            graphs.append(parse(tokens, lexicon).with_id(str(index)))
        except ParseError as exc:
            graphs.append(None)
            failures.append((index, str(exc)))
    return graphs, failures
