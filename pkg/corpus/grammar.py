"""
Dual-modality synthetic grammar.

The sentence side draws from the fine-grained lexicon; the image side is
the same latent graph pushed through a many-to-one coarsening map, which
gives the coarse-vs-fine vocabulary skew the aligner has to bridge.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from nltk.grammar import PCFG, Nonterminal

from errors import CorpusError
from processing.lexicon import ADJ, NOUN, Lexicon, load_lexicon
from processing.realizer import MAX_RELATIONS, realize
from processing.cleaner import MAX_CAPTION_LENGTH
from scenegraph.graph import IMAGE, SENTENCE, SceneGraph

logger = logging.getLogger(__name__)

ATTRIBUTE_CAP = 3
START, NP, REL, ADJECTIVE = (Nonterminal(s) for s in ("S", "NP", "REL", "ADJ"))


@dataclass
class DualGrammar:
    lexicon: Lexicon
    coarsening: Dict[str, str]
    productions: PCFG
    attribute_cap: int = ATTRIBUTE_CAP
    objects: List[str] = field(default_factory=list)
    attributes: List[str] = field(default_factory=list)
    relations: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.objects:
            self.objects = [s for s in self.coarsening if self.lexicon.tag_of(s) == NOUN]
            self.attributes = [s for s in self.coarsening if self.lexicon.tag_of(s) == ADJ]
            self.relations = [s for s in self.coarsening
                              if s not in self.objects and s not in self.attributes]
        for fine, coarse in self.coarsening.items():
            if coarse not in self.coarsening:
                raise CorpusError(f"coarse symbol '{coarse}' (from '{fine}') is not a sentence-side symbol")

    def coarsen(self, symbol: str) -> str:
        return self.coarsening[symbol]

    def image_vocabulary_sizes(self) -> Tuple[int, int, int]:
        coarse = lambda symbols: len({self.coarsening[s] for s in symbols})
        return coarse(self.objects), coarse(self.attributes), coarse(self.relations)

    def sentence_vocabulary_sizes(self) -> Tuple[int, int, int]:
        return len(self.objects), len(self.attributes), len(self.relations)


def load_coarsening(path) -> Dict[str, str]:
    mapping = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f.read().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CorpusError(f"{path}:{line_no}: expected '<fine> <coarse>'")
            fine, coarse = parts
            if fine in mapping and mapping[fine] != coarse:
                raise CorpusError(f"{path}:{line_no}: '{fine}' maps to two coarse symbols")
            mapping[fine] = coarse
    return mapping


def load_productions(path) -> PCFG:
    """
    Read the probabilistic productions of the caption grammar. Every S
    expansion must alternate NP REL ... NP; every NP expansion must be a
    determiner, adjectives and a noun.
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        productions = PCFG.fromstring(text)
    except ValueError as exc:
        raise CorpusError(f"{path}: {exc}") from None
    if productions.start() != START:
        raise CorpusError(f"{path}: the first production must expand {START}")

    for production in productions.productions(lhs=START):
        slots = production.rhs()
        if not slots or any(s not in (NP, REL) for s in slots) or slots[0] != NP or slots[-1] != NP \
                or any(a == b for a, b in zip(slots, slots[1:])):
            raise CorpusError(f"{path}: '{production}' must alternate NP REL ... NP")
        if slots.count(REL) > MAX_RELATIONS:
            raise CorpusError(f"{path}: '{production}' has too many relations")
    noun_phrases = productions.productions(lhs=NP)
    if not noun_phrases:
        raise CorpusError(f"{path}: no NP productions")
    for production in noun_phrases:
        body = [str(s) for s in production.rhs()]
        if body[:1] != ["DET"] or body[-1:] != ["NOUN"] or any(s != "ADJ" for s in body[1:-1]):
            raise CorpusError(f"{path}: '{production}' must be DET ADJ* NOUN")
    return productions


def load_grammar(data_dir) -> DualGrammar:
    lexicon = load_lexicon(os.path.join(data_dir, "lexicon.txt"))
    coarsening = load_coarsening(os.path.join(data_dir, "coarsening.txt"))
    productions = load_productions(os.path.join(data_dir, "grammar.txt"))
    grammar = DualGrammar(lexicon, coarsening, productions)
    logger.info("grammar: sentence side %s, image side %s (objects/attributes/relations)",
                grammar.sentence_vocabulary_sizes(), grammar.image_vocabulary_sizes())
    return grammar


# ---------------- generation ----------------

@dataclass
class GeneratedItem:
    latent: SceneGraph
    sentence: List[str]
    image: SceneGraph


def _expand(productions: PCFG, lhs: Nonterminal, rng, allowed=None) -> tuple:
    """Right-hand side of one production of ``lhs``, drawn by probability."""
    options = [p for p in productions.productions(lhs=lhs) if allowed is None or allowed(p)]
    if not options:
        raise CorpusError(f"no usable production for {lhs}")
    p = np.array([option.prob() for option in options])
    return options[rng.choice(len(options), p=p / p.sum())].rhs()


def _sample_latent(grammar: DualGrammar, rng) -> SceneGraph:
    n_objects = _expand(grammar.productions, START, rng).count(NP)
    limit = min(grammar.attribute_cap, len(grammar.attributes))

    objects, attributes, relations = [], {}, []
    for idx in range(n_objects):
        objects.append(grammar.objects[rng.integers(len(grammar.objects))])
        k = _expand(grammar.productions, NP, rng, lambda p: p.rhs().count(ADJECTIVE) <= limit).count(ADJECTIVE)
        if k:
            picks = rng.choice(len(grammar.attributes), size=k, replace=False)
            attributes[idx] = [grammar.attributes[p] for p in picks]
        if idx > 0:
            relations.append((idx - 1, grammar.relations[rng.integers(len(grammar.relations))], idx))
    return SceneGraph(objects, attributes, relations, SENTENCE)


def coarsen_graph(graph: SceneGraph, grammar: DualGrammar) -> SceneGraph:
    """Image-side view: coarse symbols, duplicate-free, attributes capped."""
    attributes = {}
    for idx, attrs in graph.attributes.items():
        coarse = []
        for attr in attrs:
            c = grammar.coarsen(attr)
            if c not in coarse:
                coarse.append(c)
        attributes[idx] = coarse[:grammar.attribute_cap]
    relations = []
    for subj, rel, obj in graph.relations:
        triplet = (subj, grammar.coarsen(rel), obj)
        if triplet not in relations:
            relations.append(triplet)
    return SceneGraph([grammar.coarsen(o) for o in graph.objects], attributes, relations,
                      IMAGE, graph.graph_id)


def generate(grammar: DualGrammar, n: int, seed: int, max_len: int = MAX_CAPTION_LENGTH) -> List[GeneratedItem]:
    """
    Draw ``n`` latent graphs with their realized sentences and coarse image
    views. Each item has its own generator seeded from (seed, index), so
    items are reproducible independently of each other.
    """
    if n < 1:
        raise CorpusError("generate needs n >= 1")

    items = []
    for index in range(n):
        rng = np.random.default_rng([seed, index])
        while True:
            latent = _sample_latent(grammar, rng).with_id(str(index))
            sentence = realize(latent, grammar.lexicon)
            if len(sentence) <= max_len:
                break
        items.append(GeneratedItem(latent, sentence, coarsen_graph(latent, grammar)))
    logger.info("generated %d items (seed %d)", n, seed)
    return items
