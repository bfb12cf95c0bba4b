from typing import List

from errors import InexpressibleGraphError
from processing.lexicon import ADJ, NOUN, PREP, VERB, Lexicon
from processing.parser import RELATION_JOINER
from scenegraph.graph import SceneGraph

MAX_RELATIONS = 3

_VOWELS = "aeiou"


def _determiner(word: str, first: bool) -> str:
    if not first:
        return "the"
    return "an" if word[0] in _VOWELS else "a"


def _relation_words(symbol: str, lexicon: Lexicon) -> List[str]:
    words = symbol.split(RELATION_JOINER)
    tags = [lexicon.tag_of(w) for w in words]
    if tags not in ([VERB], [PREP], [VERB, PREP]):
        raise InexpressibleGraphError(f"relation '{symbol}' is not VERB, PREP or VERB PREP")
    return words


def is_chain(graph: SceneGraph) -> bool:
    expected = [(i, i + 1) for i in range(len(graph.objects) - 1)]
    return [(s, o) for s, _, o in graph.relations] == expected


def realize(graph: SceneGraph, lexicon: Lexicon, max_relations: int = MAX_RELATIONS) -> List[str]:
    """
    Render a chain-shaped graph as a template sentence. The parser reads
    the sentence back into the same graph.
    """
    if not graph.objects:
        raise InexpressibleGraphError("empty graph")
    if len(graph.relations) > max_relations:
        raise InexpressibleGraphError(
            f"{len(graph.relations)} relations exceed the template limit of {max_relations}")
    if not is_chain(graph):
        raise InexpressibleGraphError("graph is not a chain o0 -> o1 -> ... ")

    tokens = []
    for idx, noun in enumerate(graph.objects):
        if lexicon.tag_of(noun) != NOUN:
            raise InexpressibleGraphError(f"object '{noun}' is not a noun")
        adjs = list(graph.attributes_of(idx))
        if len(set(adjs)) != len(adjs):
            raise InexpressibleGraphError(f"object {idx} repeats an attribute")
        for adj in adjs:
            if lexicon.tag_of(adj) != ADJ:
                raise InexpressibleGraphError(f"attribute '{adj}' is not an adjective")
        if idx > 0:
            tokens.extend(_relation_words(graph.relations[idx - 1][1], lexicon))
        first_word = adjs[0] if adjs else noun
        tokens.append(_determiner(first_word, idx == 0))
        tokens.extend(adjs)
        tokens.append(noun)
    return tokens
