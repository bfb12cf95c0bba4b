"""
Closed word list with one part-of-speech tag per word.

File format: ``<word> <TAG>`` per line, ``#`` starts a comment.
"""

from typing import Dict, Iterable, List

from errors import CorpusError

DET = "DET"
ADJ = "ADJ"
NOUN = "NOUN"
VERB = "VERB"
PREP = "PREP"
CONJ = "CONJ"
UNK = "UNK"

TAGS = (DET, ADJ, NOUN, VERB, PREP, CONJ)


class Lexicon:
    def __init__(self, entries: Dict[str, str] = None):
        self._tags: Dict[str, str] = {}
        for word, tag in (entries or {}).items():
            self.add(word, tag)

    def add(self, word: str, tag: str):
        if tag not in TAGS:
            raise CorpusError(f"unknown tag {tag!r} for word {word!r}")
        previous = self._tags.get(word)
        if previous is not None and previous != tag:
            raise CorpusError(f"word {word!r} tagged both {previous} and {tag}")
        self._tags[word] = tag

    def tag_of(self, word: str) -> str:
        return self._tags.get(word, UNK)

    def words(self, tag: str = None) -> List[str]:
        if tag is None:
            return list(self._tags)
        return [w for w, t in self._tags.items() if t == tag]

    def __contains__(self, word) -> bool:
        return word in self._tags

    def __len__(self) -> int:
        return len(self._tags)


def load_lexicon(path) -> Lexicon:
    lexicon = Lexicon()
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read lexicon {path}: {exc}") from exc

    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CorpusError(f"{path}:{line_no}: expected '<word> <TAG>'")
        lexicon.add(parts[0], parts[1])
    return lexicon


def tag(tokens: Iterable[str], lexicon: Lexicon) -> List[str]:
    """One tag per token; words outside the lexicon are tagged UNK."""
    return [lexicon.tag_of(token) for token in tokens]
