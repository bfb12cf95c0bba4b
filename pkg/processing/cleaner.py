import re
from typing import List

MAX_CAPTION_LENGTH = 16

_PUNCTUATION = re.compile(r"[^\w\s]")


def tokenize(sentence: str) -> List[str]:
    """Lowercase, strip punctuation and split on whitespace."""
    return _PUNCTUATION.sub(" ", sentence.lower()).split()


def truncate(tokens: List[str], max_len: int = MAX_CAPTION_LENGTH) -> List[str]:
    return list(tokens[:max_len])


def read_sentences(path) -> List[List[str]]:
    """One sentence per line; blank lines are kept as empty token lists."""
    with open(path, "r", encoding="utf-8") as f:
        return [tokenize(line) for line in f.read().splitlines()]


def write_sentences(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for tokens in sentences:
            f.write(" ".join(tokens) + "\n")
