from collections import Counter
from typing import Dict, Iterable, List, Sequence

from errors import DecodeError, VocabularyError
from processing.cleaner import MAX_CAPTION_LENGTH

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)

MIN_WORD_COUNT = 5


class WordVocabulary:
    def __init__(self, words: Sequence[str], min_count: int = MIN_WORD_COUNT):
        self.min_count = min_count
        self.words: List[str] = list(RESERVED) + [w for w in words if w not in RESERVED]
        self._ids: Dict[str, int] = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._ids

    def id_of(self, word: str) -> int:
        return self._ids.get(word, UNK_ID)

    def encode(self, tokens: Iterable[str], max_len: int = MAX_CAPTION_LENGTH) -> List[int]:
        """Word ids without BOS/EOS, truncated to ``max_len``."""
        return [self.id_of(t) for t in list(tokens)[:max_len]]

    def decode(self, ids: Iterable[int]) -> List[str]:
        tokens = []
        for i in ids:
            i = int(i)
            if i == EOS_ID:
                break
            if i in (PAD_ID, BOS_ID):
                continue
            if not 0 <= i < len(self.words):
                raise DecodeError(f"token id {i} outside vocabulary of {len(self.words)}")
            tokens.append(self.words[i])
        return tokens

    def to_dict(self) -> dict:
        return {"words": self.words[len(RESERVED):], "min_count": self.min_count}

    @classmethod
    def from_dict(cls, data: dict) -> "WordVocabulary":
        return cls(data["words"], data["min_count"])

    def __eq__(self, other):
        return isinstance(other, WordVocabulary) and self.words == other.words


def build_vocab(sentences: Iterable[Sequence[str]], min_count: int = MIN_WORD_COUNT) -> WordVocabulary:
    """
    Keep words seen at least ``min_count`` times; the rest read as <unk>.
    Ids are ordered by descending count, then alphabetically.
    """
    counts = Counter()
    n_sentences = 0
    for tokens in sentences:
        n_sentences += 1
        counts.update(t.lower() for t in tokens)
    if n_sentences == 0 or not counts:
        raise VocabularyError("cannot build a vocabulary from an empty corpus")

    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    if not kept:
        raise VocabularyError(f"no word reaches min_count={min_count}")
    return WordVocabulary(kept, min_count)
