import warnings
from typing import List, Sequence

from nltk.translate.bleu_score import corpus_bleu

from errors import MetricError

Tokens = Sequence[str]


def check_corpus(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]]):
    if not hypotheses:
        raise MetricError("empty hypothesis set")
    if len(hypotheses) != len(references):
        raise MetricError(f"{len(hypotheses)} hypotheses but {len(references)} reference sets")
    for index, refs in enumerate(references):
        if not refs:
            raise MetricError(f"item {index} has no references")


def bleu(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]], n: int = 4) -> float:
    """
    Corpus-level BLEU-n: geometric mean of clipped n-gram precisions
    (uniform weights) times the brevity penalty against the closest
    reference length.

    Args:
        hypotheses: one token list per item
        references: one or more token lists per item
        n: highest n-gram order, 1..4

    Returns:
        score in [0, 1]
    """
    if n not in (1, 2, 3, 4):
        raise MetricError(f"BLEU order must be 1..4, got {n}")
    check_corpus(hypotheses, references)
    weights = tuple(1.0 / n for _ in range(n))
    with warnings.catch_warnings():
        # zero-count n-gram orders are expected on short captions
        warnings.simplefilter("ignore")
        score = corpus_bleu([list(map(list, refs)) for refs in references],
                            [list(h) for h in hypotheses], weights=weights)
    return float(score)


def bleu_table(hypotheses, references) -> List[float]:
    """BLEU-1 through BLEU-4 of one corpus."""
    return [bleu(hypotheses, references, n) for n in (1, 2, 3, 4)]
