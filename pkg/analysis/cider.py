"""
CIDEr-D: tf-idf weighted n-gram similarity (n = 1..4) between a caption
and its references, with clipped hypothesis weights and a Gaussian
penalty on the length difference, scaled by 10.

Document frequencies come from the reference sets, one document per item.
The length penalty uses token counts.
"""

import logging
import math
import warnings
from collections import Counter, defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from analysis.bleu import check_corpus

logger = logging.getLogger(__name__)

MAX_N = 4
SIGMA = 6.0
SCALE = 10.0


class DegenerateIdfWarning(UserWarning):
    """A corpus of fewer than two items gives every n-gram zero idf."""


def ngram_counts(tokens: Sequence[str], max_n: int = MAX_N) -> Counter:
    counts = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


class CiderD:
    """
    CIDEr-D scorer with document frequencies fixed at construction.

    Args:
        reference_corpus: one list of reference token lists per item
    """

    def __init__(self, reference_corpus: Sequence[Sequence[Sequence[str]]], n: int = MAX_N, sigma: float = SIGMA):
        self.n = n
        self.sigma = sigma
        self.document_frequency: Dict[tuple, float] = defaultdict(float)
        for refs in reference_corpus:
            for ngram in set(g for ref in refs for g in ngram_counts(ref, n)):
                self.document_frequency[ngram] += 1
        self.n_documents = len(reference_corpus)
        if self.n_documents < 2:
            warnings.warn("CIDEr-D on fewer than two items: all idf weights are zero", DegenerateIdfWarning)
            logger.warning("CIDEr-D document frequencies from %d item(s); scores will be 0", self.n_documents)
        self.log_documents = math.log(float(max(self.n_documents, 1)))

    def _vector(self, tokens: Sequence[str]) -> Tuple[List[Dict[tuple, float]], np.ndarray, int]:
        vec = [defaultdict(float) for _ in range(self.n)]
        norm = np.zeros(self.n)
        for ngram, tf in ngram_counts(tokens, self.n).items():
            k = len(ngram) - 1
            df = math.log(max(1.0, self.document_frequency.get(ngram, 0.0)))
            vec[k][ngram] = float(tf) * (self.log_documents - df)
            norm[k] += vec[k][ngram] ** 2
        return vec, np.sqrt(norm), len(tokens)

    def _similarity(self, hyp, ref) -> np.ndarray:
        vec_hyp, norm_hyp, len_hyp = hyp
        vec_ref, norm_ref, len_ref = ref
        delta = float(len_hyp - len_ref)
        val = np.zeros(self.n)
        for k in range(self.n):
            for ngram, weight in vec_hyp[k].items():
                val[k] += min(weight, vec_ref[k][ngram]) * vec_ref[k][ngram]
            if norm_hyp[k] != 0 and norm_ref[k] != 0:
                val[k] /= norm_hyp[k] * norm_ref[k]
            val[k] *= math.e ** (-(delta ** 2) / (2 * self.sigma ** 2))
        return val

    def score_item(self, hypothesis: Sequence[str], references: Sequence[Sequence[str]]) -> float:
        hyp = self._vector(hypothesis)
        total = np.zeros(self.n)
        for ref in references:
            total += self._similarity(hyp, self._vector(ref))
        return float(np.mean(total) / len(references) * SCALE)

    def score_items(self, hypotheses, references) -> List[float]:
        return [self.score_item(h, refs) for h, refs in zip(hypotheses, references)]


def cider_d(hypotheses, references) -> Tuple[float, List[float]]:
    """
    Corpus CIDEr-D with document frequencies from this corpus.

    Returns:
        (mean score, per-item scores), scores in [0, 10]
    """
    check_corpus(hypotheses, references)
    scores = CiderD(references).score_items(hypotheses, references)
    return float(np.mean(scores)), scores
