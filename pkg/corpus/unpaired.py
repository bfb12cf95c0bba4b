from typing import List, Sequence, Tuple

import numpy as np
from sklearn.model_selection import train_test_split

from errors import CorpusError
from scenegraph.graph import SceneGraph


def _sattolo_cycle(n: int, rng) -> np.ndarray:
    """Uniform random n-cycle: a permutation with no fixed point."""
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = rng.integers(0, i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def make_unpaired(pairs: Sequence[Tuple[SceneGraph, List[str]]], seed: int):
    """
    Shuffle images and sentences independently and drop the pairing.

    Sentence order is the image order composed with a random cycle, so no
    position ends up holding its own partner. Image graphs get fresh ids
    that say nothing about the original pair.

    Returns:
        (image graphs, sentences)
    """
    if len(pairs) < 2:
        raise CorpusError("make_unpaired needs at least two pairs")

    rng = np.random.default_rng(seed)
    n = len(pairs)
    image_order = rng.permutation(n)
    sentence_order = image_order[_sattolo_cycle(n, rng)]

    images = [pairs[i][0].with_id(f"img{k}") for k, i in enumerate(image_order)]
    sentences = [list(pairs[i][1]) for i in sentence_order]
    return images, sentences


def split_items(items: Sequence, seed: int, val_fraction: float = 0.1, test_fraction: float = 0.1):
    """Seeded train/val/test split (80/10/10 by default)."""
    items = list(items)
    holdout = val_fraction + test_fraction
    train, rest = train_test_split(items, test_size=holdout, random_state=seed)
    val, test = train_test_split(rest, test_size=test_fraction / holdout, random_state=seed)
    return train, val, test
