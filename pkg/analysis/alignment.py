import numpy as np
import pandas as pd
from sklearn.metrics.pairwise import euclidean_distances, rbf_kernel

KINDS = ("objects", "relations", "attributes")


def _as_array(x):
    if hasattr(x, "detach"):
        x = x.detach().cpu().numpy()
    return np.asarray(x, dtype=np.float64)


def median_gamma(x) -> float:
    """RBF gamma = 1 / median squared pairwise distance (1.0 when degenerate)."""
    x = _as_array(x)
    d2 = euclidean_distances(x, squared=True)
    off_diagonal = d2[~np.eye(len(x), dtype=bool)]
    median = float(np.median(off_diagonal)) if off_diagonal.size else 0.0
    return 1.0 / median if median > 0 else 1.0


def mmd(x, y, gamma: float = None) -> float:
    """
    Biased squared maximum mean discrepancy with an RBF kernel.

    Args:
        x, y: (n, d) and (m, d) samples
        gamma: kernel width; defaults to the median heuristic on y
    """
    x, y = _as_array(x), _as_array(y)
    if gamma is None:
        gamma = median_gamma(y)
    value = (rbf_kernel(x, x, gamma=gamma).mean() + rbf_kernel(y, y, gamma=gamma).mean()
             - 2 * rbf_kernel(x, y, gamma=gamma).mean())
    return max(float(value), 0.0)


def mmd_table(raw_image, mapped_image, sentence) -> pd.DataFrame:
    """
    MMD to the sentence features before and after mapping, per kind.
    Both columns use the kernel width picked on the sentence features.
    """
    rows = []
    for kind, raw, mapped, sen in zip(KINDS, raw_image, mapped_image, sentence):
        gamma = median_gamma(sen)
        before, after = mmd(raw, sen, gamma), mmd(mapped, sen, gamma)
        rows.append({"kind": kind, "raw": before, "mapped": after,
                     "ratio": after / before if before > 0 else float("nan")})
    return pd.DataFrame(rows, columns=["kind", "raw", "mapped", "ratio"])
