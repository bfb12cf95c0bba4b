from typing import Optional, Sequence

import numpy as np

from scenegraph.graph import SceneGraph, to_tuples


def tuple_scores(hyp_graph: SceneGraph, ref_graph: SceneGraph):
    """
    Precision, recall and F1 over exact object/attribute/relation tuples.
    An empty side scores 0.
    """
    hyp, ref = to_tuples(hyp_graph), to_tuples(ref_graph)
    matched = len(hyp & ref)
    precision = matched / len(hyp) if hyp else 0.0
    recall = matched / len(ref) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def spice_lite(hyp_graph: SceneGraph, ref_graph: SceneGraph) -> float:
    return tuple_scores(hyp_graph, ref_graph)["f1"]


def corpus_spice_lite(hyp_graphs: Sequence[Optional[SceneGraph]], ref_graphs: Sequence[SceneGraph]) -> float:
    """Mean SPICE-lite; a caption with no parse (None) scores 0."""
    scores = [spice_lite(h, r) if h is not None else 0.0 for h, r in zip(hyp_graphs, ref_graphs)]
    return float(np.mean(scores)) if scores else 0.0
