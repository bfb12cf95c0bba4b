"""
Graph-convolutional scene graph encoder.

Every object is embedded from the relation triplets it takes part in
(subject role through g_s, object role through g_o, averaged over all of
its triplets), every relation from its own triplet through g_r, and every
object's attributes through g_a, averaged per object.

Graphs are batched as a disjoint union: node ids are offset per graph and
per-node sums are scatter-added with ``index_add``. A single graph is the
batch-of-one case.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import torch
import torch.nn as nn

from errors import GraphError, SymbolLookupError
from processing.validator import validate
from scenegraph.graph import GraphVocabulary, SceneGraph

UNKNOWN_POLICIES = ("error", "reserved")
EMBED_INIT_RANGE = 0.1


@dataclass
class GraphBatch:
    n_graphs: int
    object_ids: torch.Tensor       # (N_o,) object symbol ids
    object_graph: torch.Tensor     # (N_o,) owning graph
    rel_subject: torch.Tensor      # (N_r,) global object index
    rel_object: torch.Tensor       # (N_r,)
    rel_ids: torch.Tensor          # (N_r,) relation symbol ids
    rel_graph: torch.Tensor        # (N_r,)
    attr_owner: torch.Tensor       # (N_pairs,) global object index
    attr_ids: torch.Tensor         # (N_pairs,) attribute symbol ids


@dataclass
class GraphFeatures:
    """
    Node-level embeddings for a batch of graphs.

    ``objects`` and ``attributes`` have one row per object (N_a = N_o);
    ``relations`` has one row per relation after self-loop augmentation.
    """
    objects: torch.Tensor
    relations: torch.Tensor
    attributes: torch.Tensor
    object_graph: torch.Tensor
    relation_graph: torch.Tensor
    n_graphs: int

    @property
    def counts(self) -> Tuple[int, int, int]:
        return self.objects.shape[0], self.relations.shape[0], self.attributes.shape[0]

    def padded(self, kind: str) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Returns:
            (features, mask): (B, N_max, d) zero-padded features and a
            (B, N_max) boolean mask of real rows
        """
        if kind == "objects":
            values, owner = self.objects, self.object_graph
        elif kind == "attributes":
            values, owner = self.attributes, self.object_graph
        elif kind == "relations":
            values, owner = self.relations, self.relation_graph
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
        return _pad_by_owner(values, owner, self.n_graphs)


def _pad_by_owner(values, owner, n_graphs):
    counts = torch.bincount(owner, minlength=n_graphs)
    width = max(int(counts.max()) if counts.numel() else 0, 1)
    starts = torch.cumsum(counts, 0) - counts
    position = torch.arange(owner.shape[0]) - starts[owner]
    out = values.new_zeros((n_graphs, width, values.shape[1]))
    out = out.index_put((owner, position), values)
    mask = torch.zeros((n_graphs, width), dtype=torch.bool)
    mask[owner, position] = True
    return out, mask


# ---------------- batching ----------------

def _lookup(lexicon, symbol, policy):
    if symbol in lexicon:
        return lexicon.id_of(symbol)
    if policy == "reserved":
        return 0
    raise SymbolLookupError(f"unknown symbol '{symbol}'")


def batch_graphs(graphs: Sequence[SceneGraph], vocab: GraphVocabulary, unknown: str = "error") -> GraphBatch:
    """
    Turn graphs into index tensors, adding a <self> loop for every object
    in no relation and <none> for every object without attributes.
    """
    if unknown not in UNKNOWN_POLICIES:
        raise ValueError(f"unknown symbol policy {unknown!r}")
    if not graphs:
        raise GraphError("cannot encode an empty batch")

    object_ids, object_graph = [], []
    rel_subject, rel_object, rel_ids, rel_graph = [], [], [], []
    attr_owner, attr_ids = [], []

    offset = 0
    for g_index, graph in enumerate(graphs):
        report = validate(graph)
        if not report.ok:
            raise GraphError(f"graph '{graph.graph_id}': {report}")

        n = len(graph.objects)
        for symbol in graph.objects:
            object_ids.append(_lookup(vocab.objects, symbol, unknown))
            object_graph.append(g_index)

        connected = set()
        for subj, rel, obj in graph.relations:
            rel_subject.append(offset + subj)
            rel_object.append(offset + obj)
            rel_ids.append(_lookup(vocab.relations, rel, unknown))
            rel_graph.append(g_index)
            connected.update((subj, obj))
        for idx in range(n):
            if idx not in connected:
                rel_subject.append(offset + idx)
                rel_object.append(offset + idx)
                rel_ids.append(0)
                rel_graph.append(g_index)

        for idx in range(n):
            attrs = graph.attributes_of(idx)
            if not attrs:
                attr_owner.append(offset + idx)
                attr_ids.append(0)
            for attr in attrs:
                attr_owner.append(offset + idx)
                attr_ids.append(_lookup(vocab.attributes, attr, unknown))
        offset += n

    as_long = lambda xs: torch.tensor(xs, dtype=torch.long)
    return GraphBatch(
        n_graphs=len(graphs),
        object_ids=as_long(object_ids), object_graph=as_long(object_graph),
        rel_subject=as_long(rel_subject), rel_object=as_long(rel_object),
        rel_ids=as_long(rel_ids), rel_graph=as_long(rel_graph),
        attr_owner=as_long(attr_owner), attr_ids=as_long(attr_ids),
    )


# ---------------- encoder ----------------

def _dense(d_in, d_out):
    return nn.Sequential(nn.Linear(d_in, d_out), nn.ReLU())


class GraphEncoder(nn.Module):
    def __init__(self, vocab: GraphVocabulary, d_e: int = 64, d_x: int = 64, unknown: str = "error"):
        super().__init__()
        self.vocab = vocab
        self.unknown = unknown
        self.d_e, self.d_x = d_e, d_x

        self.object_embed = nn.Embedding(len(vocab.objects), d_e)
        self.attribute_embed = nn.Embedding(len(vocab.attributes), d_e)
        self.relation_embed = nn.Embedding(len(vocab.relations), d_e)
        for table in (self.object_embed, self.attribute_embed, self.relation_embed):
            nn.init.uniform_(table.weight, -EMBED_INIT_RANGE, EMBED_INIT_RANGE)

        self.g_s = _dense(3 * d_e, d_x)
        self.g_o = _dense(3 * d_e, d_x)
        self.g_r = _dense(3 * d_e, d_x)
        self.g_a = _dense(2 * d_e, d_x)

    def batch(self, graphs: Sequence[SceneGraph]) -> GraphBatch:
        return batch_graphs(graphs, self.vocab, self.unknown)

    def forward(self, batch: GraphBatch) -> GraphFeatures:
        e_o = self.object_embed(batch.object_ids)
        n_objects = e_o.shape[0]

        triplets = torch.cat([e_o[batch.rel_subject], e_o[batch.rel_object],
                              self.relation_embed(batch.rel_ids)], dim=1)
        x_r = self.g_r(triplets)

        x_o = e_o.new_zeros((n_objects, self.d_x))
        x_o = x_o.index_add(0, batch.rel_subject, self.g_s(triplets))
        x_o = x_o.index_add(0, batch.rel_object, self.g_o(triplets))
        n_r = e_o.new_zeros(n_objects)
        ones = e_o.new_ones(batch.rel_ids.shape[0])
        n_r = n_r.index_add(0, batch.rel_subject, ones).index_add(0, batch.rel_object, ones)
        x_o = x_o / n_r.unsqueeze(1)

        pairs = torch.cat([e_o[batch.attr_owner], self.attribute_embed(batch.attr_ids)], dim=1)
        x_a = e_o.new_zeros((n_objects, self.d_x)).index_add(0, batch.attr_owner, self.g_a(pairs))
        n_a = e_o.new_zeros(n_objects).index_add(0, batch.attr_owner, e_o.new_ones(pairs.shape[0]))
        x_a = x_a / n_a.unsqueeze(1)

        return GraphFeatures(x_o, x_r, x_a, batch.object_graph, batch.rel_graph, batch.n_graphs)

    def encode_many(self, graphs: Sequence[SceneGraph]) -> GraphFeatures:
        return self(self.batch(graphs))

    def encode(self, graph: SceneGraph) -> GraphFeatures:
        return self.encode_many([graph])

