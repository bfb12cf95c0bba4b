import logging
from typing import Callable, List, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from config import RunConfig
from corpus.vocabulary import EOS_ID, PAD_ID, WordVocabulary
from models.decoder import SentenceDecoder
from models.encoder import GraphEncoder
from scenegraph.graph import GraphVocabulary, SceneGraph

logger = logging.getLogger(__name__)

Pooled = Tuple[torch.Tensor, torch.Tensor, torch.Tensor]


def targets_tensor(sentences: Sequence[Sequence[str]], vocab: WordVocabulary, max_len: int) -> torch.Tensor:
    """(B, T) word ids, each row EOS-terminated and PAD-filled."""
    rows = [vocab.encode(tokens, max_len) + [EOS_ID] for tokens in sentences]
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), PAD_ID, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, :len(row)] = torch.tensor(row, dtype=torch.long)
    return out


class Captioner(nn.Module):
    """Scene graph encoder plus sentence decoder sharing one config."""

    def __init__(self, graph_vocab: GraphVocabulary, word_vocab: WordVocabulary, config: RunConfig):
        super().__init__()
        self.graph_vocab = graph_vocab
        self.word_vocab = word_vocab
        self.config = config
        self.encoder = GraphEncoder(graph_vocab, config.d_e, config.d_x, config.unknown_symbols)
        self.decoder = SentenceDecoder(len(word_vocab), config.d_x, config.d_f, config.d_e,
                                       config.d_h, config.variant)

    def pooled_features(self, graphs: Sequence[SceneGraph]) -> Pooled:
        """Attended (f_o, f_r, f_a) per graph."""
        return self.decoder.pool(self.encoder.encode_many(graphs))

    def forward(self, graphs: Sequence[SceneGraph], targets: torch.Tensor) -> torch.Tensor:
        f_ora = self.decoder.fuse(*self.pooled_features(graphs))
        return self.decoder(f_ora, targets)

    def decode_pooled(self, pooled: Pooled, beam: int = 1, max_len: Optional[int] = None) -> List[List[str]]:
        max_len = max_len or self.config.max_len
        with torch.no_grad():
            f_ora = self.decoder.fuse(*pooled)
            if beam == 1:
                ids, _ = self.decoder.greedy_decode(f_ora, max_len)
            else:
                ids = [self.decoder.beam_decode(row, beam, max_len, self.config.length_normalize)[0]
                       for row in f_ora]
        return [self.word_vocab.decode(row) for row in ids]

    def caption(self, graphs: Sequence[SceneGraph], beam: int = 1,
                mapper: Optional[Callable[[Pooled], Pooled]] = None) -> List[List[str]]:
        """
        Caption graphs; ``mapper`` moves image-side pooled features into
        the sentence space before fusion.
        """
        with torch.no_grad():
            pooled = self.pooled_features(graphs)
            if mapper is not None:
                pooled = mapper(pooled)
        return self.decode_pooled(pooled, beam)


def build_captioner(graph_vocab: GraphVocabulary, word_vocab: WordVocabulary, config: RunConfig) -> Captioner:
    torch.manual_seed(config.seed)
    model = Captioner(graph_vocab, word_vocab, config)
    logger.info("captioner: %d graph objects, %d words, %d parameters (%s)",
                len(graph_vocab.objects), len(word_vocab),
                sum(p.numel() for p in model.parameters()), config.variant)
    return model
