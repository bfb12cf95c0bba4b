"""
Text-modality training: cross-entropy epochs, then self-critical
fine-tuning with a CIDEr-D reward, on (sentence graph, sentence) pairs.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from analysis.cider import CiderD, cider_d
from analysis.summary_generator import exact_match_rate
from config import RunConfig
from errors import CorpusError
from models.captioner import Captioner, targets_tensor
from scenegraph.graph import SceneGraph
from training.losses import scst_loss, self_critical_advantage, xe_loss

logger = logging.getLogger(__name__)

Pair = Tuple[SceneGraph, List[str]]
LOG_COLUMNS = ["phase", "epoch", "lr", "loss", "val_cider_d", "val_exact_match"]


def _batches(n: int, batch_size: int, seed: int, epoch: int):
    order = np.random.default_rng([seed, epoch]).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size].tolist()


def evaluate_pairs(model: Captioner, pairs: Sequence[Pair], beam: int = 1):
    """Held-out CIDEr-D and exact-match rate of the model's captions."""
    graphs = [g for g, _ in pairs]
    references = [[list(s)] for _, s in pairs]
    hypotheses = model.caption(graphs, beam=beam)
    if len(pairs) < 2:
        return 0.0, exact_match_rate(hypotheses, references)
    return cider_d(hypotheses, references)[0], exact_match_rate(hypotheses, references)


def _xe_epoch(model, optimizer, train, config, epoch):
    losses = []
    for rows in _batches(len(train), config.batch_size, config.seed, epoch):
        graphs = [train[i][0] for i in rows]
        targets = targets_tensor([train[i][1] for i in rows], model.word_vocab, config.max_len)
        loss = xe_loss(model(graphs, targets), targets)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        optimizer.step()
        losses.append(loss.item())
    return float(np.mean(losses))


def _rl_epoch(model, optimizer, train, scorer, config, epoch):
    generator = torch.Generator().manual_seed(config.seed * 1000 + epoch)
    losses = []
    for rows in _batches(len(train), config.batch_size, config.seed, epoch):
        graphs = [train[i][0] for i in rows]
        references = [[train[i][1]] for i in rows]
        f_ora = model.decoder.fuse(*model.pooled_features(graphs))

        sampled_ids, logprobs = model.decoder.sample(f_ora, config.max_len, generator)
        greedy_ids, _ = model.decoder.greedy_decode(f_ora.detach(), config.max_len)
        sampled = [model.word_vocab.decode(row.tolist()) for row in sampled_ids]
        greedy = [model.word_vocab.decode(row) for row in greedy_ids]

        advantage = self_critical_advantage(sampled, greedy, references, scorer.score_items)
        loss = scst_loss(logprobs, advantage)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        optimizer.step()
        losses.append(loss.item())
    return float(np.mean(losses))


def train_text(model: Captioner, train: Sequence[Pair], val: Sequence[Pair], config: RunConfig,
               on_epoch: Optional[Callable[[Captioner, dict], None]] = None):
    """
    Train encoder and decoder on text.

    Args:
        model: captioner to train in place
        train: (parsed sentence graph, sentence tokens) pairs
        val: held-out pairs scored after every epoch
        config: schedule, optimizer and seed
        on_epoch: called with (model, log record) after every epoch,
            used for checkpointing

    Returns:
        (model, log DataFrame with one row per epoch)
    """
    if not train:
        raise CorpusError("cannot train on an empty corpus")
    torch.manual_seed(config.seed)

    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr,
                                 betas=(config.adam_beta1, config.adam_beta2), eps=config.adam_eps)
    scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=config.lr_decay_every,
                                                gamma=config.lr_decay)
    scorer = None
    records = []

    total = config.xe_epochs + config.rl_epochs
    for epoch in range(1, total + 1):
        phase = "xe" if epoch <= config.xe_epochs else "rl"
        lr = optimizer.param_groups[0]["lr"]
        if phase == "xe":
            loss = _xe_epoch(model, optimizer, train, config, epoch)
        else:
            if scorer is None:
                scorer = CiderD([[s] for _, s in train])
            loss = _rl_epoch(model, optimizer, train, scorer, config, epoch)
        scheduler.step()

        val_cider, val_exact = evaluate_pairs(model, val) if val else (float("nan"), float("nan"))
        record = {"phase": phase, "epoch": epoch, "lr": lr, "loss": loss,
                  "val_cider_d": val_cider, "val_exact_match": val_exact}
        records.append(record)
        logger.info("%s epoch %d: lr %.3g loss %.4f val CIDEr-D %.3f exact %.3f",
                    phase, epoch, lr, loss, val_cider, val_exact)
        if on_epoch is not None:
            on_epoch(model, record)

    return model, pd.DataFrame(records, columns=LOG_COLUMNS)


def lr_at_epoch(config: RunConfig, epoch: int) -> float:
    """Learning rate in effect during ``epoch`` (1-based)."""
    return config.lr * config.lr_decay ** ((epoch - 1) // config.lr_decay_every)
