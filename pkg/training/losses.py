from typing import Callable, List, Sequence

import torch
import torch.nn.functional as F

from corpus.vocabulary import PAD_ID
from errors import DecodeError, MetricError


def xe_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Cross-entropy of teacher-forced logits.

    Args:
        logits: (B, T, |V|)
        targets: (B, T) ids, PAD positions ignored

    Returns:
        batch mean of the per-sentence summed negative log-likelihood
    """
    vocab_size = logits.shape[-1]
    if bool(((targets < 0) | (targets >= vocab_size)).any()):
        raise DecodeError(f"target id outside vocabulary of {vocab_size}")
    nll = F.cross_entropy(logits.reshape(-1, vocab_size), targets.reshape(-1),
                          ignore_index=PAD_ID, reduction="none")
    return nll.view(targets.shape).sum(dim=1).mean()


def self_critical_advantage(sampled: Sequence[List[str]], greedy: Sequence[List[str]], references,
                            reward_fn: Callable) -> torch.Tensor:
    """
    Reward of each sampled caption minus the reward of the greedy caption
    for the same input.

    Args:
        sampled, greedy: decoded token lists, one per item
        references: reference token lists per item
        reward_fn: (hypotheses, references) -> per-item scores
    """
    try:
        r_sample = reward_fn(sampled, references)
        r_greedy = reward_fn(greedy, references)
    except Exception as exc:
        raise MetricError(f"reward function failed: {exc}") from exc
    return torch.tensor(r_sample, dtype=torch.float64) - torch.tensor(r_greedy, dtype=torch.float64)


def scst_loss(sample_logprobs: torch.Tensor, advantage: torch.Tensor) -> torch.Tensor:
    """
    Self-critical policy-gradient surrogate: its gradient is
    -(r(sample) - r(greedy)) times the gradient of the sample's summed
    log-probability, averaged over the batch.
    """
    advantage = advantage.to(sample_logprobs.dtype).detach()
    return -(advantage * sample_logprobs).mean()
