"""
Feature mappers and discriminators for the three embedding kinds
(objects, relations, attributes).

Mapping layouts:
    separate  one mapper pair and discriminator pair per kind
    shared    a single mapper pair and discriminator pair reused by all kinds
    single    the three pooled vectors concatenated and mapped as one
"""

import logging
import math
from typing import List, Sequence, Tuple

import torch
import torch.nn as nn

from errors import AlignmentError

KINDS = ("objects", "relations", "attributes")
MAPPINGS = ("separate", "shared", "single")
LEAKY_SLOPE = 0.2
MOMENT_ITERS = 200
# smallest covariance eigenvalue kept, relative to the largest
EIGEN_FLOOR = 1e-3

logger = logging.getLogger(__name__)

Pooled = Tuple[torch.Tensor, torch.Tensor, torch.Tensor]


class Mapper(nn.Module):
    """Fully-connected layer with leaky ReLU, d -> d. A "moments" mapper starts as identity until fitted."""

    def __init__(self, dim: int, init: str = "identity"):
        super().__init__()
        self.linear = nn.Linear(dim, dim)
        self.activation = nn.LeakyReLU(LEAKY_SLOPE)
        if init in ("identity", "moments"):
            with torch.no_grad():
                self.linear.weight.copy_(torch.eye(dim))
                self.linear.bias.zero_()
        elif init != "random":
            raise AlignmentError(f"unknown mapper init {init!r}")

    def forward(self, x):
        return self.activation(self.linear(x))


# ---------------- moment fitting ----------------

def _moments(x: torch.Tensor):
    mean = x.mean(dim=0)
    centered = x - mean
    return mean, centered.T @ centered / x.shape[0]


def _matrix_roots(cov: torch.Tensor):
    """Symmetric square root and inverse square root of a covariance matrix."""
    evals, evecs = torch.linalg.eigh(cov)
    evals = evals.clamp(min=EIGEN_FLOOR * float(evals.max().clamp(min=1e-12)))
    return (evecs * evals.sqrt()) @ evecs.T, (evecs * evals.rsqrt()) @ evecs.T


def leaky_inverse(x: torch.Tensor) -> torch.Tensor:
    return torch.where(x >= 0, x, x / LEAKY_SLOPE)


def affine_moment_map(source: torch.Tensor, target: torch.Tensor):
    """
    Weight and bias of the affine map carrying the mean and covariance
    of ``source`` onto those of ``target``: W = C_t^1/2 C_s^-1/2.
    """
    mean_s, cov_s = _moments(source.double())
    mean_t, cov_t = _moments(target.double())
    _, inv_sqrt_s = _matrix_roots(cov_s)
    sqrt_t, _ = _matrix_roots(cov_t)
    weight = sqrt_t @ inv_sqrt_s
    return weight, mean_t - weight @ mean_s


def fit_moments(mapper: Mapper, source: torch.Tensor, target: torch.Tensor, warm: bool = False,
                max_iter: int = MOMENT_ITERS) -> float:
    """
    Fit ``mapper`` so that mapper(source) has the mean and covariance of
    ``target``. A cold fit starts from the affine map onto the leaky-ReLU
    preimage of the target; a warm fit starts from the current weights.
    Full-batch LBFGS then corrects for the activation.

    Returns:
        the remaining mismatch, scaled by the target's total variance
    """
    source, target = source.detach(), target.detach()
    saved = [p.detach().clone() for p in mapper.parameters()]
    if not warm:
        weight, bias = affine_moment_map(source, leaky_inverse(target))
        with torch.no_grad():
            mapper.linear.weight.copy_(weight)
            mapper.linear.bias.copy_(bias)

    mean_t, cov_t = _moments(target)
    scale = torch.trace(cov_t).clamp(min=1e-12)

    def mismatch():
        mean, cov = _moments(mapper(source))
        return ((mean - mean_t) ** 2).sum() / scale + ((cov - cov_t) ** 2).sum() / scale ** 2

    optimizer = torch.optim.LBFGS(mapper.parameters(), max_iter=max_iter, tolerance_grad=1e-10,
                                  tolerance_change=1e-12, line_search_fn="strong_wolfe")

    def closure():
        optimizer.zero_grad()
        loss = mismatch()
        loss.backward()
        return loss

    optimizer.step(closure)
    optimizer.zero_grad()
    with torch.no_grad():
        residual = mismatch().item()
        if not math.isfinite(residual):
            for p, old in zip(mapper.parameters(), saved):
                p.copy_(old)
            logger.warning("moment fit diverged; mapper weights restored")
            residual = mismatch().item()
    return residual


class Discriminator(nn.Module):
    """Two-layer perceptron; outputs raw scores (logits for BCE, critic values for GP)."""

    def __init__(self, dim: int, out_dim: int, hidden_mult: int = 4):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(dim, hidden_mult * dim),
            nn.LeakyReLU(LEAKY_SLOPE),
            nn.Linear(hidden_mult * dim, out_dim),
        )

    def forward(self, x):
        return self.net(x)


class AlignmentGroup(nn.Module):
    def __init__(self, dim: int, out_dim: int, hidden_mult: int, init: str):
        super().__init__()
        self.image_to_sentence = Mapper(dim, init)
        self.sentence_to_image = Mapper(dim, init)
        self.image_disc = Discriminator(dim, out_dim, hidden_mult)
        self.sentence_disc = Discriminator(dim, out_dim, hidden_mult)

    def mapper_parameters(self):
        return list(self.image_to_sentence.parameters()) + list(self.sentence_to_image.parameters())

    def disc_parameters(self):
        return list(self.image_disc.parameters()) + list(self.sentence_disc.parameters())


class FeatureAligner(nn.Module):
    def __init__(self, d_f: int, out_dim: int = 64, mapping: str = "separate", hidden_mult: int = 4,
                 init: str = "identity"):
        super().__init__()
        if mapping not in MAPPINGS:
            raise AlignmentError(f"unknown mapping {mapping!r}; expected one of {MAPPINGS}")
        self.d_f = d_f
        self.mapping = mapping
        n_groups = len(KINDS) if mapping == "separate" else 1
        dim = 3 * d_f if mapping == "single" else d_f
        self.groups = nn.ModuleList(AlignmentGroup(dim, out_dim, hidden_mult, init) for _ in range(n_groups))
        self.register_buffer("trained", torch.tensor(False))

    # ---------------- streams ----------------

    def streams(self, pooled: Sequence[torch.Tensor]) -> List[torch.Tensor]:
        """Split pooled (f_o, f_r, f_a) into the units the mappers work on."""
        if len(pooled) != len(KINDS):
            raise AlignmentError(f"expected {len(KINDS)} feature kinds, got {len(pooled)}")
        for f in pooled:
            if f.shape[-1] != self.d_f:
                raise AlignmentError(f"feature dim {f.shape[-1]} does not match aligner dim {self.d_f}")
        if self.mapping == "single":
            return [torch.cat(list(pooled), dim=-1)]
        return list(pooled)

    def unstream(self, streams: Sequence[torch.Tensor]) -> Pooled:
        if self.mapping == "single":
            return tuple(torch.split(streams[0], self.d_f, dim=-1))
        return tuple(streams)

    def group_for(self, stream_index: int) -> AlignmentGroup:
        return self.groups[stream_index if self.mapping == "separate" else 0]

    def mapper_parameters(self):
        return [p for g in self.groups for p in g.mapper_parameters()]

    def disc_parameters(self):
        return [p for g in self.groups for p in g.disc_parameters()]

    def fit_moments(self, image_pooled: Sequence[torch.Tensor], sentence_pooled: Sequence[torch.Tensor],
                    warm: bool = False) -> List[float]:
        """Moment-fit both mappers of every group; a shared group sees all kinds stacked."""
        images, sentences = self.streams(image_pooled), self.streams(sentence_pooled)
        residuals = []
        for group in self.groups:
            members = [i for i in range(len(images)) if self.group_for(i) is group]
            image_rows = torch.cat([images[i] for i in members], dim=0)
            sentence_rows = torch.cat([sentences[i] for i in members], dim=0)
            residuals.append(fit_moments(group.image_to_sentence, image_rows, sentence_rows, warm))
            fit_moments(group.sentence_to_image, sentence_rows, image_rows, warm)
        return residuals

    # ---------------- inference ----------------

    def map_to_sentence_space(self, pooled: Sequence[torch.Tensor], require_trained: bool = True) -> Pooled:
        """Apply the image-to-sentence mappers to image-side (f_o, f_r, f_a)."""
        if require_trained and not bool(self.trained):
            raise AlignmentError("mappers are untrained; run align first")
        streams = self.streams(pooled)
        return self.unstream([self.group_for(i).image_to_sentence(s) for i, s in enumerate(streams)])


def build_aligner(config) -> FeatureAligner:
    torch.manual_seed(config.seed)
    return FeatureAligner(config.d_f, config.disc_out_dim, config.mapping,
                          config.disc_hidden_mult, config.mapper_init)
