"""
Adversarial and cycle-consistency losses for feature alignment.

Vector-output discriminators are scored element-wise against an all-one
target for real inputs and an all-zero target for mapped ones, averaged
over elements and batch.
"""

from typing import Callable, Optional, Tuple

import torch
import torch.nn.functional as F

from errors import AlignmentError

GAN_KINDS = ("bce", "mse", "gp")


def _check_finite(*tensors):
    for t in tensors:
        if not bool(torch.isfinite(t).all()):
            raise AlignmentError("non-finite features")


def critic(disc, x: torch.Tensor) -> torch.Tensor:
    """Per-row critic value: the mean over the discriminator's outputs."""
    return disc(x).mean(dim=1)


def gradient_penalty(disc, real: torch.Tensor, fake: torch.Tensor,
                     epsilon: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Mean (||grad critic(x_hat)|| - 1)^2 on random interpolates x_hat."""
    if epsilon is None:
        epsilon = torch.rand((real.shape[0], 1), dtype=real.dtype)
    interpolates = epsilon * real + (1 - epsilon) * fake
    if not interpolates.requires_grad:
        interpolates = interpolates.requires_grad_(True)
    grads, = torch.autograd.grad(critic(disc, interpolates).sum(), interpolates, create_graph=True)
    return ((grads.norm(2, dim=1) - 1) ** 2).mean()


def discriminator_loss(disc, real: torch.Tensor, fake: torch.Tensor, kind: str,
                       gp_weight: float = 10.0, epsilon: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Loss the discriminator minimizes; ``fake`` should already be detached."""
    if kind == "bce":
        d_real, d_fake = disc(real), disc(fake)
        return (F.binary_cross_entropy_with_logits(d_real, torch.ones_like(d_real))
                + F.binary_cross_entropy_with_logits(d_fake, torch.zeros_like(d_fake)))
    if kind == "mse":
        d_real, d_fake = disc(real), disc(fake)
        return F.mse_loss(d_real, torch.ones_like(d_real)) + F.mse_loss(d_fake, torch.zeros_like(d_fake))
    if kind == "gp":
        wasserstein = critic(disc, fake).mean() - critic(disc, real).mean()
        return wasserstein + gp_weight * gradient_penalty(disc, real, fake, epsilon)
    raise AlignmentError(f"unknown GAN loss {kind!r}; expected one of {GAN_KINDS}")


def generator_loss(disc, fake: torch.Tensor, kind: str, nonsaturating: bool = False) -> torch.Tensor:
    """Loss the mapper minimizes to make ``fake`` pass as real."""
    if kind == "bce":
        d_fake = disc(fake)
        if nonsaturating:
            return F.binary_cross_entropy_with_logits(d_fake, torch.ones_like(d_fake))
        # minimax form: minimize mean log(1 - D(fake))
        return -F.binary_cross_entropy_with_logits(d_fake, torch.zeros_like(d_fake))
    if kind == "mse":
        d_fake = disc(fake)
        return F.mse_loss(d_fake, torch.ones_like(d_fake))
    if kind == "gp":
        return -critic(disc, fake).mean()
    raise AlignmentError(f"unknown GAN loss {kind!r}; expected one of {GAN_KINDS}")


def gan_loss_IS(f_real_S: torch.Tensor, f_fake_S: torch.Tensor, disc_S, kind: str,
                gp_weight: float = 10.0, nonsaturating: bool = False,
                epsilon: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Image-to-sentence adversarial loss.

    Args:
        f_real_S: sentence-side features
        f_fake_S: image features mapped into the sentence space
        disc_S: sentence-space discriminator
        kind: bce, mse or gp

    Returns:
        (discriminator loss, generator loss)
    """
    _check_finite(f_real_S, f_fake_S)
    disc_loss = discriminator_loss(disc_S, f_real_S, f_fake_S.detach(), kind, gp_weight, epsilon)
    gen_loss = generator_loss(disc_S, f_fake_S, kind, nonsaturating)
    return disc_loss, gen_loss


def gan_loss_SI(f_real_I: torch.Tensor, f_fake_I: torch.Tensor, disc_I, kind: str,
                gp_weight: float = 10.0, nonsaturating: bool = False,
                epsilon: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """Sentence-to-image mirror of gan_loss_IS."""
    return gan_loss_IS(f_real_I, f_fake_I, disc_I, kind, gp_weight, nonsaturating, epsilon)


def cycle_loss(f_I: torch.Tensor, f_S: torch.Tensor, to_sentence: Callable, to_image: Callable) -> torch.Tensor:
    """Mean absolute reconstruction error after a round trip, for both directions."""
    return ((to_image(to_sentence(f_I)) - f_I).abs().mean()
            + (to_sentence(to_image(f_S)) - f_S).abs().mean())
