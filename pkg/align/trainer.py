"""
Unpaired feature alignment on frozen encoder features.

The captioner is only used to extract pooled (f_o, f_r, f_a) features
under no_grad; alignment never touches its parameters.
"""

import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd
import torch

from align.losses import cycle_loss, gan_loss_IS, gan_loss_SI, generator_loss
from align.mapping import FeatureAligner, Pooled
from config import RunConfig
from errors import AlignmentError
from scenegraph.graph import SceneGraph

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "epoch", "disc", "gan_IS", "gan_SI", "cyc", "total"]
EXTRACT_BATCH = 256


def extract_features(model, graphs: Sequence[SceneGraph], batch_size: int = EXTRACT_BATCH) -> Pooled:
    """Pooled (f_o, f_r, f_a) for every graph, each (N, d_f), detached."""
    chunks = []
    with torch.no_grad():
        for start in range(0, len(graphs), batch_size):
            chunks.append(model.pooled_features(graphs[start:start + batch_size]))
    return tuple(torch.cat([c[k] for c in chunks], dim=0) for k in range(3))


def _check_streams(name: str, pooled: Pooled, d_f: int):
    if len(pooled) != 3:
        raise AlignmentError(f"{name} features must have three kinds")
    for f in pooled:
        if f.dim() != 2 or f.shape[1] != d_f:
            raise AlignmentError(f"{name} features have shape {tuple(f.shape)}, expected (N, {d_f})")
        if f.shape[0] == 0:
            raise AlignmentError(f"no {name} features")
        if not bool(torch.isfinite(f).all()):
            raise AlignmentError(f"non-finite {name} features")


def _rows(n: int, n_batches: int, batch_size: int, rng) -> list:
    order = rng.permutation(n)
    reps = math.ceil(n_batches * batch_size / n)
    order = np.concatenate([order] + [rng.permutation(n) for _ in range(reps - 1)])
    return [order[i * batch_size:(i + 1) * batch_size] for i in range(n_batches)]


def align_train(image_features: Pooled, sentence_features: Pooled, aligner: FeatureAligner, config: RunConfig):
    """
    Train mappers and discriminators on unpaired feature streams.

    Args:
        image_features: pooled image-side features (f_o, f_r, f_a)
        sentence_features: pooled sentence-side features, unpaired
        aligner: mappers and discriminators, trained in place
        config: GAN kind, cycle weight, optimizer and schedule

    Returns:
        (aligner, per-step log DataFrame)
    """
    _check_streams("image", image_features, aligner.d_f)
    _check_streams("sentence", sentence_features, aligner.d_f)
    torch.manual_seed(config.seed)
    if config.mapper_init == "moments":
        residuals = aligner.fit_moments(image_features, sentence_features)
        logger.info("moment init: residual %s", ", ".join(f"{r:.4g}" for r in residuals))

    betas = (config.align_beta1, config.align_beta2)
    mapper_opt = torch.optim.Adam(aligner.mapper_parameters(), lr=config.align_lr, betas=betas)
    disc_opt = torch.optim.Adam(aligner.disc_parameters(), lr=config.align_lr, betas=betas)

    n_image, n_sentence = image_features[0].shape[0], sentence_features[0].shape[0]
    batch_size = min(config.align_batch_size, n_image, n_sentence)
    n_batches = math.ceil(max(n_image, n_sentence) / batch_size)
    lam = config.cycle_weight

    records, step = [], 0
    for epoch in range(1, config.align_epochs + 1):
        rng = np.random.default_rng([config.seed, epoch])
        image_rows = _rows(n_image, n_batches, batch_size, rng)
        sentence_rows = _rows(n_sentence, n_batches, batch_size, rng)

        for b in range(n_batches):
            step += 1
            images = aligner.streams([f[image_rows[b]] for f in image_features])
            sentences = aligner.streams([f[sentence_rows[b]] for f in sentence_features])

            # ---- discriminators ----
            for _ in range(config.disc_steps):
                disc_total = 0.0
                for i, (img, sen) in enumerate(zip(images, sentences)):
                    group = aligner.group_for(i)
                    with torch.no_grad():
                        fake_s = group.image_to_sentence(img)
                        fake_i = group.sentence_to_image(sen)
                    d_is, _ = gan_loss_IS(sen, fake_s, group.sentence_disc, config.gan_kind, config.gp_weight)
                    d_si, _ = gan_loss_SI(img, fake_i, group.image_disc, config.gan_kind, config.gp_weight)
                    disc_total = disc_total + d_is + d_si
                disc_opt.zero_grad()
                disc_total.backward()
                disc_opt.step()

            # ---- mappers ----
            gan_is, gan_si, cyc = 0.0, 0.0, 0.0
            for i, (img, sen) in enumerate(zip(images, sentences)):
                group = aligner.group_for(i)
                gan_is = gan_is + generator_loss(group.sentence_disc, group.image_to_sentence(img),
                                                 config.gan_kind, config.nonsaturating)
                gan_si = gan_si + generator_loss(group.image_disc, group.sentence_to_image(sen),
                                                 config.gan_kind, config.nonsaturating)
                cyc = cyc + cycle_loss(img, sen, group.image_to_sentence, group.sentence_to_image)
            total = gan_is + gan_si + lam * cyc
            mapper_opt.zero_grad()
            total.backward()
            mapper_opt.step()

            records.append({
                "step": step, "epoch": epoch, "disc": disc_total.item(),
                "gan_IS": gan_is.item(), "gan_SI": gan_si.item(), "cyc": cyc.item(),
                "total": total.item(),
            })

        epoch_log = pd.DataFrame(records[-n_batches:])
        logger.info("align epoch %d: disc %.4f gan_IS %.4f gan_SI %.4f cyc %.4f total %.4f",
                    epoch, *epoch_log[["disc", "gan_IS", "gan_SI", "cyc", "total"]].mean().tolist())

    if config.align_calibrate:
        residuals = aligner.fit_moments(image_features, sentence_features, warm=True)
        logger.info("moment calibration: residual %s", ", ".join(f"{r:.4g}" for r in residuals))
    aligner.trained.fill_(True)
    return aligner, pd.DataFrame(records, columns=LOG_COLUMNS)


def map_to_sentence_space(f_o, f_r, f_a, aligner: FeatureAligner, require_trained: bool = True) -> Pooled:
    with torch.no_grad():
        return aligner.map_to_sentence_space((f_o, f_r, f_a), require_trained)
