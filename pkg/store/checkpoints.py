"""
Checkpoint container shared by the text and alignment phases:

    {format_version, kind, model_hash, config_text, vocabularies, state}

``state`` is the module's state_dict. Loading refuses a container with a
different format version or model hash.
"""

import logging
import os

import torch

from align.mapping import FeatureAligner
from config import RunConfig, parse_config
from corpus.vocabulary import WordVocabulary
from errors import CheckpointVersionError, MissingInputError
from models.captioner import Captioner
from scenegraph.graph import GraphVocabulary

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TEXT_KIND = "text"
ALIGN_KIND = "align"


def save_checkpoint(path, kind: str, state: dict, config: RunConfig, vocabularies: dict, model_hash: str = None):
    container = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "model_hash": model_hash or config.model_hash(),
        "config_text": config.dump(),
        "vocabularies": vocabularies,
        "state": state,
    }
    torch.save(container, path)
    logger.debug("saved %s checkpoint %s", kind, path)
    return path


def load_checkpoint(path, kind: str, expected_hash: str = None) -> dict:
    if not os.path.exists(path):
        raise MissingInputError(f"checkpoint not found: {path}")
    try:
        container = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointVersionError(f"{path} is not a readable checkpoint: {exc}") from None
    if not isinstance(container, dict) or container.get("format_version") != FORMAT_VERSION:
        found = container.get("format_version") if isinstance(container, dict) else None
        raise CheckpointVersionError(f"{path}: format version {found}, expected {FORMAT_VERSION}")
    if container.get("kind") != kind:
        raise CheckpointVersionError(f"{path}: {container.get('kind')} checkpoint, expected {kind}")
    if expected_hash is not None and container["model_hash"] != expected_hash:
        raise CheckpointVersionError(f"{path}: model hash does not match the current config")
    return container


# ---------------- text phase ----------------

def save_captioner(path, model, config: RunConfig):
    vocabularies = {"graph": model.graph_vocab.to_dict(), "words": model.word_vocab.to_dict()}
    return save_checkpoint(path, TEXT_KIND, model.state_dict(), config, vocabularies)


def load_captioner(path, expected_hash: str = None):
    """
    Rebuild a captioner from its checkpoint; the stored config wins over
    the caller's for every architecture field.

    Returns:
        (model, stored config)
    """
    container = load_checkpoint(path, TEXT_KIND, expected_hash)
    config = parse_config(container["config_text"])
    if container["model_hash"] != config.model_hash():
        raise CheckpointVersionError(f"{path}: stored model hash disagrees with stored config")
    graph_vocab = GraphVocabulary.from_dict(container["vocabularies"]["graph"])
    word_vocab = WordVocabulary.from_dict(container["vocabularies"]["words"])
    model = Captioner(graph_vocab, word_vocab, config)
    model.load_state_dict(container["state"])
    model.eval()
    return model, config


# ---------------- alignment phase ----------------

def save_aligner(path, aligner, config: RunConfig, text_config: RunConfig = None, text_digest: str = None):
    """
    An aligner checkpoint carries the model hash of the text checkpoint it
    was trained against, plus that model's state digest.
    """
    return save_checkpoint(path, ALIGN_KIND, aligner.state_dict(), config,
                           {"gan_kind": config.gan_kind, "disc_out_dim": config.disc_out_dim,
                            "mapping": config.mapping, "cycle_weight": config.cycle_weight,
                            "text_digest": text_digest},
                           model_hash=(text_config or config).model_hash())


def load_aligner(path, expected_hash: str = None, text_digest: str = None):
    container = load_checkpoint(path, ALIGN_KIND, expected_hash)
    if text_digest is not None and container["vocabularies"].get("text_digest") != text_digest:
        raise CheckpointVersionError(f"{path}: aligner was trained against a different text model")
    config = parse_config(container["config_text"])
    aligner = FeatureAligner(config.d_f, config.disc_out_dim, config.mapping,
                             config.disc_hidden_mult, config.mapper_init)
    aligner.load_state_dict(container["state"])
    aligner.eval()
    return aligner, config
