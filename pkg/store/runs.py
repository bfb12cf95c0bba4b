"""
Run directories: file-based storage for every artifact of a pipeline run.

A run directory holds the corpus files, checkpoints, logs and the config
snapshot of every command run in it, so the run can be repeated exactly.
"""

import hashlib
import logging
import os

import pandas as pd

from config import RunConfig, run_root
from errors import MissingInputError

logger = logging.getLogger(__name__)

# ---------------- file names ----------------
TRAIN_SENTENCES = "train_sentences.txt"
TRAIN_IMAGES = "train_images.sg"
VAL_SENTENCES = "val_sentences.txt"
TEST_IMAGES = "test_images.sg"
TEST_REFERENCES = "test_references.txt"
TEST_GRAPHS = "test_graphs.sg"
TEXT_CHECKPOINT = "text.pt"
ALIGN_CHECKPOINT = "align.pt"
TRAIN_LOG = "train_log.tsv"
ALIGN_LOG = "align_log.tsv"
MMD_TABLE = "mmd.tsv"
SEED_FILE = "seed.txt"


def resolve_run_dir(name: str) -> str:
    """A bare name lives under the run root; a path is used as given."""
    if os.path.isabs(name) or os.sep in name:
        return name
    return os.path.join(run_root(), name)


def prepare_run_dir(run_dir: str, config: RunConfig, command: str) -> str:
    """Create the directory and write the config snapshot and seed for ``command``."""
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, f"config.{command}.txt"), "w", encoding="utf-8") as f:
        f.write(config.dump())
    with open(os.path.join(run_dir, SEED_FILE), "w", encoding="utf-8") as f:
        f.write(f"{config.seed}\n")
    logger.info("%s: run directory %s", command, run_dir)
    return run_dir


def run_file(run_dir: str, name: str, must_exist: bool = False) -> str:
    path = os.path.join(run_dir, name)
    if must_exist:
        require(path)
    return path


def require(path: str) -> str:
    if not os.path.exists(path):
        raise MissingInputError(f"missing input file: {path}")
    return path


def write_log(table: pd.DataFrame, path: str) -> str:
    table.to_csv(path, sep="\t", index=False)
    return path


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def state_digest(module) -> str:
    """sha256 over every tensor of a module's state_dict, in key order."""
    h = hashlib.sha256()
    for key, value in sorted(module.state_dict().items()):
        h.update(key.encode())
        h.update(value.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()
