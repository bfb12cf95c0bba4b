import os

import pytest

from config import ARCHITECTURE_FIELDS, RUN_ROOT_ENV, RunConfig, load_config, parse_config, run_root
from errors import ConfigError, MissingInputError


def test_defaults_validate():
    config = load_config()
    assert config.variant == "att"
    assert config.gan_kind == "gp"
    assert config.disc_out_dim == 64


def test_parse_config_coerces_types():
    config = parse_config("# comment\nseed = 3\nlr = 0.01  # trailing\nlength_normalize = true\nvariant = avg\n")
    assert config.seed == 3
    assert config.lr == 0.01
    assert config.length_normalize is True
    assert config.variant == "avg"


@pytest.mark.parametrize("text", [
    "colour = red",
    "seed = 1\nseed = 2",
    "seed = three",
    "seed",
    "variant = transformer",
    "gan_kind = wgan",
    "disc_out_dim = 7",
    "d_f = 32",
    "beam = 0",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_dump_round_trips():
    config = RunConfig(seed=9, variant="att-shared", lr=0.002, length_normalize=True)
    assert parse_config(config.dump()) == config


def test_model_hash_tracks_architecture_only():
    base = RunConfig()
    assert base.model_hash() == RunConfig(seed=5, lr=1.0).model_hash()
    assert base.model_hash() != RunConfig(variant="avg").model_hash()
    assert "variant" in ARCHITECTURE_FIELDS


def test_load_config_missing(tmp_path):
    with pytest.raises(MissingInputError):
        load_config(tmp_path / "missing.cfg")


def test_run_root_from_environment(monkeypatch):
    monkeypatch.delenv(RUN_ROOT_ENV, raising=False)
    assert run_root() == "runs"
    monkeypatch.setenv(RUN_ROOT_ENV, "/tmp/elsewhere")
    assert run_root() == "/tmp/elsewhere"


def test_desk_config_file(data_dir):
    config = load_config(os.path.join(os.path.dirname(data_dir), "configs", "desk.cfg"))
    assert config.xe_epochs == 30
