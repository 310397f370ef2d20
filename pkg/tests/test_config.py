import pytest

from src.config.config import Config
from src.exceptions import ConfigError, ValidationError


def test_integer_settings_fall_back_to_defaults(monkeypatch):
    for name in ("SPECTRAL_CODEC_SEED", "SPECTRAL_CODEC_GL_ITERS", "SPECTRAL_CODEC_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    assert (Config.seed(), Config.gl_iters(), Config.workers()) == (0, 32, 0)


def test_integer_settings_are_parsed(monkeypatch):
    monkeypatch.setenv("SPECTRAL_CODEC_SEED", " 7 ")
    monkeypatch.setenv("SPECTRAL_CODEC_WORKERS", "")
    assert Config.seed() == 7
    assert Config.workers() == 0


def test_malformed_setting_names_the_variable(monkeypatch):
    monkeypatch.setenv("SPECTRAL_CODEC_SEED", "1.5")
    with pytest.raises(ConfigError, match="SPECTRAL_CODEC_SEED") as excinfo:
        Config.seed()
    assert isinstance(excinfo.value, ValidationError)
    assert excinfo.value.value == "1.5"
