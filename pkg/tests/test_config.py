import pytest

from src.config import _env_int
from src.errors import ConfigError

NAME = "RTA_TEST_SETTING"


@pytest.mark.parametrize("raw", ["0", "-3", "four", "2.5"])
def test_env_int_rejects_bad_values(monkeypatch, raw):
    monkeypatch.setenv(NAME, raw)
    with pytest.raises(ConfigError, match=NAME):
        _env_int(NAME, 1)


def test_env_int_defaults_and_parses(monkeypatch):
    monkeypatch.delenv(NAME, raising=False)
    assert _env_int(NAME, 7) == 7

    monkeypatch.setenv(NAME, "  ")
    assert _env_int(NAME, 7) == 7

    monkeypatch.setenv(NAME, "12")
    assert _env_int(NAME, 7) == 12


def test_env_int_minimum(monkeypatch):
    monkeypatch.setenv(NAME, "0")
    assert _env_int(NAME, 5, minimum=0) == 0
