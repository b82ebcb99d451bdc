import pytest
from pydantic import ValidationError

from app.core.config import Settings


def test_defaults(monkeypatch):
    for name in ("LOG_LEVEL", "ENV", "ORACLE_CAP"):
        monkeypatch.delenv(name, raising=False)
    settings = Settings(_env_file=None)
    assert settings.oracle_cap == 64
    assert settings.checkpoint_name == "checkpoint.npz"
    assert not settings.is_production


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    monkeypatch.setenv("ENV", "production")
    monkeypatch.setenv("VERIFY_MAX_N", "12")
    settings = Settings(_env_file=None)
    assert settings.log_level == "DEBUG"
    assert settings.is_production
    assert settings.verify_max_n == 12


def test_threshold_bounds(monkeypatch):
    monkeypatch.setenv("UNOCCUPIED_THRESHOLD", "2")
    with pytest.raises(ValidationError):
        Settings(_env_file=None)
