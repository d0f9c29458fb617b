"""
Tests for the environment-driven numerical settings
"""

from gaussmac.core.config import Settings, settings
from gaussmac.schemas import OptimizerSettings


def test_defaults():
    fresh = Settings(_env_file=None)
    assert fresh.LOG_LEVEL == "INFO"
    assert fresh.MAX_SENDERS == 16
    assert fresh.FOCK_TAIL_THRESHOLD == 1e-8
    assert fresh.DEFAULT_RAYS == 20


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("OPTIMIZER_STARTS", "3")
    monkeypatch.setenv("FOCK_TAIL_THRESHOLD", "1e-6")
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    fresh = Settings(_env_file=None)
    assert fresh.OPTIMIZER_STARTS == 3
    assert fresh.FOCK_TAIL_THRESHOLD == 1e-6
    assert fresh.LOG_LEVEL == "DEBUG"


def test_dotenv_file_is_read(tmp_path):
    env = tmp_path / ".env"
    env.write_text("DEFAULT_RAYS=7\nSOMETHING_ELSE=ignored\n")
    fresh = Settings(_env_file=env)
    assert fresh.DEFAULT_RAYS == 7
    assert not hasattr(fresh, "SOMETHING_ELSE")


def test_app_fields_are_declared():
    assert set(Settings.model_fields) >= {"APP_NAME", "APP_VERSION", "LOG_LEVEL", "MAX_WORKERS"}
    assert "DEBUG" not in Settings.model_fields


def test_optimizer_defaults_follow_settings(monkeypatch):
    monkeypatch.setattr(settings, "OPTIMIZER_MAXITER", 50)
    assert OptimizerSettings().maxiter == 50
