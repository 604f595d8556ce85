"""
Tests for settings loading and deadlines (deps.py).
"""
import pytest

from deps import Deadline, Settings, load_settings
from errors import UsageError


def test_defaults_without_config(tmp_path, monkeypatch):
    """No iqrewrite.env in the working directory means plain defaults."""
    monkeypatch.chdir(tmp_path)
    assert load_settings() == Settings()


def test_config_file_values_are_typed(tmp_path):
    """Keys are matched case-insensitively and validated by the model."""
    path = tmp_path / "custom.env"
    path.write_text("max_ind=4\nDEADLINE=2.5\nJOBS=\n")
    settings = load_settings(str(path))
    assert settings.max_ind == 4
    assert settings.deadline == 2.5
    assert settings.jobs == 1


def test_default_config_file_is_picked_up(tmp_path, monkeypatch):
    """./iqrewrite.env is read when --config is not given."""
    monkeypatch.chdir(tmp_path)
    (tmp_path / "iqrewrite.env").write_text("MAX_EXTRA=5\n")
    assert load_settings().max_extra == 5


def test_unknown_keys_are_ignored(tmp_path, caplog):
    """An unknown key is logged, not fatal."""
    path = tmp_path / "custom.env"
    path.write_text("COLOUR=blue\nSEED=9\n")
    settings = load_settings(str(path))
    assert settings.seed == 9
    assert "Ignoring unknown config key COLOUR" in caplog.text


def test_missing_config_file(tmp_path):
    """An explicit path must exist."""
    with pytest.raises(UsageError):
        load_settings(str(tmp_path / "absent.env"))


def test_invalid_value(tmp_path):
    """A non-integer bound is a usage error."""
    path = tmp_path / "custom.env"
    path.write_text("MAX_IND=many\n")
    with pytest.raises(UsageError):
        load_settings(str(path))


def test_override_skips_none():
    """Flags that were not given keep the file values."""
    base = Settings(max_ind=4)
    merged = base.override(max_ind=None, max_extra=7, unknown=1)
    assert merged.max_ind == 4
    assert merged.max_extra == 7


def test_deadline():
    """None never expires; zero seconds expires at once."""
    assert not Deadline.never().expired()
    assert Deadline.never().remaining() is None
    assert Deadline(0).expired()
    assert Deadline(60).remaining_ms() > 0
