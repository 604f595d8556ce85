"""
Shared settings, budgets and deadlines for every iqrewrite command.

Provides the Settings object, config-file loading and the Deadline helper so
commands don't read flags or config files directly.
"""

import os
import time
import logging
from typing import Optional

from dotenv import dotenv_values
from sqlmodel import SQLModel

from errors import UsageError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "iqrewrite.env"


# ---------------------------------------------------------------------------
# Settings: one instance per CLI invocation
# ---------------------------------------------------------------------------
class Settings(SQLModel):
    max_ind: int = 3
    max_extra: int = 2
    deadline: Optional[float] = None
    seed: int = 0
    jobs: int = 1
    target: Optional[str] = None
    max_assertions: Optional[int] = None
    tableau_node_budget: int = 5000
    hom_assignment_budget: int = 200_000
    mmsnp_eval_budget: int = 1 << 22
    equivalence_bound: int = 3

    def override(self, **values) -> "Settings":
        """Copy with every non-None value applied (command-line flags win over the file)."""
        data = self.model_dump()
        data.update({k: v for k, v in values.items() if v is not None and k in data})
        return Settings(**data)


_KEYS = {name.upper(): name for name in Settings.model_fields}


def load_settings(path: Optional[str] = None) -> Settings:
    """Settings from a dotenv-style file: ``path`` if given, else ./iqrewrite.env when present."""
    if path is None:
        if not os.path.exists(DEFAULT_CONFIG_FILE):
            return Settings()
        path = DEFAULT_CONFIG_FILE
    elif not os.path.exists(path):
        raise UsageError(f"config file {path} not found")
    values = dotenv_values(path)
    data = {}
    for key, raw in values.items():
        name = _KEYS.get(key.upper())
        if name is None:
            logger.warning(f"Ignoring unknown config key {key} in {path}")
            continue
        if raw is None or raw == "":
            continue
        data[name] = raw
    try:
        settings = Settings.model_validate(data)
    except ValueError as e:
        raise UsageError(f"invalid config file {path}: {e}") from None
    logger.info(f"Loaded settings from {path}")
    return settings


# ---------------------------------------------------------------------------
# Deadline: polled by bounded searches
# ---------------------------------------------------------------------------
class Deadline:
    """Wall-clock budget on a monotonic clock; ``seconds=None`` never expires."""

    def __init__(self, seconds: Optional[float] = None):
        self.seconds = seconds
        self._start = time.monotonic()

    def remaining(self) -> Optional[float]:
        if self.seconds is None:
            return None
        return max(0.0, self.seconds - (time.monotonic() - self._start))

    def remaining_ms(self) -> Optional[int]:
        left = self.remaining()
        return None if left is None else int(left * 1000)

    def expired(self) -> bool:
        left = self.remaining()
        return left is not None and left <= 0

    @classmethod
    def never(cls) -> "Deadline":
        return cls(None)
