"""
Runtime settings read from the environment.
"""

import os
from dataclasses import dataclass

from topolab.errors import ConfigError

DEFAULT_INDEX_CAP = 10**6
DEFAULT_SEED = 0


@dataclass(frozen=True)
class Settings:
    # Largest number of indices one linear scan may examine, and the
    # largest index a tail-sequence term may be materialized at.
    index_cap: int = DEFAULT_INDEX_CAP
    # Seed for every sampled (non-exhaustive) check.
    seed: int = DEFAULT_SEED


def _read_int(name, default, minimum):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw.strip())
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'") from None
    if value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def load_settings():
    """Build a Settings object from TOPOLAB_* environment variables."""
    return Settings(
        index_cap=_read_int("TOPOLAB_INDEX_CAP", DEFAULT_INDEX_CAP, 1),
        seed=_read_int("TOPOLAB_SEED", DEFAULT_SEED, 0),
    )
