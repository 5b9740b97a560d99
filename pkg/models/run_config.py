# models/run_config.py
import logging
import os
from typing import Dict, Optional

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42


class RunConfig(BaseModel):
    """Settings shared by every CLI subcommand."""
    subcommand: str = ""
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    seed: int = DEFAULT_SEED
    verbosity: str = "INFO"

    @classmethod
    def from_env(cls, seed: Optional[int] = None, verbosity: Optional[str] = None, **kwargs) -> "RunConfig":
        """Build a config, falling back to SENTINEL_SEED / SENTINEL_LOG_LEVEL."""
        env_seed = os.getenv("SENTINEL_SEED")
        if seed is None:
            seed = int(env_seed) if env_seed else DEFAULT_SEED
        verbosity = verbosity or os.getenv("SENTINEL_LOG_LEVEL", "INFO")
        config = cls(seed=seed, verbosity=verbosity.upper(), **kwargs)
        logger.debug("RunConfig initialized with seed %d, verbosity %s", config.seed, config.verbosity)
        return config
