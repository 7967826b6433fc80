"""Package-level exceptions."""


class ConfigError(Exception):
    """Invalid configuration value, file, or shape."""


class DegenerateBatchError(Exception):
    """Every rollout weight collapsed to zero (non-finite cost batch)."""
