"""Error types that map onto the CLI's exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (exit code 1)."""


class DataError(ValueError):
    """Malformed or inconsistent input data (exit code 2)."""
