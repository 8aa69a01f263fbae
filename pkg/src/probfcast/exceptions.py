"""Shared exception types, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration (bad flag value, malformed config file, bad roster)."""


class DataError(ValueError):
    """Invalid or insufficient input data (malformed CSV, empty table, uncovered window)."""
