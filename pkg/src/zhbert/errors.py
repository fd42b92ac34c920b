"""Shared exception types and process exit codes."""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_RUNTIME = 5


class ZhbertError(Exception):
    """Base class for errors raised by this package."""

    exit_code = EXIT_RUNTIME


class ConfigError(ZhbertError):
    """A configuration value, config file, or manifest is invalid."""

    exit_code = EXIT_CONFIG


class InputError(ZhbertError):
    """Runtime input is invalid (empty corpus, out-of-range ids, ...)."""

    exit_code = EXIT_INPUT


class NonFiniteGradientError(ZhbertError):
    """An optimizer step received NaN/inf gradients and was rejected."""
