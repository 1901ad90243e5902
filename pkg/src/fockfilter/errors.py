"""Exception hierarchy shared by the library and the CLI."""


class FockFilterError(Exception):
    """Base class for numerical failures raised by this package."""


class TruncationError(FockFilterError):
    """The state does not fit into the requested Fock truncation."""


class HeraldingError(FockFilterError):
    """A conditional outcome has (numerically) zero probability."""


class ConvergenceError(FockFilterError):
    """An optimizer failed to produce a trustworthy result."""


class ConfigError(ValueError):
    """Invalid user configuration (bad keys, values or files)."""
