"""Exception hierarchy shared across the package.

Two broad families matter to callers: bad input (CLI exit code 1) and
repository/network trouble (CLI exit code 2).
"""


class LivingArchError(Exception):
    """Base class for every error raised by this package."""


class UserError(LivingArchError):
    """The caller supplied something invalid: bad YAML, bad command, bad arguments."""


class TransportError(LivingArchError):
    """A repository or upstream service could not be reached or refused us."""
