"""Shared exception base for the package.

Concrete error classes live next to the code that raises them; they all
derive from :class:`TwinnerError` so callers (CLI, HTTP service) can map
domain failures to exit codes and status codes in one place.
"""


class TwinnerError(Exception):
    """Base class for all domain errors raised by this package."""
