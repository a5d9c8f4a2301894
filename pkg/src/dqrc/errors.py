"""Exception types shared across the package.

The CLI maps these onto stable exit codes (data 2, config 3, service 4),
so anything user-facing should raise one of the classes below rather than
a bare Exception.
"""


class DataError(Exception):
    """Malformed or missing input data (files, columns, splits)."""


class DegenerateRangeError(DataError):
    """Min-max normalization over a constant range is undefined."""


class ConfigError(Exception):
    """An experiment configuration violates an architecture invariant."""


class CapacityError(Exception):
    """Requested simulation exceeds the supported qubit budget."""


class WorkerError(Exception):
    """A worker returned an error response or the transport failed."""
