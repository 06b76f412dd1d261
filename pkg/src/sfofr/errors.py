"""Exception types shared across the package.

Each class carries a stable ``code`` so the command line layer can map
failures to distinct exit codes and machine-readable error reports.
"""

from __future__ import annotations


class SfofrError(Exception):
    """Base class for all package errors."""

    code = 1
    kind = "error"


class MissingFileError(SfofrError):
    code = 2
    kind = "missing-file"


class SchemaError(SfofrError):
    """Malformed input file: wrong header, bad field, unparsable value."""

    code = 3
    kind = "schema"


class DimensionError(SfofrError):
    """Shapes of otherwise valid inputs do not line up."""

    code = 4
    kind = "dimension-mismatch"


class ConfigError(SfofrError):
    """Invalid configuration value or flag combination."""

    code = 5
    kind = "config"


class CapabilityError(SfofrError):
    """The requested model needs inputs the dataset does not carry."""

    code = 6
    kind = "capability"


class RankDeficiencyError(SfofrError):
    """Input matrix does not have the required rank."""

    code = 4
    kind = "rank-deficiency"


class NumericalError(SfofrError):
    """A numerical routine failed (Cholesky breakdown, singular solve)."""

    code = 1
    kind = "numerical"
