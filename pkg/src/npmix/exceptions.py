"""Exception types raised across the package."""


class NpmixError(Exception):
    """Base class for all library-specific failures."""


class SupportViolationError(NpmixError, ValueError):
    """A divergence needed q(x) > 0 on the observed support and got zero."""


class DegenerateMeasureError(NpmixError, ValueError):
    """Canonicalization pruned every atom; no probability mass is left."""


class ConfigurationError(NpmixError, ValueError):
    """Inconsistent or unsatisfiable configuration values."""


class NumericalError(NpmixError, RuntimeError):
    """A numerical routine failed to reach its target accuracy."""


class StudyError(NpmixError, RuntimeError):
    """A Monte Carlo study exceeded its failure budget or was misconfigured."""
