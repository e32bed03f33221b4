class LabError(Exception):
    """Base class for every error raised by the lab"""


class StructuralError(LabError, ValueError):
    """Inputs have incompatible shapes: dimension or grid mismatch, off-grid nodes"""


class DomainError(LabError, ValueError):
    """Inputs are well formed but outside the domain of the operation"""


class ConfigError(LabError, ValueError):
    """A run configuration or profile name cannot be resolved"""
