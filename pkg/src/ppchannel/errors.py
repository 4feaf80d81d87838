"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ModelError(ValueError):
    """A noise model cannot be built from the given parameters."""


class UnsupportedOperation(NotImplementedError):
    """The requested operation is not defined for this model."""


class ConfigurationError(ValueError):
    """A point configuration or window cannot be generated."""


class ScenarioError(ValueError):
    """A Palm scenario cannot be sampled efficiently."""


class DecodingError(ValueError):
    """Inputs to a decoder have inconsistent shapes or models."""


class ParameterError(ValueError):
    """Bad numeric parameters for a probability or exponent routine."""
