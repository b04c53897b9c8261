"""Exception hierarchy shared by all cobi modules."""


class CobiError(Exception):
    """Base class for every error raised by cobi."""


class ValidationError(CobiError, ValueError):
    """Input or stored data violates a documented invariant."""


class DimensionError(ValidationError):
    pass


class InvalidSpectrumError(ValidationError):
    pass


class InvalidRotationError(ValidationError):
    pass


class TransformDomainError(CobiError, ValueError):
    """A transform received an input outside its admissible domain."""


class ConfigError(ValidationError):
    pass


class GenerationError(CobiError):
    pass


class ClassificationError(CobiError):
    pass


class IdealNadirError(CobiError):
    pass


class ExperimentError(CobiError):
    pass
