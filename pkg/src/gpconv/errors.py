"""Exception types shared across the package."""


class GpconvError(Exception):
    """Base class for all package-specific failures."""


class ParameterError(GpconvError, ValueError):
    """A kernel or model parameter is outside its legal range."""


class DomainError(GpconvError, ValueError):
    """A hyper-parameter function violated a positivity requirement."""


class EvaluationError(GpconvError, ArithmeticError):
    """A kernel or function evaluation produced a non-finite value."""


class SingularGramError(GpconvError):
    """The regularised Gram matrix could not be factorised."""


class SamplingError(GpconvError):
    """Prior path sampling failed even after adding path jitter."""


class TruncationError(GpconvError):
    """A truncated layer exhausted its rejection budget."""


class MeshError(GpconvError, ValueError):
    """A mesh violated the uniformity or size requirements."""


class UnsupportedKernelError(GpconvError, TypeError):
    """The requested operation does not cover this kernel variant."""


class ConfigError(GpconvError, ValueError):
    """An experiment configuration is malformed."""
