"""Exception hierarchy shared across the package."""


class GlpdecError(Exception):
    """Base class for all package errors."""


class ParseError(GlpdecError):
    """Malformed code file (alist or gldpc text format)."""


class ParameterError(GlpdecError):
    """Invalid argument value (probabilities, degrees, penalty constants, ...)."""


class SizeLimitError(GlpdecError):
    """An enumeration or table cap was exceeded."""


class ConstituentCodeError(GlpdecError):
    """A constituent code violates a structural assumption (e.g. singular Gram)."""


class MergeError(GlpdecError):
    """A merge group exceeds the merged-constituent caps."""


class UnsupportedCodeError(GlpdecError):
    """Operation requires a code class the input does not belong to."""
