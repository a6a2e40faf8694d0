"""Error and warning types for the converter."""


class ConverterError(Exception):
    """Base class for conversion failures."""


class CorruptFile(ConverterError):
    """The native subject file cannot be deserialized or lacks the
    expected structure."""


class CodeMapError(ConverterError):
    """A code-map file is malformed."""


class UnknownCodeWarning(UserWarning):
    """A label code missing from the code map was encountered; the run is
    mapped to ``other``."""
