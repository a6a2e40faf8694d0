"""Convert native wrist-sensor recordings into per-channel CSV directories."""

__version__ = "0.1.0"

from .code_map import DEFAULT_CODE_MAP, VALID_CONDITIONS, parse_code_map
from .convert import ConversionReport, Interval, convert_subject, label_runs, load_native
from .errors import CodeMapError, ConverterError, CorruptFile, UnknownCodeWarning
from .validate import ValidationReport, validate_conversion

__all__ = [
    "ConversionReport",
    "ConverterError",
    "CodeMapError",
    "CorruptFile",
    "DEFAULT_CODE_MAP",
    "Interval",
    "UnknownCodeWarning",
    "VALID_CONDITIONS",
    "ValidationReport",
    "convert_subject",
    "label_runs",
    "load_native",
    "parse_code_map",
    "validate_conversion",
    "__version__",
]
