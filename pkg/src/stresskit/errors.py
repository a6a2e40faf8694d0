"""Exception taxonomy for the stresskit pipeline.

Every error raised by the library derives from StresskitError so callers can
catch one base class at window/fold boundaries.
"""


class StresskitError(Exception):
    """Base class for all stresskit errors."""


# ---------------------------------------------------------------------------
# Dataset ingestion


class IngestError(StresskitError):
    """Problem while reading or validating a subject directory."""

    def __init__(self, message, file=None, line=None):
        loc = ""
        if file is not None:
            loc = f" [{file}" + (f":{line}]" if line is not None else "]")
        super().__init__(message + loc)
        self.file = file
        self.line = line


class MissingFile(IngestError):
    pass


class MalformedHeader(IngestError):
    pass


class MalformedRow(IngestError):
    pass


class NonFiniteSample(IngestError):
    pass


class OverlappingIntervals(IngestError):
    pass


class DurationMismatch(IngestError):
    pass


class OutOfRange(StresskitError):
    """Slice bounds outside the series."""


# ---------------------------------------------------------------------------
# DSP kernels


class DspError(StresskitError):
    pass


class CutoffOutOfRange(DspError):
    pass


class FilterOrderOutOfRange(DspError):
    pass


class UnstableDesign(DspError):
    pass


class SignalTooShort(DspError):
    pass


class EmptyInput(DspError):
    pass


class TooFewSamples(DspError):
    pass


class SegmentTooLong(DspError):
    pass


class ZeroVariance(DspError):
    pass


# ---------------------------------------------------------------------------
# EDA pipeline


class EdaError(StresskitError):
    pass


class TooShort(EdaError):
    pass


class SolverNotConverged(EdaError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"EDA decomposition did not converge after {iterations} iterations "
            f"(primal residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


# ---------------------------------------------------------------------------
# BVP pipeline


class InsufficientBeats(StresskitError):
    """Not enough usable beats in the window; the window is dropped."""


class NoBeatsDetected(InsufficientBeats):
    pass


class TooFewValidBeats(InsufficientBeats):
    pass


# ---------------------------------------------------------------------------
# Windowing / feature matrix


class RecordTooShort(StresskitError):
    pass


class SchemaMismatch(StresskitError):
    pass


# ---------------------------------------------------------------------------
# Models and evaluation


class ShapeMismatch(StresskitError):
    pass


class SingleClassSplit(StresskitError):
    pass


class SingleClassData(StresskitError):
    pass


class SingleClassLabels(StresskitError):
    pass


class TooFewSubjects(StresskitError):
    pass


class CheckpointVersionMismatch(StresskitError):
    pass


class FoldFailure(StresskitError):
    """Training or evaluation failed inside one cross-validation fold."""

    def __init__(self, subject_id: str, cause: Exception):
        super().__init__(f"fold {subject_id}: {cause}")
        self.subject_id = subject_id
        self.cause = cause
