"""
Error types raised across the pipeline.

Everything subclasses ValueError so callers that only know about
bad-input errors keep working; the CLI maps ``exit_code`` to the process
exit status.
"""


class PipelineError(ValueError):
    exit_code = 1


# ---------------- scene graphs ----------------

class GraphError(PipelineError):
    """A graph that must be well-formed is not."""


class GraphFormatError(PipelineError):
    """Interchange text could not be parsed."""

    def __init__(self, line_no, field, message):
        self.line_no = line_no
        self.field = field
        super().__init__(f"line {line_no}: field '{field}': {message}")


class SymbolLookupError(PipelineError):
    """A symbol is missing from the graph vocabulary."""


# ---------------- sentence parsing ----------------

class ParseError(PipelineError):
    pass


class NoObjectsError(ParseError):
    pass


class InexpressibleGraphError(PipelineError):
    pass


# ---------------- corpus ----------------

class VocabularyError(PipelineError):
    pass


class CorpusError(PipelineError):
    pass


# ---------------- models ----------------

class DecodeError(PipelineError):
    pass


class AlignmentError(PipelineError):
    pass


# ---------------- metrics ----------------

class MetricError(PipelineError):
    pass


# ---------------- runs ----------------

class MissingInputError(PipelineError):
    exit_code = 3


class ConfigError(PipelineError):
    exit_code = 4


class CheckpointVersionError(PipelineError):
    exit_code = 5
