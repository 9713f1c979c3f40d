"""Exception hierarchy shared by all toolchain modules."""


class DccError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DccError):
    """Malformed input document (manifest, tree file, patch text)."""


class SchemaError(DccError):
    """Structurally valid document that violates the manifest schema."""


class DanglingReferenceError(DccError):
    """An id referenced in the manifest is not declared anywhere."""


class CycleError(DccError):
    """The module dependency relation contains a cycle."""


class MarkerError(DccError):
    """Base class for marker-region problems in source text."""


class UnbalancedMarkerError(MarkerError):
    """A begin marker without a matching end marker, or vice versa."""


class NestedMarkerError(MarkerError):
    """A begin marker inside an already-open marked region."""


class ApplyError(DccError):
    """A patch does not apply cleanly to its base tree."""


class ConflictError(DccError):
    """A community patch cannot be ported back unambiguously."""


class ConfigError(DccError):
    """A release configuration references an unknown axis id."""


class DuplicateSocError(DccError):
    """Scaffold target id already exists in the soc vocabulary."""


class UnknownFamilyError(DccError):
    """Scaffold family id is not in the soc vocabulary."""


class PipelineStageError(DccError):
    """Wraps an error raised inside one pipeline stage.

    ``stage`` names the stage that failed so CI logs can attribute the
    failure without unwinding the traceback.
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause
