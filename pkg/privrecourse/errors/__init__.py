"""
Exception hierarchy for privrecourse.
Every error carries a machine-readable code used in CLI error records.
"""


class PrivRecourseError(Exception):
    """Base class for all privrecourse errors."""

    code = "error"

    def to_record(self) -> dict:
        """Machine-readable error record."""
        return {"code": self.code, "type": type(self).__name__, "message": str(self)}


class ParameterError(PrivRecourseError, ValueError):
    """Invalid argument passed to an operation."""

    code = "invalid_parameter"


class DataError(PrivRecourseError, ValueError):
    """Input data cannot be used by the requested operation."""

    code = "invalid_data"


class TrainingError(PrivRecourseError, RuntimeError):
    """The optimizer failed to make progress."""

    code = "training_diverged"


class ConfigError(PrivRecourseError, ValueError):
    """Experiment configuration could not be parsed or validated."""

    code = "config_error"


class PipelineError(PrivRecourseError, RuntimeError):
    """Failure inside an experiment run."""

    code = "pipeline_error"
