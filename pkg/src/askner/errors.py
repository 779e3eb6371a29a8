"""Exception hierarchy shared across the pipeline.

The CLI maps these onto process exit codes: configuration/argument problems
exit 1, malformed input data exits 2, violated internal invariants exit 3.
"""


class PipelineError(Exception):
    exit_code = 1


class ConfigError(PipelineError):
    """Invalid configuration, bad arguments, or missing input files."""

    exit_code = 1


class DataError(PipelineError):
    """Malformed or internally inconsistent input data."""

    exit_code = 2


class FetchError(DataError):
    """Remote retrieval gave up after the configured number of attempts."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class InternalInvariantError(PipelineError):
    """A stage produced output that violates its own contract; a bug, not bad input."""

    exit_code = 3
