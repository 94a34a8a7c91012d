"""Exception types shared by all loopsim modules."""


class LoopsimError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(LoopsimError):
    """A caller-supplied value violates a documented precondition."""


class NotFound(LoopsimError):
    """A referenced id does not exist in the store."""


class ParseError(LoopsimError):
    """A dataset file does not match the canonical TSV schema."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmptyDataset(LoopsimError):
    """An operation that needs events was handed an empty store."""


class UndefinedMetric(LoopsimError):
    """A metric has no defined value for the given input (e.g. all-zero counts)."""


class SimulationAborted(LoopsimError):
    """A simulation run failed; carries the round in which it happened."""

    def __init__(self, round_no: int, cause: Exception):
        super().__init__(f"simulation aborted in round {round_no}: {cause}")
        self.round_no = round_no
        self.cause = cause
