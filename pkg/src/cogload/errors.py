"""Exception types shared across the pipeline."""


class CogloadError(Exception):
    """Base class for all pipeline errors."""


# --- ingestion ---------------------------------------------------------------

class MissingFile(CogloadError):
    pass


class MissingData(CogloadError):
    """A required stream file exists but contains no rows."""

    def __init__(self, stream: str):
        self.stream = stream
        super().__init__(f"stream '{stream}' contains no data rows")


class MalformedRow(CogloadError):
    def __init__(self, file: str, line: int, detail: str = ""):
        self.file = file
        self.line = line
        msg = f"{file}:{line}: malformed row"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonMonotonicClock(CogloadError):
    pass


class InvalidSession(CogloadError):
    pass


# --- preprocessing -----------------------------------------------------------

class TooSparse(CogloadError):
    pass


class InvalidCutoff(CogloadError):
    pass


class TooShort(CogloadError):
    pass


class InvalidK(CogloadError):
    pass


# --- features ----------------------------------------------------------------

class TooFewSamples(CogloadError):
    pass


class NonMonotonicTime(CogloadError):
    pass


class NonUniformSampling(CogloadError):
    pass


# --- labels ------------------------------------------------------------------

class InvalidEdges(CogloadError):
    pass


# --- classifiers -------------------------------------------------------------

class DegenerateLabels(CogloadError):
    pass


class NonFiniteInput(CogloadError):
    pass


class SchemaMismatch(CogloadError):
    pass


class WrongKind(CogloadError):
    pass


# --- selection ---------------------------------------------------------------

class UnsatisfiableStratification(CogloadError):
    pass


# --- stats -------------------------------------------------------------------

class LengthMismatch(CogloadError):
    pass


class EmptyInput(CogloadError):
    pass


class InvalidArgs(CogloadError):
    pass


# --- synth / config ----------------------------------------------------------

class InvalidParams(CogloadError):
    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"invalid parameter '{field}': {detail}")


class ConfigError(CogloadError):
    pass
