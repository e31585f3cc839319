"""
Pipeline error hierarchy.

Every failure a stage can detect is raised as a PipelineError carrying a
machine-parseable code and the process exit code the CLI should use.
"""

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class PipelineError(Exception):
    """Base error for every stage. `code` is stable and machine-parseable."""

    code = "PipelineError"
    exit_code = EXIT_DATA

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def as_line(self) -> str:
        # single line, no embedded newlines
        detail = " ".join(self.detail.split())
        return f"error={self.code} message={detail}"


class MissingColumn(PipelineError):
    code = "MissingColumn"


class EmptyFile(PipelineError):
    code = "EmptyFile"


class EmptyInput(PipelineError):
    code = "EmptyInput"


class DegenerateGraph(PipelineError):
    code = "DegenerateGraph"


class EmptyWindow(PipelineError):
    code = "EmptyWindow"


class MisalignedInputs(PipelineError):
    code = "MisalignedInputs"


class ClassTooSmall(PipelineError):
    code = "ClassTooSmall"


class InvalidSplit(PipelineError):
    code = "InvalidSplit"


class SingleClassTrain(PipelineError):
    code = "SingleClassTrain"


class EmptyTest(PipelineError):
    code = "EmptyTest"


class InvalidRuleFile(PipelineError):
    code = "InvalidRuleFile"


class ConfigError(PipelineError):
    code = "ConfigError"
    exit_code = EXIT_USAGE


class NumericFailure(PipelineError):
    code = "NumericFailure"
    exit_code = EXIT_NUMERIC
