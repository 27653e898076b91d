from __future__ import annotations


class ModelError(ValueError):
    """Problem with a model document or the model it describes."""


class ModelSyntaxError(ModelError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class SchemaError(ModelError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationFailed(ModelError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"model has {len(self.violations)} violation(s):\n{lines}")


class UnknownAction(KeyError):
    def __init__(self, action_id: str):
        super().__init__(action_id)
        self.action_id = action_id

    def __str__(self):
        return f"unknown action id: {self.action_id!r}"


class ChainError(ValueError):
    pass


class AnalysisOverflow(RuntimeError):
    def __init__(self, action_id: str, bound: int, message: str):
        super().__init__(message)
        self.action_id = action_id
        self.bound = bound


class WindowOverflow(AnalysisOverflow):
    def __init__(self, action_id: str, bound: int, q: int | None = None):
        at = f" at instance {q}" if q is not None else ""
        super().__init__(action_id, bound, f"{action_id}: window exceeded {bound} ticks{at} (no fixed point)")
        self.q = q


class BusyPeriodOverflow(AnalysisOverflow):
    def __init__(self, action_id: str, bound: int):
        super().__init__(action_id, bound, f"{action_id}: busy period longer than {bound} instances")


class NoObservations(LookupError):
    def __init__(self, action_id: str):
        super().__init__(f"no responses recorded for {action_id!r}")
        self.action_id = action_id


class ConfigError(ValueError):
    """Bad RTA_* environment setting."""
