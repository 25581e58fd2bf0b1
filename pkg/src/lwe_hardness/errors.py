"""Exception hierarchy shared by every module."""


class ParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class DomainError(ParameterError):
    """A point lies outside the domain of a density or map."""


class ContractError(RuntimeError):
    """An input violates an operation's precondition (not a bad scalar)."""


class PlanningError(ParameterError):
    """A reduction-plan precondition failed.

    ``predicate`` names the failed predicate so callers (and the CLI) can
    report it verbatim.
    """

    def __init__(self, predicate: str, message: str = ""):
        self.predicate = predicate
        super().__init__(f"{predicate} violated" + (f": {message}" if message else ""))


class StatisticalAlarm(RuntimeError):
    """A stage produced a statistically implausible outcome (e.g. low yield)."""


class FormatError(ValueError):
    """A dataset/batch file is malformed; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")
