"""Exception types raised across the package."""


class WbcError(Exception):
    """Base class for all package errors."""


class SingularTask(WbcError):
    """The weighted task matrix ``J Q J^T`` is too ill-conditioned to invert."""


class DegenerateGradient(WbcError):
    """The movement-capability gradient is numerically zero."""


class InsufficientData(WbcError):
    """A demonstration is too short to fit a forcing term."""


class ScenarioError(WbcError):
    """A scenario could not be built or run; the message names the field."""


class ParseError(ScenarioError):
    """Scenario text is not valid JSON (or repeats a key)."""


class ValidationError(ScenarioError):
    """A scenario field violates a constraint.

    ``path`` is the dotted field path and ``constraint`` a short name for the
    violated rule (e.g. ``"unit_interval"``).
    """

    def __init__(self, path, constraint, message):
        super().__init__(f"{path}: {message} [{constraint}]")
        self.path = path
        self.constraint = constraint
