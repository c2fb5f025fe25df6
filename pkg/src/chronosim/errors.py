"""Exception types shared across the engine."""


class ChronosimError(Exception):
    """Base class for all engine errors."""


class MalformedFactError(ChronosimError):
    """Fact arguments are invalid (e.g. not exactly one time term)."""


class NotAPremiseError(ChronosimError):
    """Attempted to retract a fact that is not an asserted premise."""


class PremiseConflictError(ChronosimError):
    """Attempted to re-assert a premise with the opposite value."""


class DuplicateRuleError(ChronosimError):
    """A rule id was registered twice."""


class UnknownValueError(ChronosimError):
    """Asked to explain a fact that is still unknown."""


class OccupiedSlotError(ChronosimError):
    """Tried to place an action on a state whose slot already holds one."""


class IllegalActionError(ChronosimError):
    """Session action not permitted in the current state."""


class UnsupportedModelError(ChronosimError):
    """The requested time-travel model has no implementation (the merge model)."""


class GodViewDisabledError(ChronosimError):
    """The scenario config does not allow the whole-timeline view."""


class ScenarioError(ChronosimError):
    """Scenario file is missing, malformed, or internally inconsistent."""


class NotApplicableError(ChronosimError):
    """The repair heuristic does not cover this kind of contradiction."""


class RetractionForbiddenError(ChronosimError):
    """Scenario policy protects this premise from retraction."""


class DanglingReferenceError(ChronosimError):
    """An action refers to a person with no incarnation at that time."""

    def __init__(self, message: str, root: str = "", at=None):
        super().__init__(message)
        self.root = root
        self.at = at
