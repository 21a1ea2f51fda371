"""Exception hierarchy shared by the verification engine."""


class VerificationError(Exception):
    """Base class for every error raised by the engine."""


class ConfigurationError(VerificationError, ValueError):
    """The input system is not one the engine can analyse (alphabet mismatch, deadlock, ...)."""


class UnknownStateError(VerificationError, KeyError):
    """A state id that does not belong to the automaton it was looked up in."""

    def __init__(self, automaton: str, state: str):
        super().__init__(f"Unknown state '{state}' in automaton '{automaton}'")
        self.automaton = automaton
        self.state = state

    def __str__(self) -> str:
        return self.args[0]


class PreconditionError(VerificationError):
    """An operation was called with arguments violating its precondition."""


class BoundExceededError(VerificationError):
    """The enumeration oracle refuses a problem larger than its configured bounds."""


class DslError(VerificationError):
    """A system file was rejected; carries the diagnostics explaining why."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(str(first) if first else "invalid system file")
