"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine-raised errors."""


class UniverseMismatch(EngineError):
    """Two values from different universes were combined."""


class InvariantViolation(EngineError):
    """An input violates a structural invariant (bad universe, spec, scenario...)."""


class SizeGuardExceeded(EngineError):
    """A brute-force enumeration would exceed its configured size guard."""


class InternalConsistencyError(EngineError):
    """Two independent computations of the same value disagree: engine defect."""


class Unsolvable(EngineError):
    """An operation was invoked on an instance that has no solution."""
