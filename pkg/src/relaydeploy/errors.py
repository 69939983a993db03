"""Exception types raised across the planner."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class MapParseError(PlannerError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScenarioError(PlannerError, ValueError):
    pass


class OutOfBoundsError(PlannerError, IndexError):
    pass


class CapacityError(PlannerError):
    """Not enough reachable free cells to place the requested goals."""


class InvalidSourceError(PlannerError, ValueError):
    pass


class InvalidEndpointError(PlannerError, ValueError):
    pass


class UnreachableError(PlannerError):
    pass


class DescentStallError(PlannerError):
    """Gradient descent could not make progress on a field that should allow it."""


class InfeasibleClusterError(PlannerError):
    pass


class InfeasiblePlanError(PlannerError):
    def __init__(self, message, skipped=()):
        self.skipped = list(skipped)
        super().__init__(message)


class ConnectivityViolation(PlannerError):
    """A goal was completed without a multi-hop link to the base station."""
