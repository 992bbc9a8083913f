"""Exception taxonomy.

Configuration problems (bad descriptors, unresolvable resolutions, invalid
inner-function data) raise ConfigError; numerical failures of an otherwise
well-posed run (Newton stagnation, degree violations, path planning dead
ends) raise SolverError.  The CLI maps the two classes to exit codes 1 and 2.
"""


class CurvforgeError(Exception):
    pass


class ConfigError(CurvforgeError):
    """Invalid configuration or precondition violation."""


class SolverError(CurvforgeError):
    """A numerical stage failed beyond its tolerance contract."""


class LinearSolveError(SolverError):
    pass


class NewtonDivergenceError(SolverError):
    pass


class MonotonicityError(SolverError):
    pass


class OverflowGuardError(ConfigError):
    """Boundary data large enough to overflow exp(2u) in double precision."""


class DegreeViolationError(SolverError):
    """Zero or critical-point count differs from the expected mapping degree."""


class PathPlanningError(SolverError):
    """No integration path with the required pole clearance exists."""


class EvaluationDomainError(ConfigError):
    """Point outside the region where a grid-backed quantity is trustworthy."""
