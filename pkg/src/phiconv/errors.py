"""Exception and warning types.

Every error carries a stable ``kind`` string; the scenario runner copies it
verbatim into reports.
"""


class PhiConvError(Exception):
    kind = "Error"


class InvalidInput(PhiConvError, ValueError):
    kind = "InvalidInput"


class NotPhiConvex(PhiConvError):
    """A field failed the Phi-convexity precondition.

    ``triple`` is the violating ``(a, x, y)`` and ``function_index`` says
    which field of a list failed (``None`` for single-field calls).
    """

    kind = "NotPhiConvex"

    def __init__(self, triple, function_index=None):
        self.triple = tuple(int(i) for i in triple)
        self.function_index = function_index
        where = "" if function_index is None else f"function {function_index}: "
        super().__init__(f"{where}violating triple (a, x, y) = {self.triple}")


class EmptyIntersection(PhiConvError):
    kind = "EmptyIntersection"


class NoExposedPoint(PhiConvError):
    kind = "NoExposedPoint"


class NoExtremalMaximizer(PhiConvError):
    # only reachable when the convexity check is switched off
    kind = "NoExtremalMaximizer"


class PointNotMaximizer(PhiConvError):
    kind = "PointNotMaximizer"

    def __init__(self, function_index, point):
        self.function_index = function_index
        self.point = point
        super().__init__(f"function {function_index} does not attain its maximum at {point}")


class BadEpsilon(PhiConvError, ValueError):
    kind = "BadEpsilon"


class DegenerateGap(PhiConvError):
    kind = "DegenerateGap"


class MalformedProblem(PhiConvError, ValueError):
    kind = "MalformedProblem"


class IterationLimit(PhiConvError):
    kind = "IterationLimit"


class RankDeficient(PhiConvError):
    kind = "RankDeficient"


class SolverDidNotConverge(PhiConvError):
    kind = "SolverDidNotConverge"


class ScenarioError(PhiConvError):
    """Scenario parse/validation failure; ``path`` is the offending key path."""

    kind = "ScenarioError"

    def __init__(self, path, message, kind=None):
        self.path = path
        if kind is not None:
            self.kind = kind
        super().__init__(f"{path}: {message}" if path else message)


class NonSeparatingFamily(UserWarning):
    """The family does not separate the points of the domain."""

    kind = "NonSeparatingFamily"
