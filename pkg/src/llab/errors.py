"""Domain error hierarchy.

Every error carries a stable ``code`` string that the CLI prints on stderr
and that tests match against.
"""


class LlabError(Exception):
    """Base class for all domain errors."""

    code = "LLAB_ERROR"

    def __init__(self, message=""):
        super().__init__(f"{self.code}: {message}" if message else self.code)


class QuadratureNonconverged(LlabError):
    code = "QUADRATURE_NONCONVERGED"


class DivisionDegenerate(LlabError):
    code = "DIVISION_DEGENERATE"


class InvalidGrid(LlabError):
    code = "INVALID_GRID"


class WindowOverlap(LlabError):
    code = "WINDOW_OVERLAP"


class PreconditionKTooSmall(LlabError):
    code = "PRECONDITION_K_TOO_SMALL"


class PreconditionMTooSmall(LlabError):
    code = "PRECONDITION_M_TOO_SMALL"


class InfeasibleT(LlabError):
    code = "INFEASIBLE_T"


class ClusterViolation(LlabError):
    code = "CLUSTER_VIOLATION"


class RootfindFail(LlabError):
    code = "ROOTFIND_FAIL"


class BudgetExceeded(LlabError):
    code = "BUDGET_EXCEEDED"


class InvalidPrime(LlabError):
    code = "INVALID_PRIME"


class CutoffExceeded(LlabError):
    code = "CUTOFF_EXCEEDED"


class SigmaTooSmall(LlabError):
    code = "SIGMA_TOO_SMALL"


class SigmaBelowTheta(LlabError):
    code = "SIGMA_BELOW_THETA"


class PoleProximity(LlabError):
    code = "POLE_PROXIMITY"


class SchemaMismatch(LlabError):
    code = "SCHEMA_MISMATCH"


class ConfigInvalid(LlabError):
    code = "CONFIG_INVALID"


class FileNotFound(LlabError):
    code = "FILE_NOT_FOUND"
