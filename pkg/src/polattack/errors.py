"""Exception hierarchy. Every error carries a stable ``code`` used by the CLI."""


class PolAttackError(Exception):
    code = "ERROR"


class DomainError(PolAttackError, ValueError):
    code = "DOMAIN"


class EmptyBatchError(DomainError):
    code = "EMPTY_BATCH"


class DegenerateDataError(PolAttackError, ValueError):
    code = "DEGENERATE_DATA"


class DegenerateAttackError(PolAttackError, ValueError):
    code = "DEGENERATE_ATTACK"


class InfeasibleAttackError(PolAttackError, ValueError):
    code = "INFEASIBLE_ATTACK"


class UnphysicalStateError(PolAttackError, ValueError):
    code = "UNPHYSICAL_STATE"


class NoPositiveRateError(PolAttackError, ValueError):
    code = "NO_POSITIVE_RATE"


class SolverError(PolAttackError, RuntimeError):
    code = "SOLVER"


class IdentificationError(PolAttackError, RuntimeError):
    code = "IDENTIFICATION_FAILED"


class ConfigError(PolAttackError, ValueError):
    code = "CONFIG"
