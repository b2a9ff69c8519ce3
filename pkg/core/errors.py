"""Excepciones del laboratorio.

Todas heredan de ``LabError`` para que la capa CLI pueda convertirlas en un
documento de error estructurado y un código de salida.
"""


class LabError(Exception):
    """Base error carrying a machine-readable ``details`` mapping."""

    kind = 'lab_error'
    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {'error': self.message, 'kind': self.kind, 'details': self.details}


class DomainError(LabError, ValueError):
    kind = 'domain_error'
    exit_code = 2


class PreconditionError(LabError, ValueError):
    kind = 'precondition_error'
    exit_code = 2


class ConfigError(LabError, ValueError):
    kind = 'config_error'
    exit_code = 2


class AdmissibilityError(LabError):
    """Raised when a boundary fails the (k-1)-convexity certificate."""

    kind = 'admissibility_error'
    exit_code = 2


class SubsolutionError(LabError):
    kind = 'subsolution_error'
    exit_code = 1


class ConvergenceError(LabError):
    """Newton failure; ``details`` keeps the residual trace and stage index."""

    kind = 'convergence_error'
    exit_code = 1
