from typing import Any, Dict, Optional

from django.conf import settings


class TlsError(Exception):
    """Base class for every failure raised by the TLS toolkit"""
    code = "TlsError"

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form used by error rows and JSON output"""
        return {'error': self.code, 'message': str(self)}


class ModelError(TlsError):
    """Numerical or model failure (CLI exit code 1)"""
    code = "ModelError"


class InvalidInput(ModelError):
    """Raised when input arrays or parameters violate a precondition"""
    code = "InvalidInput"


class SingularSystem(ModelError):
    """Raised when a square system is singular within tolerance"""
    code = "SingularSystem"


class NoSolutionDirection(ModelError):
    """Raised when the last right singular vector has a zero last entry"""
    code = "NoSolutionDirection"


class NonGeneric(ModelError):
    """Raised when the genericity gap is below tolerance"""
    code = "NonGeneric"


class RankDeficient(ModelError):
    """Raised when A does not have full column rank"""
    code = "RankDeficient"


class DegenerateSolution(ModelError):
    """Raised when the TLS solution is (numerically) zero"""
    code = "DegenerateSolution"


class ConsistentSystem(ModelError):
    """Raised when a route needs a nonzero residual but b lies in R(A)"""
    code = "ConsistentSystem"


class TooLarge(ModelError):
    """Raised when an explicit matrix would exceed its size cap"""
    code = "TooLarge"


class AlphaNearOne(ModelError):
    """Raised when sqrt(1 - alpha^2) is too small to divide by"""
    code = "AlphaNearOne"


class NotApplicable(ModelError):
    """Raised when a bound's hypothesis does not hold for the problem"""
    code = "NotApplicable"


class NotAvailable(ModelError):
    """Raised when a bound needs data the problem does not have"""
    code = "NotAvailable"


class NonGenericUnderPerturbation(ModelError):
    """Raised when a finite-difference perturbation breaks genericity"""
    code = "NonGenericUnderPerturbation"


class InsufficientData(ModelError):
    """Raised when too few points survive for a fit"""
    code = "InsufficientData"


class ParseError(TlsError):
    """Raised for unreadable or malformed input files (CLI exit code 2)"""
    code = "ParseError"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = path or '<input>'
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({'path': self.path, 'line': self.line})
        return data


def setting(name: str, default: Any) -> Any:
    """Read a TLSCOND_* setting, falling back when Django is not configured"""
    if not settings.configured:
        return default
    return getattr(settings, name, default)


def error_for(code: str, message: str) -> TlsError:
    """Rebuild the TlsError subclass named by ``code``, e.g. from an error row"""
    pending = [TlsError]
    while pending:
        cls = pending.pop()
        if cls.code == code and cls is not ParseError:
            return cls(message)
        pending.extend(cls.__subclasses__())
    return ModelError(message)
