"""Exception and warning types raised by the solver modules."""


class DEPCAGError(Exception):
    """Base class for all library errors."""


class NumericalFailure(DEPCAGError):
    """A computation could not be completed to the requested accuracy."""


class NonMonotoneMesh(DEPCAGError):
    pass


class OutOfWindow(DEPCAGError):
    pass


class NoTranslationFound(DEPCAGError):
    pass


class IntegratorFailure(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class SingularJn(NumericalFailure):
    def __init__(self, message, n=None, margin=None):
        super().__init__(message)
        self.n = n
        self.margin = margin


class SingularFactor(NumericalFailure):
    pass


class EigenvalueOnUnitCircle(NumericalFailure):
    pass


class NonDiagonalizablePeripheral(NumericalFailure):
    pass


class CertificateViolated(NumericalFailure):
    pass


class WindowTooSmall(DEPCAGError):
    pass


class ResidualExceeded(NumericalFailure):
    pass


class NotAContraction(NumericalFailure):
    pass


class MaxIterExceeded(NumericalFailure):
    pass


class MissingInitialData(DEPCAGError):
    pass


class NotStableCertificate(DEPCAGError):
    pass


class SmallnessViolated(DEPCAGError):
    pass


class ConfigError(DEPCAGError):
    """Invalid configuration; ``field`` names the offending key path."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class InverseIllConditioned(UserWarning):
    pass
