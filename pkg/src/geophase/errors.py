"""Exception and warning types raised by geophase."""


class GeophaseError(Exception):
    """Base class for all library errors."""


class NumericalError(GeophaseError):
    """A computation could not produce a well-defined number."""


class NonHermitianError(GeophaseError, ValueError):
    def __init__(self, asymmetry):
        self.asymmetry = float(asymmetry)
        super().__init__(f"matrix is not Hermitian (max |M - M^dagger| = {self.asymmetry:.3e})")


class NormalizationError(GeophaseError, ValueError):
    def __init__(self, norm):
        self.norm = float(norm)
        super().__init__(f"state is not normalized (norm = {self.norm!r})")


class ScheduleError(NumericalError):
    """Invalid or non-finite Hamiltonian schedule."""

    def __init__(self, message, segment=None):
        self.segment = segment
        if segment is not None:
            message = f"segment {segment}: {message}"
        super().__init__(message)


class UndefinedPhaseError(NumericalError):
    def __init__(self, overlap):
        self.overlap = float(overlap)
        super().__init__(f"phase undefined: |overlap| = {self.overlap:.3e} is numerically zero")


class GaugeError(NumericalError):
    def __init__(self, trace_integral):
        self.trace_integral = float(trace_integral)
        super().__init__(
            "schedule is not in the traceless gauge: "
            f"integral of Tr H dt = {self.trace_integral:.3e}"
        )


class OpenPathError(NumericalError):
    def __init__(self, gap):
        self.gap = float(gap)
        super().__init__(f"Bloch path is not closed (closure defect {self.gap:.3e})")


class TuningError(NumericalError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class ScenarioError(GeophaseError):
    """Scenario file failed schema validation."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class QuadratureWarning(UserWarning):
    pass


class AdiabaticityWarning(UserWarning):
    pass
