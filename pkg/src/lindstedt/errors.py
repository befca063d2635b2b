"""Exception and warning classes shared across the package."""


class LindstedtError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(LindstedtError, ValueError):
    pass


class NormOverflow(LindstedtError, OverflowError):
    """A weighted norm exceeded the range of the working scalar type."""


class ResonanceError(LindstedtError):
    """Base for small-divisor failures."""


class ExactResonance(ResonanceError):
    """Some multiplier ``m_l`` vanished for a nonzero frequency index ``l``."""

    def __init__(self, message, ell=None):
        super().__init__(message)
        self.ell = ell


class NonZeroAverage(LindstedtError):
    """Right-hand side of a cohomology equation has a nonzero mean."""


class MissingOrder(LindstedtError, IndexError):
    pass


class DegeneracyError(LindstedtError):
    """Base for failures of the lower-torus nondegeneracy hypotheses."""


class DegenerateAverage(DegeneracyError):
    """The averaged forcing along ``k_perp`` vanishes identically in beta."""


class NondegeneracyFailure(DegeneracyError):
    pass


class InsufficientData(LindstedtError, ValueError):
    pass


class ConfigError(LindstedtError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NearResonance(UserWarning):
    """A small divisor fell below the warning threshold."""


class CertificateWarning(UserWarning):
    """A solve exceeded the bound implied by a Diophantine certificate."""


class ConservativeMaximal(UserWarning):
    """Maximal tori with ``gamma == 0``: the series is expected to converge."""
