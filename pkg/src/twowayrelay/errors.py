"""Exception hierarchy shared by every module of the package."""


class TwrError(Exception):
    """Base class for all package errors."""


class ContractViolation(TwrError, ValueError):
    """An input breaks a documented precondition (shape, symmetry, sign)."""


class NumericFailure(TwrError, ArithmeticError):
    """A numerical routine did not converge or hit a singular system."""


class DegenerateChannelError(TwrError):
    """The channel realization is numerically rank deficient.

    Probability-zero under Rayleigh fading; the harness redraws the trial.
    """
