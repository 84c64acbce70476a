"""
Exception types shared by the channel, beamforming and harness modules.

Every error the library raises on purpose derives from PassError, so a batch
runner can catch one class per run and keep going. Each class also inherits the
closest built-in (ValueError for bad inputs, ArithmeticError for numerical
breakdown) so callers that only know the built-ins still catch them.
"""


class PassError(Exception):
    pass


class ConfigError(PassError, ValueError):
    """Scenario or experiment parameters violate an invariant."""


class FeasibilityError(PassError, ValueError):
    """A location column lies outside the feasible set of its waveguide."""


class DegeneratePrecoderError(PassError, ArithmeticError):
    """W = 0 where the q-update needs a nonzero precoder."""


class DegenerateReceiverError(PassError, ArithmeticError):
    """m_k = 0 in an uplink SINR evaluation."""


class SingularSystemError(PassError, ArithmeticError):
    """The RZF system matrix is singular (zero regularization)."""


class RankDeficiencyError(PassError, ArithmeticError):
    """A ZF Gram matrix is singular or the array has too few waveguides."""


class NumericalFailure(PassError, ArithmeticError):
    """An objective went non-finite; the partial convergence trace is attached."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
