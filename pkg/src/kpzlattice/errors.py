"""Exception types shared across the package."""


class KPZError(Exception):
    """Base class for library errors."""


class DomainError(KPZError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class UnsupportedMomentError(KPZError, ValueError):
    pass


class CapacityError(KPZError, MemoryError):
    """A requested computation exceeds the configured size budget."""


class BoundsError(KPZError, IndexError):
    """A query or light cone reaches outside the stored lattice window."""


class InadmissibleRuleError(KPZError, ValueError):
    """The growth rule fails shift equivariance or symmetry."""


class DerivativeError(KPZError, ArithmeticError):
    """Finite-difference derivative extraction was unstable."""


class BlowUpError(KPZError, ArithmeticError):
    """phi was evaluated outside its validated neighbourhood.

    Carries the lattice site where it happened; this usually means N is too
    small for the rule.
    """

    def __init__(self, message, x=None, t=None, value=None, replica=None, seed=None):
        super().__init__(message)
        self.x = x
        self.t = t
        self.value = value
        self.replica = replica
        self.seed = seed


class DesignError(KPZError, ValueError):
    """An invariance comparison mixes configurations with different limits."""


class ConfigError(KPZError, ValueError):
    """Experiment config failed validation; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SampleSizeError(KPZError, ValueError):
    """A statistical test was given too few samples."""
