"""Exception hierarchy shared by all mirrorfield modules."""


class MirrorfieldError(Exception):
    """Base class for library errors."""


class DomainError(MirrorfieldError, ValueError):
    """An argument lies outside the region where a quantity is defined."""


class MonotonicityError(DomainError):
    """A null-ray map failed the f' > 0 requirement."""


class KinkError(DomainError):
    """Smooth-point formula requested at a registered kink, or kink is unsupported."""


class NonConvergenceError(MirrorfieldError, RuntimeError):
    """Quadrature, root finding or an iterative solver did not converge."""
