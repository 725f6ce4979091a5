"""Exception types shared across the package."""


class CertiqpError(Exception):
    """Base class for all package-specific failures."""


class NotPositiveDefinite(CertiqpError):
    """A Cholesky pivot was non-positive: the matrix is not SPD."""


class AsymmetricH(CertiqpError):
    """Quadratic-term matrix is not symmetric within tolerance."""


class NotPSD(CertiqpError):
    """Quadratic-term matrix fails the (shifted) positive-semidefinite check."""


class InvalidParameter(CertiqpError, ValueError):
    """Algorithm parameters outside their admissible region."""


class SingularUpdate(CertiqpError):
    """A rank-1 inverse update hit a (near-)zero denominator.

    Unreachable for well-posed data; raised as a tripwire for
    floating-point corruption rather than being regularized away.
    """


class RankDeficient(CertiqpError):
    """A Gram matrix that must be SPD is numerically rank deficient."""


class InvalidLabels(CertiqpError):
    """Classification labels must all be -1 or +1."""


class InvalidBounds(CertiqpError):
    """Box bounds must satisfy l < u elementwise."""


class Intractable(CertiqpError):
    """Brute-force oracle refused: problem too large to enumerate."""
