"""Exception hierarchy shared by the solver modules."""


class NewtresError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NewtresError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(DomainError):
    """Problem parameters violate a modelling assumption (e.g. 2M >= q)."""


class OutsideDomain(DomainError):
    """A query point is not inside the discretized cross section."""


class NoSignChange(NewtresError):
    """The bracket handed to the root finder does not straddle a root."""


class NoConvergence(NewtresError):
    """An iterative routine hit its iteration or subdivision cap."""


class DegenerateHull(NewtresError):
    """The lifted point cloud has no upper hull with positive volume."""


class DegenerateTriangle(NewtresError):
    """A triangle is too thin to carry a quadrature rule."""


class ConfigError(NewtresError, ValueError):
    """Invalid optimizer settings or unreadable configuration/profile files."""
