"""Exception types shared across the package."""


class CanonplaceError(Exception):
    """Base class for all package-specific errors."""


class GimbalLock(CanonplaceError):
    """Euler encoding requested for a rotation with pitch too close to +-pi/2."""


class DegenerateQuaternion(CanonplaceError):
    """Quaternion block has near-zero norm and cannot be normalized."""


class DegenerateCloud(CanonplaceError):
    """Feature cloud is too degenerate (collinear, coplanar, or collapsed) for the fit."""


class DimensionMismatch(CanonplaceError):
    """Vector dimension does not match the model dimension."""


class MissingObject(CanonplaceError):
    """An object id required by the operation is absent from a scene or model."""


class InsufficientScenes(CanonplaceError):
    """Fewer training scenes than the operation requires."""


class NoViableEncoding(CanonplaceError):
    """Every candidate encoding failed on the given sample set."""


class MissingModel(CanonplaceError):
    """No placement model available for a requested placement step."""


class InvalidTemplate(CanonplaceError):
    """Scene template is unknown or structurally invalid."""


class IoError(CanonplaceError):
    """Dataset or model file could not be read or written."""


class SchemaVersionMismatch(CanonplaceError):
    """File declares a schema version this code does not understand."""
