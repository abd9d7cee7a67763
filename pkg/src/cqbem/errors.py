"""Exception types shared across the package."""


class CqbemError(Exception):
    """Base class for all package-specific failures."""


class MeshError(CqbemError):
    """Problem with surface mesh data."""


class MeshFormatError(MeshError):
    """Mesh file could not be parsed, or uses an unsupported element."""


class MeshTopologyError(MeshError):
    """Surface is not a closed orientable 2-manifold."""


class ConfigError(CqbemError):
    """Simulation configuration is malformed or inconsistent."""


class ClearanceError(CqbemError):
    """Evaluation point violates the minimum distance to the surface."""


class ContourError(CqbemError):
    """Convolution-quadrature contour is misconfigured."""


class MarchError(CqbemError):
    """Time-marching system could not be set up or solved."""
