"""Exception types shared across the toolkit."""


class StentKitError(Exception):
    """Base class for all toolkit errors."""


class DegenerateGradientError(StentKitError):
    """Raised when a field gradient is requested at a point on (or numerically
    indistinguishable from) the stent axis."""


class MeshError(StentKitError):
    """Invalid mesh data (bad indices, degenerate faces, non-finite positions)."""


class CenterlineError(StentKitError):
    """Invalid centerline data or an impossible axis selection."""


class ParseError(StentKitError):
    """Malformed or unsupported input document."""


class UnsupportedEncodingError(ParseError):
    """Polydata file uses an encoding outside the supported ASCII subset."""


class ConfigError(ParseError):
    """Deployment configuration violates the schema.

    The message carries the path of the offending field, e.g.
    ``stents[0].target_diameter``.
    """
