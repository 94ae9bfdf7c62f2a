"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class PacketFormatError(ValueError):
    """A serialized packet is malformed (bad magic, version, or truncation)."""


class PacketProtocolError(ValueError):
    """A packet set is individually valid but mutually inconsistent."""


class GeometryError(ValueError):
    """An anchor layout is degenerate (too few anchors or rank-deficient)."""
