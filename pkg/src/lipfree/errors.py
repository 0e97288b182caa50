"""Exceptions shared across modules."""


class LipfreeError(Exception):
    pass


class SizeLimitExceeded(LipfreeError):
    """A construction would exceed the configured point-count cap."""

    def __init__(self, requested: int, cap: int, what: str = "space"):
        self.requested = requested
        self.cap = cap
        super().__init__(f"{what} needs {requested} points, cap is {cap}")


class DimensionLimit(LipfreeError):
    def __init__(self, dim: int, cap: int):
        self.dim = dim
        self.cap = cap
        super().__init__(f"ambient dimension {dim} exceeds cap {cap}")


DEFAULT_POINT_CAP = 5000
