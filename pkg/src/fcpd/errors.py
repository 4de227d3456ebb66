"""Shared exception types for the fcpd library."""


class FcpdError(Exception):
    """Base class for all fcpd errors."""


class InvalidConfigError(FcpdError):
    """A parameter or parameter combination violates a documented precondition."""


class InvalidDataError(FcpdError):
    """Input data is malformed: non-finite, empty, or the wrong layout."""


class InsufficientDataError(FcpdError):
    """Not enough samples for the requested operation."""


class MissingFeatureError(FcpdError):
    """A rule references a feature that no record can supply."""
