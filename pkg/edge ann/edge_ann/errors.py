"""Exception types raised by edge_ann.

All errors derive from ValueError through EdgeAnnError so callers that only
catch ValueError keep working.
"""


class EdgeAnnError(ValueError):
    pass


class ConfigError(EdgeAnnError):
    """A configuration value is outside its allowed range."""


class VecFormatError(EdgeAnnError):
    """A vector file is malformed (truncated record, inconsistent dim, bad cell)."""


class EmptyDatasetError(EdgeAnnError):
    """A dataset or vector file holds no vectors."""


class VectorIdError(EdgeAnnError, IndexError):
    """A VectorId does not resolve in the VecStore."""


class DimensionMismatchError(EdgeAnnError):
    pass


class DegeneratePlaneError(EdgeAnnError):
    """The hyperplane normal has zero norm."""


class DegenerateAnchorsError(EdgeAnnError):
    """The two anchors are identical vectors."""


class UnsplittableError(EdgeAnnError):
    """Every vector of a subset is identical; no anchor pair exists."""


class EmptyIndexError(EdgeAnnError):
    pass


class IndexFormatError(EdgeAnnError):
    """An index file is not a valid EANN file."""


class TruncatedIndexError(IndexFormatError):
    pass


class StoreMismatchError(EdgeAnnError):
    """A forest is paired with a VecStore it was not built over."""


class SubsetTooLargeError(EdgeAnnError):
    pass
