"""Exception types raised across the package."""


class RoadDiffError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RoadDiffError, ValueError):
    """Two rasters that must share a grid do not."""


class NoSignal(RoadDiffError, ValueError):
    """A mask used for registration has no set pixels."""


class SliceLengthMismatch(RoadDiffError, ValueError):
    """Sub-segment sets sliced with different lengths were compared."""


class MalformedDocument(RoadDiffError, ValueError):
    """Input is not a usable GeoJSON FeatureCollection."""


class EmptyNetwork(RoadDiffError, ValueError):
    """A road document contained no usable line features."""


class UnknownNode(RoadDiffError, KeyError):
    """A node id is not present in the graph."""


class Infeasible(RoadDiffError, ValueError):
    """Pair sampling could not satisfy the requested constraints."""


class NodeMappingFailure(RoadDiffError, LookupError):
    """No node of the target graph lies within the mapping tolerance."""
