"""Exception hierarchy shared across the package.

``ScenegenError`` is the base for everything the CLI maps to a nonzero
exit status; subclasses are grouped by subsystem.
"""


class ScenegenError(Exception):
    """Base class for all domain errors."""


# --- scene graph ingestion / editing -----------------------------------

class MalformedFile(ScenegenError):
    """Graph file does not follow the documented schema."""


class DanglingId(ScenegenError):
    """A triplet references an entity id that is not in the graph."""


class BadBox(ScenegenError):
    """Bounding box has non-positive size or leaves the canvas."""


class UnknownTarget(ScenegenError):
    """An edit or lookup references an id that does not exist."""


class DuplicateId(ScenegenError):
    """AddObject would introduce an entity id that already exists."""


class ValidationFailed(ScenegenError):
    """An operation would produce a graph that fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# --- text encoder -------------------------------------------------------

class IdOutOfRange(ScenegenError):
    """Token id is outside the vocabulary."""


# --- vector quantizer ---------------------------------------------------

class InsufficientData(ScenegenError):
    """Fewer distinct patches than requested codebook size."""


class DimensionMismatch(ScenegenError):
    """Image dimensions do not match the codebook's scale specs."""


class IndexOutOfRange(ScenegenError):
    """Token index is outside the codebook."""


# --- autoregressive model -----------------------------------------------

class ShapeMismatch(ScenegenError):
    """Tensor shapes inconsistent with the model configuration."""


class EmptyDataset(ScenegenError):
    """Training requires at least one example."""


class BundleMismatch(ScenegenError):
    """Checkpoint, codebook and vocabulary are not mutually consistent."""


# --- synthetic domain ----------------------------------------------------

class PlacementFailure(ScenegenError):
    """Could not place the requested objects without overlap."""


class UnknownCategory(ScenegenError):
    """Entity category is not in the domain vocabulary."""


# --- metrics --------------------------------------------------------------

class NotSymmetric(ScenegenError):
    """Matrix expected to be symmetric is not."""


class InsufficientSamples(ScenegenError):
    """Too few samples for covariance estimation."""


class DimMismatch(ScenegenError):
    """Feature sets have different dimensionality."""


class RowNotNormalized(ScenegenError):
    """Class-probability row does not sum to 1."""


class DegenerateLabels(ScenegenError):
    """Classifier training needs at least two distinct classes."""
