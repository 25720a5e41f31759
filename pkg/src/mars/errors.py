"""Exception types raised by the ranking engine.

Every invariant violation surfaces as a distinct class so callers can
branch on the failure kind instead of parsing messages.  All of them
derive from MarsError; anything else escaping the package is a bug.
"""


class MarsError(Exception):
    """Base class for all engine errors."""


# -- bundle and file I/O ---------------------------------------------------

class IoFailure(MarsError):
    """File or directory could not be read or written."""


class BadHeader(MarsError):
    """Malformed manifest line, tensor header, or RLE header."""


class MagicMismatch(MarsError):
    """Tensor file does not start with the expected magic bytes."""


class MissingTensor(MarsError):
    """Manifest references a tensor that is absent on disk."""


class ShapeMismatch(MarsError):
    """Array shape or dtype does not match its declared contract."""


class NonFiniteValue(MarsError):
    """A float tensor contains NaN or Inf."""


class InvalidValue(MarsError):
    """A loaded value lies outside its documented domain."""


class RleOverrun(MarsError):
    """Run lengths do not sum to the declared mask area."""


# -- saliency refinement ---------------------------------------------------

class DimMismatch(MarsError):
    """Map size does not match the attention token count."""


class EmptyLayerSelection(MarsError):
    """No attention layers selected for aggregation."""


# -- patch similarity ------------------------------------------------------

class EmptyForeground(MarsError):
    """No foreground patch in any support shot."""


class ZeroNormPatch(MarsError):
    """A patch feature vector has zero norm and cannot be normalized."""


# -- optimal transport -----------------------------------------------------

class UnbalancedProblem(MarsError):
    """Supply and demand masses do not both sum to one."""


class InfeasibleZeroMass(MarsError):
    """Supply or demand side carries no mass at all."""


class TooLarge(MarsError):
    """Problem exceeds the size cap of the exact oracle."""


class EmptyProposalMask(MarsError):
    """Proposal covers no patch cell, so no demand can be built."""


# -- scoring ---------------------------------------------------------------

class EmptyUnion(MarsError):
    """Union of proposal masks covers no patch cell."""


class EmptyPatchMask(MarsError):
    """Proposal mask is empty on the patch grid."""


class ZeroEmbedding(MarsError):
    """An embedding vector has zero norm."""


class NoComponents(MarsError):
    """Score fusion requested with every component disabled."""


# -- selection and evaluation ----------------------------------------------

class EmptyInput(MarsError):
    """Operation requires at least one element."""
