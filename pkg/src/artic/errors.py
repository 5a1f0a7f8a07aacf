"""Exception hierarchy shared across the package."""


class ArticError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ArticError, ValueError):
    """Invalid episode, training, or run configuration."""


class ActionError(ArticError, ValueError):
    """Malformed action vector (wrong shape or non-finite components)."""


class EpisodeFinished(ArticError, RuntimeError):
    """step() called on an episode that already reached its horizon."""


class BackendError(ArticError, RuntimeError):
    """Acoustic backend failed while scoring or synthesizing."""


class EmptyInputError(ArticError, ValueError):
    """An operation that needs at least one frame received none."""


class SegmentTooShort(ArticError, ValueError):
    """Audio range shorter than one analysis window."""


class DegenerateSegmentError(ArticError, ValueError):
    """Segment has no spectral variance, so no embedding exists for it."""


class UndefinedSimilarityError(ArticError, ValueError):
    """Cosine similarity requested against a zero vector."""


class TargetError(ArticError, ValueError):
    """Target source yielded no detectable syllable."""


class ShapeError(ArticError, ValueError):
    """Array argument has the wrong shape or length."""


class NumericError(ArticError, ArithmeticError):
    """Non-finite value produced where a finite one is required."""


class CompatibilityError(ArticError, ValueError):
    """Checkpoint and backend disagree (e.g. embedding dimensions)."""


class ProtocolError(ArticError, RuntimeError):
    """Bridge wire-protocol violation (framing, ids, malformed JSON)."""


class IncompatibleProtocol(ProtocolError):
    """Remote peer speaks an unsupported protocol version."""


class BridgeConnectionError(ArticError, RuntimeError):
    """Could not establish or keep a bridge session."""


class BridgeRemoteError(BackendError):
    """Remote backend answered ok=false."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
