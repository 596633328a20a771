"""Exception types shared across the package."""


class BlockVisionError(Exception):
    """Base class for all package-specific errors."""


class DegenerateQuad(BlockVisionError):
    """Four points do not form a usable simple quadrilateral."""


class SingularSystem(BlockVisionError):
    """The homography system is rank-deficient and cannot be solved."""


class IncompletePerimeter(BlockVisionError):
    """Fewer than four border lines of the target area were found.

    Carries the partial set of border segments that *were* found so
    callers can report or visualize what is missing.
    """

    def __init__(self, segments, message="incomplete box perimeter"):
        super().__init__(f"{message}: {len(segments)} of 4 border lines found")
        self.segments = list(segments)


class AmbiguousColor(BlockVisionError):
    """No color channel dominates at the sampled block center."""


class InvalidConfig(BlockVisionError):
    """Session configuration violates a hard constraint."""


class OutOfOrderTimestamp(BlockVisionError):
    """A tap timestamp is not strictly after the previous event."""


class TapInPhase(BlockVisionError):
    """A tap arrived in a phase that does not accept taps."""


class NotInFeedbackPhase(BlockVisionError):
    """finalize was called outside the feedback phase."""


class MismatchedLengths(BlockVisionError):
    """Parallel inputs (frames vs. expected multisets) differ in length."""


class DomainError(BlockVisionError):
    """Accuracy inputs outside the supported regime."""


class MalformedLog(BlockVisionError):
    """The session event log cannot be parsed or is inconsistent."""


class PlacementFailure(BlockVisionError):
    """Random scene placement exceeded its rejection budget."""
