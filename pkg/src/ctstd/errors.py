"""Exception types raised by the standardization pipeline."""


class CtStdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CtStdError):
    """An input object violates a documented invariant."""


class DegenerateHistogram(CtStdError):
    """Adaptive thresholding needs at least two distinct intensity values."""


class EmptyBoundingBox(CtStdError):
    """No lung pixels survived refinement; the scan cannot be cropped."""


class EmptyCell(CtStdError):
    """A (source, class) cell referenced by a metric has no vectors."""

    def __init__(self, source, label, needed=1):
        self.source = source
        self.label = label
        super().__init__(
            f"cell (source={source}, class={label}) has fewer than "
            f"{needed} vector(s)"
        )


class DegenerateSpread(CtStdError):
    """Both pooled classes have zero spread; the score is undefined."""


class UndefinedAUC(CtStdError):
    """AUC requires both classes to be present in the truth labels."""


class VolumeIOError(CtStdError):
    """A scan directory could not be read or written."""


class MixedDimensions(VolumeIOError):
    """Slice images in one scan directory differ in width or height."""


class MixedBitDepth(VolumeIOError):
    """Slice images in one scan directory differ in bit depth."""


class EmbeddingFormatError(CtStdError):
    """The embeddings CSV is malformed; carries the offending line number."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class RaggedRow(EmbeddingFormatError):
    """A CSV row has the wrong number of fields."""
