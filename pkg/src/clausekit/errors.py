"""Exception and warning types shared across the package."""


class ClausekitError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ClausekitError):
    """Malformed or unusable input data."""


class EmptyAfterCleaning(DataError):
    """Every line of a document was removed by the cleaning rules.

    Usually signals the wrong input file or an over-aggressive rule set.
    """


class EmptyDocument(DataError):
    """A document-level score was requested for zero clauses."""


class LengthMismatch(DataError, ValueError):
    """Two sequences that must be aligned have different lengths."""


class RatioError(DataError, ValueError):
    """Split ratios are malformed (non-positive or do not sum to 1)."""


class NoReplaceableToken(DataError):
    """A clause contains neither a numeric literal nor a comparator phrase,
    so value/operator replacement cannot produce a new example."""


class MissingMeta(DataError):
    """A document score has no matching document metadata entry."""


class DatasetIntegrityError(DataError):
    """Dataset invariant violated (duplicate ids, broken augmentation lineage)."""


class CorpusTooSmall(DataError):
    """The unlabeled domain corpus is below the configured size floor."""


class CheckpointNotFound(ClausekitError):
    """A checkpoint id could not be resolved to a usable model."""


class DivergedTraining(ClausekitError):
    """Training produced a non-finite loss."""


class InvalidConfig(ClausekitError, ValueError):
    """A configuration value violates its invariants."""


class EmptyClassWarning(UserWarning):
    """A category has no examples in the training split."""


class OverlengthWarning(UserWarning):
    """An input text exceeded the padding size and was truncated."""
