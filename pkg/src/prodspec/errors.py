"""Exception hierarchy shared by all prodspec modules."""


class ProdspecError(Exception):
    """Base class for every error raised by this package."""


class EmptyInput(ProdspecError, ValueError):
    pass


class EncodingError(ProdspecError, ValueError):
    pass


class RootDecompose(ProdspecError):
    pass


class PathError(ProdspecError, LookupError):
    pass


class DegenerateData(ProdspecError, ValueError):
    pass


class FormatError(ProdspecError):
    """A persisted model or data file is malformed or has the wrong version."""


class ShapeError(ProdspecError, ValueError):
    pass


class StaleCache(ProdspecError):
    """backward() was called without a matching train-mode forward()."""


class EmptyCorpus(ProdspecError, ValueError):
    pass


class EmbeddingMismatch(ProdspecError):
    """A coarse model was paired with an embedding table it was not trained on."""


class NoMatch(ProdspecError):
    """No text node in a block matches any seed attribute."""


class RowNotFound(ProdspecError):
    pass


class ValidationError(ProdspecError, ValueError):
    pass
