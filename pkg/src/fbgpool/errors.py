"""Exception hierarchy shared by every stage of the pipeline."""


class FbgError(Exception):
    """Base class for all errors raised by fbgpool."""


class NoSeedsError(FbgError):
    pass


class EmptyFigureError(FbgError):
    pass


class NumericalInputError(FbgError):
    pass


class DuplicateBlockError(FbgError):
    pass


class DimensionMismatchError(FbgError):
    pass


class ConfigMismatchError(FbgError):
    pass


class ManifestError(FbgError):
    pass


class MissingFileError(ManifestError):
    def __init__(self, path, what="file"):
        self.path = str(path)
        super().__init__(f"missing {what}: {self.path}")


class EmptySplitError(FbgError):
    pass


class FormatError(FbgError):
    """A binary dump or model file failed to parse."""
