"""Exception hierarchy shared by every stage."""


class AmlfError(Exception):
    """Base class for all errors raised by amlf."""


# data
class MalformedCsv(AmlfError):
    pass


class SingleClass(AmlfError):
    pass


class EmptyDataset(AmlfError):
    pass


class TooFewRows(AmlfError):
    pass


class InvalidK(AmlfError):
    pass


# components / evaluation
class DegenerateInput(AmlfError):
    pass


class SingleClassFold(AmlfError):
    pass


class LengthMismatch(AmlfError):
    pass


class NoSuccessfulRun(AmlfError):
    pass


class InvalidAssignment(AmlfError):
    pass


class UnknownComponent(AmlfError):
    pass


# meta level
class EmptyStore(AmlfError):
    pass


class MissingMetaFeatures(AmlfError):
    pass


class DegenerateTarget(AmlfError):
    pass


class TooFewGroups(AmlfError):
    pass


class SchemaMismatch(AmlfError):
    pass


class EmptyTrainSet(AmlfError):
    pass


class EmptyReplay(AmlfError):
    pass


# statistics
class DegenerateMatrix(AmlfError):
    pass


class UnsupportedK(AmlfError):
    pass


class AllZeroDifferences(AmlfError):
    pass


class MissingBaseline(AmlfError):
    pass


class MissingScore(AmlfError):
    pass


# store / cli
class DuplicateRecord(AmlfError):
    pass


class DigestMismatch(AmlfError):
    pass


class ConfigError(AmlfError):
    pass
