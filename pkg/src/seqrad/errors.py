"""Exception hierarchy shared by all seqrad modules."""


class SeqradError(Exception):
    """Base class for every error raised by the package."""


class MalformedSpec(SeqradError):
    pass


class NonFiniteEntry(SeqradError):
    pass


class DimensionMismatch(SeqradError):
    pass


class StateExplosion(SeqradError):
    pass


class ScaleOverflow(SeqradError):
    pass


class TooLarge(SeqradError):
    pass


class DimensionTooHigh(SeqradError):
    pass


class BudgetExceeded(SeqradError):
    pass


class LengthMismatch(SeqradError):
    pass


class NotPSD(SeqradError):
    pass


class TooFewSamples(SeqradError):
    pass


class NeedTwoFunctions(SeqradError):
    pass


class BadPolicy(SeqradError):
    pass


class SlicesMissing(SeqradError):
    pass
