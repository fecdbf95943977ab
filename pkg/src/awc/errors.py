"""Exception hierarchy shared by every role."""


class AWCError(Exception):
    """Base class for all errors raised by this package."""


class DegreeError(AWCError):
    """A polynomial degree or set size exceeds the published power ladder."""


class NotCoprimeError(AWCError):
    """The polynomials handed to a Bezout computation share a common factor.

    For the prover this means the claimed intersection was not maximal, which
    an honest server on a consistent index never produces.
    """

    def __init__(self, gcd):
        super().__init__(f"gcd has degree {len(gcd) - 1}, expected 1")
        self.gcd = gcd


class AccumulatorError(AWCError):
    """An accumulator input would zero the trapdoor product, or a subset is not contained."""


class DuplicateTermError(AWCError):
    pass


class TermAbsentError(AWCError, KeyError):
    pass


class TermPresentError(AWCError):
    pass


class SignatureError(AWCError):
    pass


class UnknownDocumentError(AWCError, KeyError):
    pass


class CorpusError(AWCError):
    """Ingestion failed, or the corpus is empty after filtering."""


class CapacityError(DegreeError):
    """An update would grow an inverted list past the parameter degree bound."""


class FormatError(AWCError):
    """A serialized artifact could not be decoded."""


class ChecksumMismatch(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class TruncatedFile(FormatError):
    pass
