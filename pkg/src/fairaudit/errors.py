"""Exception hierarchy shared by every fairaudit module."""


class FairauditError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FairauditError):
    """Invalid data, schema binding, or request parameters.

    The command line maps this to exit code 1.
    """


class ComputationError(FairauditError):
    """A requested quantity could not be computed from valid inputs.

    Raised, for example, when too many bootstrap iterations produce an
    undefined statistic. The command line maps this to exit code 2.
    """
