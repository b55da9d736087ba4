"""Exception taxonomy shared across the package.

Every failure mode callers are expected to branch on gets its own class so
that `except` clauses (and the CLI's exit-code mapping) never have to parse
message strings.
"""


class SwitchOffError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(SwitchOffError, ValueError):
    """A model parameter is non-finite or outside its admissible range."""


class NonFinite(SwitchOffError, ArithmeticError):
    """A computation produced NaN or infinity."""


class MaxIterationsExceeded(SwitchOffError, RuntimeError):
    """An iterative routine ran out of budget before meeting its tolerance."""


class NotBracketed(SwitchOffError, ValueError):
    """A root finder was given an interval whose endpoints have the same
    strict sign, or a demand outside the reachable energy range."""


class SwitchOffBeforePeak(SwitchOffError, ValueError):
    """A switch-off time earlier than the end of the ramp was requested."""


class QTooSmall(SwitchOffError, ValueError):
    """The demanded energy is below the minimum any admissible switch-off
    time can deliver."""


class DegenerateProfile(SwitchOffError, ValueError):
    """The supply never reaches a positive plateau rate."""


class NonMonotoneSamples(SwitchOffError, ValueError):
    """Tabulated samples are out of order or violate the required
    monotonicity of the ramp/decay rates."""


class ContinuityMismatch(SwitchOffError, ValueError):
    """Profile pieces do not meet: the ramp does not start at zero, the decay
    does not join the plateau, or the decay does not reach zero."""


class EmptySamples(SwitchOffError, ValueError):
    """A tabulated profile was given no samples."""


class StepTooLarge(SwitchOffError, ValueError):
    """The simulation step exceeds the length of a phase it must resolve."""


class MeanVerificationFailed(SwitchOffError, RuntimeError):
    """The Monte-Carlo delivered-energy check fell outside its 4-sigma band,
    which signals a misconfigured simulation."""


class UsageError(SwitchOffError):
    """Bad command line or config file input."""
