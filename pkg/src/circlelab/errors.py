"""Exception hierarchy shared by all circlelab modules."""


class CircleLabError(Exception):
    """Base class for all errors raised by circlelab."""


class NotMonotone(CircleLabError):
    """A lift declared invertible has a nonpositive derivative somewhere."""


class NoConvergence(CircleLabError):
    """An iteration exhausted its budget without meeting its tolerance."""


class RationalDetected(CircleLabError):
    """Continued-fraction expansion hit a vanishing remainder."""


class GammaUnderflow(CircleLabError):
    """The certified Diophantine constant fell below the floating floor."""


class TooShort(CircleLabError):
    """An orbit is too short for rotation-number estimation."""


class ResonantDivisor(CircleLabError):
    """A Fourier-mode divisor is numerically zero."""


class CutoffTooSmall(CircleLabError):
    """Spectral data carries significant mass near its mode cutoff."""


class NotPositive(CircleLabError):
    """A quantity required to be strictly positive has a nonpositive value."""


class OutOfDomain(CircleLabError):
    """A point lies outside the declared validity band of a map frame."""


class BandNotFound(CircleLabError):
    """No trapping band was found within the search range."""


class GateRejected(CircleLabError):
    """The graph-transform compatibility conditions reject the parameters."""


class LipBudgetExceeded(CircleLabError):
    """A graph left the declared Lipschitz class."""


class EpsTooLarge(CircleLabError):
    """The first correction step increased the invariance defect."""


class NoSignChange(CircleLabError):
    """A bracketing root-finder was given endpoints of equal sign."""


class NoRoot(CircleLabError):
    """A scalar Newton solve left its validity disc."""


class TaylorUnstable(CircleLabError):
    """Taylor coefficients disagree with their finite-difference check."""


class OrderBlowup(CircleLabError):
    """A normal-form transform grew beyond the perturbative regime."""
