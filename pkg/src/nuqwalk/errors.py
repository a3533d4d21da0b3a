"""Exception types raised across the package."""


class NuqwalkError(Exception):
    """Base class for all package errors."""


class NoExceptionalPoint(NuqwalkError):
    """No finite gain-loss value closes the quasi-energy gap."""


class LatticeOverflow(NuqwalkError):
    """A step would push amplitude past the allocated lattice."""


class SizeMismatch(NuqwalkError):
    pass


class ZeroNorm(NuqwalkError):
    """The raw trace of a density operator vanished or underflowed."""


class InvalidSpectrum(NuqwalkError):
    pass


class InsufficientData(NuqwalkError):
    pass


class FitFailure(NuqwalkError):
    pass


class TooLarge(NuqwalkError):
    """Dense reference requested on a lattice beyond its cost cap."""


class CertificationFailure(NuqwalkError):
    def __init__(self, observable, deviation, detail=""):
        self.observable = observable
        self.deviation = deviation
        msg = f"{observable}: max deviation {deviation:.3e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConfigError(NuqwalkError):
    pass
