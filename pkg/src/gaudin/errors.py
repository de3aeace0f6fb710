"""Exception hierarchy shared across the toolkit."""


class GaudinError(Exception):
    """Base class for all toolkit errors."""


# -- model construction -------------------------------------------------

class DuplicateEpsilon(GaudinError):
    """Two level energies closer than the distinctness threshold."""


class ZeroCoupling(GaudinError):
    """g = 0 requested; only reachable as a continuation limit."""


class LengthMismatch(GaudinError):
    """Array arguments whose lengths must agree do not."""


# -- solver --------------------------------------------------------------

class NoConvergence(GaudinError):
    """Newton continuation failed; carries the last coupling reached."""

    def __init__(self, message, last_g=None):
        super().__init__(message)
        self.last_g = last_g


class NotAnEigenstate(GaudinError):
    """Operation requires a solved state but the residual check failed."""


# -- rapidity conversion --------------------------------------------------

class RapidityOnLevel(GaudinError):
    """A rapidity coincides with a level energy (pole)."""


class NonRealLambda(GaudinError):
    """Imaginary residue of on-level variables above threshold."""


class CoincidingRapidities(GaudinError):
    """Two rapidities coincide where a representation degenerates."""


class IllConditioned(GaudinError):
    """Polynomial reconstruction left a large linear-system misfit."""


class PolishDiverged(GaudinError):
    """Newton polish of an extracted root diverged."""


class PoleEvaluation(GaudinError):
    """Spectral function evaluated on top of one of its poles."""


class InconsistentSector(GaudinError):
    """Excitation count inferred from the sum rule is not an integer."""


# -- determinants ----------------------------------------------------------

class NonFinite(GaudinError):
    """Matrix entries contain NaN or Inf."""


class TooLarge(GaudinError):
    """Problem size beyond a hard implementation cap."""


class SiteOutOfRange(GaudinError):
    """Local operator site index outside [0, N)."""


class ZeroOverlap(GaudinError):
    """Normalization denominator numerically zero."""


class AxisMismatch(GaudinError):
    """State passed with the wrong quantization-axis tag."""


class RapiditiesRequired(GaudinError):
    """Operation needs explicit rapidities for the ket."""


# -- exact diagonalization ---------------------------------------------------

class DegenerateGeneric(GaudinError):
    """Generic-coefficient spectrum degenerate; re-draw coefficients."""


# -- dynamics -----------------------------------------------------------------

class ZeroField(GaudinError):
    """Central-spin field B = 0 maps to infinite coupling."""


class DegenerateCouplings(GaudinError):
    """Two hyperfine couplings coincide (degenerate levels)."""


class IncompleteSector(GaudinError):
    """A magnetization sector is missing eigenstates."""


class EmptyTable(GaudinError):
    """Spectral table has no rows."""
