"""Exception hierarchy; the CLI maps these onto distinct exit codes."""


class ParakernError(Exception):
    """Base class for all package-raised failures."""


class ConfigError(ParakernError):
    """Malformed or inconsistent user configuration."""


class GuardRailError(ParakernError):
    """A numerical safety check tripped; results would be untrustworthy."""


class NonDiniError(GuardRailError):
    """Dini integral of the oscillation modulus diverges; no admissible horizon."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class ContractionError(GuardRailError):
    """Measured Levi-series contraction ratio exceeded its admissible bound."""

    def __init__(self, msg, ratios=None):
        super().__init__(msg)
        self.ratios = list(ratios) if ratios is not None else []


class HorizonError(GuardRailError):
    """A requested time span exceeds the configured short-time horizon."""


class LeakageError(GuardRailError):
    """Composition grid too narrow: kernel mass leaks through the boundary."""

    def __init__(self, msg, leakage=None):
        super().__init__(msg)
        self.leakage = leakage


class DegenerateSpanError(ParakernError):
    """Time span below the supported resolution (t - s < 1e-12)."""


class VerificationError(ParakernError):
    """A verification command found tolerances violated."""
