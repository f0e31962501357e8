"""Exception hierarchy shared by all modules."""


class GMNLError(ValueError):
    """Base class for every error raised by ``gmnlnet``."""


class ArityError(GMNLError):
    """Wrong number of parties for the requested operation."""


class ShapeError(GMNLError):
    """Dimensions or scenario shapes do not match."""


class NormalizationError(GMNLError):
    """A vector or coefficient pair is not unit norm."""


class ZeroProbabilityError(GMNLError):
    """A post-selection outcome has (numerically) zero probability."""


class ConditioningError(GMNLError):
    """A conditioning event has zero probability for some joint input."""

    def __init__(self, message, joint_input=None):
        super().__init__(message)
        self.joint_input = joint_input


class MappingError(GMNLError):
    """Party/particle slot assignments collide or leave gaps."""


class LiftingError(GMNLError):
    """A lifting specification is inconsistent with its scenario."""


class ConnectivityError(GMNLError):
    """The edge set does not connect all parties."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class NotHardyEligibleError(GMNLError):
    """The state cannot display the qudit Hardy paradox on the chosen pair."""

    def __init__(self, message, entanglement=None):
        super().__init__(message)
        self.entanglement = entanglement


class InvalidNetworkError(GMNLError):
    """The network violates the hypotheses of the certification pipeline."""


class NotGMEError(GMNLError):
    """A pure state is a product across some bipartition."""

    def __init__(self, message, cut=None):
        super().__init__(message)
        self.cut = cut


class CapabilityError(GMNLError):
    """The scenario shape is outside what vertex enumeration supports."""


class SizeError(CapabilityError):
    """Vertex enumeration would exceed the configured column cap."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class LPError(GMNLError):
    """The LP backend failed for a reason other than infeasibility."""
