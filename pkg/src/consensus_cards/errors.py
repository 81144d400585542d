"""Exception types shared across the package."""


class ConsensusCardsError(Exception):
    """Base class for all package-specific errors."""


class InvalidSizeError(ConsensusCardsError, ValueError):
    """A size parameter (N, C, ...) is outside its allowed range."""


class InvalidTopologyError(ConsensusCardsError, ValueError):
    """A topology request or pair set violates the topology invariants."""


class InvalidConfigError(ConsensusCardsError, ValueError):
    """A simulation configuration fails validation."""


class ForeignCardError(ConsensusCardsError, ValueError):
    """A card id does not belong to the deck it was used with."""


class EnumerationTooLargeError(ConsensusCardsError, ValueError):
    """binomial(N, C) exceeds the configured enumeration cap."""


class InsufficientDataError(ConsensusCardsError, ValueError):
    """Too few usable data points for a fit."""
