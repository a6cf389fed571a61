"""Exception types shared across the package."""


class MoilError(Exception):
    """Base class for all package-specific errors."""


class DataError(MoilError):
    """Malformed input data (CSV schema violations, bad values, shape issues)."""


class MotifError(MoilError):
    """Motif mining cannot proceed (empty candidate groups, short periods)."""


class TrainingError(MoilError):
    """Training diverged or was configured inconsistently."""


class ArtifactError(MoilError):
    """Pipeline artifact missing or failing an integrity (hash) check."""
