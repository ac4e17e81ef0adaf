"""
Exception hierarchy for the in-orbit analytics toolkit.

Every error raised because of bad input derives from ``InputError``, which is
also a ``ValueError``. ``NumericFailure`` is the only internal error; the CLI
maps it to a distinct exit code. Infeasible plans and incomplete routings are
statuses, not exceptions.
"""


class OrbitalAnalyticsError(Exception):
    """Root of all toolkit errors."""


class InputError(OrbitalAnalyticsError, ValueError):
    """Raised when a caller supplies invalid data."""


# Application graphs

class ApplicationError(InputError):
    """Invalid application graph."""


class CycleDetected(ApplicationError):
    """The application graph contains a directed cycle."""


class UnknownFunctionId(ApplicationError):
    """An edge refers to a function id that is not declared."""


class InvalidRatio(ApplicationError):
    """A distribution ratio lies outside (0, 1]."""


class InvalidFunctionIds(ApplicationError):
    """Function ids are not a contiguous, topologically ordered 1..N range."""


class ScenarioError(InputError):
    """Invalid constellation, workload or scenario document."""


# Profiles

class ProfileError(InputError):
    """Invalid performance profile."""


class InsufficientSamples(ProfileError):
    """A fit segment has fewer than two distinct quota samples."""


class NonMonotoneFit(ProfileError):
    """A fitted speed model decreases somewhere in its domain."""


class QuotaAboveDomain(ProfileError):
    """A CPU quota exceeds the upper end of a speed model's domain."""


class InvalidBreakpoints(ProfileError):
    """Breakpoints are not strictly increasing inside the sample range."""


class InvalidProfile(ProfileError):
    """A profile violates its field invariants."""


class MissingProfile(ProfileError):
    """A function references a profile that was not supplied."""


# Planning, routing and simulation

class DimensionMismatch(InputError):
    """Plan matrices do not match the application and constellation."""


class NotEnoughSatellites(InputError):
    """Compute parallelism needs at least one satellite per function."""


class MissingVertex(InputError):
    """A realization graph lacks an instance for some function."""


class PlanMismatch(InputError):
    """A routing plan references instances the deployment does not provide."""


class NumericFailure(OrbitalAnalyticsError):
    """The LP solver could not produce a trustworthy answer."""


# Ground contacts and files

class InvalidTrace(InputError):
    """A contact trace violates its schema or ordering invariants."""


class TooFewContacts(InputError):
    """No satellite in the trace has two contacts to measure a gap."""


class ArtifactError(InputError):
    """A plan, routing or profile file cannot be read."""
