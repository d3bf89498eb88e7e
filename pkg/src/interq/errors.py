"""Exception hierarchy for interq.

Every error raised by the library derives from InterQError so callers can
catch domain failures without swallowing programming errors.
"""


class InterQError(Exception):
    """Base class for all interq errors."""


# --- platform / model validation ---

class DanglingLinkEndpoint(InterQError):
    """A link references a module id that does not exist on the platform."""


class InvalidFidelity(InterQError):
    """A fidelity value lies outside (0, 1]."""


class ClassicalLinkWithQuantumFields(InterQError):
    """A classical link carries nonzero Bell-pair parameters."""


class UnknownModule(InterQError):
    """A module id does not resolve on the platform."""


class NotQuantumLink(InterQError):
    """An operation requiring a quantum link was given a classical one."""


# --- partitioning ---

class OverheadOverflow(InterQError):
    """A cut-overhead product exceeded the representable/sane range."""


class NoClassicalLink(InterQError):
    """LOCC expansion needs a classical link and the platform has none."""


class NoQuantumLink(InterQError):
    """QComm expansion/execution needs a quantum link and none is usable."""


# --- cost model / scheduling ---

class CapacityExceeded(InterQError):
    """A fragment does not fit the module it was priced or placed on."""


class InfeasibleGroup(InterQError):
    """A group violates capacity, stage, or link-budget constraints."""


class UnplaceableUnit(InterQError):
    """A schedulable unit fits no module; it must be partitioned first."""


class UnresolvedPredecessor(InterQError):
    """A downstream group was mapped before its upstream group exists."""


class UnschedulableJob(InterQError):
    """A job fits no module and every partition candidate was pruned."""


# --- simulation ---

class DeadlockDetected(InterQError):
    """The event loop stalled with incomplete fragments still pending."""


# --- metrics ---

class IncompleteJob(InterQError):
    """Fidelity was requested for a job whose fragments did not all finish."""


class ZeroFidelity(InterQError):
    """log-probability requested for a fidelity of zero."""


class ZeroMakespan(InterQError):
    """Comparative factors requested against a zero-makespan run."""


# --- workload I/O ---

class ParseError(InterQError):
    """A workload or platform file failed to parse or validate."""


class DuplicateJobId(InterQError):
    """Two jobs in one workload share an id."""


class UnknownPreset(InterQError):
    """platform_preset was called with an unrecognized name."""
