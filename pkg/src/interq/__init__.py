"""interq: communication-aware scheduling and simulation for modular
quantum-processor clouds with classical and quantum interconnects."""

from .errors import (
    CapacityExceeded,
    ClassicalLinkWithQuantumFields,
    DanglingLinkEndpoint,
    DeadlockDetected,
    DuplicateJobId,
    IncompleteJob,
    InfeasibleGroup,
    InterQError,
    InvalidFidelity,
    NoClassicalLink,
    NoQuantumLink,
    NotQuantumLink,
    OverheadOverflow,
    ParseError,
    UnknownModule,
    UnknownPreset,
    UnplaceableUnit,
    UnresolvedPredecessor,
    UnschedulableJob,
    ZeroFidelity,
    ZeroMakespan,
)
from .model import (
    CommMode,
    CostWeights,
    CutKind,
    Fragment,
    Group,
    JobSpec,
    LinkKind,
    LinkProfile,
    LinkReservation,
    ModuleProfile,
    Platform,
    Schedule,
    ScheduleEntry,
    Stage,
    classical_link,
    incident_links,
    parse_fragment_id,
    quantum_link,
    validate_platform,
)
from .costs import (
    FeasibilityVerdict,
    GroupCostBreakdown,
    check_group_feasible,
    fragment_runtime,
    group_cost,
    remote_op_cost,
    remote_op_fidelity,
    schedule_objective,
)
from .partition import (
    PartitionPlan,
    PlanMeta,
    expand_lo,
    expand_locc,
    expand_qcomm,
    find_partition,
    intercomm_modes,
    lo_cut_overhead,
    locc_cut_overhead,
    whole_job_fragment,
)
from .scheduler import (
    Policy,
    SchedulerConfig,
    SchedulerResult,
    map_groups,
    partition_interq,
    schedule_interq,
    schedule_serial_rr,
    sort_by_runtime,
)
from .timeline import Event, OpRecord, realize
from .sim import RngStream, SimResult, generate_pair, run_simulation
from .metrics import (
    JobOutcome,
    MetricsReport,
    comparative_factors,
    job_fidelity,
    lpst,
    queue_stats,
)
from .workload import (
    generate_random_workload,
    load_platform,
    load_workload,
    platform_preset,
    save_platform,
    save_workload,
    synthetic_workload,
)

__version__ = "0.1.0"
