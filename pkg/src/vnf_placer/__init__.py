"""Online placement of integer flow demands onto heterogeneous-cost servers.

Flows arrive one at a time; each must have its integer demand covered by
servers on its path, and committed placements can never be changed. Server
costs are arbitrary nondecreasing functions of load (zero at zero load,
possibly infinite). The package provides a per-flow optimal dynamic
program, Las Vegas and Monte Carlo sampling heuristics, exhaustive
reference solvers, instance generators with a stable JSON file format, and
an experiment harness with a CLI.
"""

from .capability import (
    CapabilityFunction,
    ConcavePiecewise,
    FixedPlusLinear,
    HardCap,
    Step,
    Table,
    Violation,
    capability_from_json,
)
from .dp import DpTable, compute_table, run_online, solve_flow
from .instance import (
    Flow,
    Instance,
    InstanceFormatError,
    Server,
    adversary_extend,
    gen_adversarial,
    gen_pq,
    gen_random,
    recording_matrix,
)
from .instance import dumps as dump_instance_str
from .instance import load as load_instance
from .instance import save as save_instance
from .oracle import (
    DEFAULT_MAX_STATES,
    BudgetExceededError,
    compositions,
    count_compositions,
    offline_optimal,
    per_flow_optimal,
)
from .randomized import (
    AllDeadError,
    InfeasibleFlowError,
    McConfig,
    ProbabilityTable,
    build_table,
    lv_serve_flow,
    mc_serve_flow,
    run_lv,
    run_mc,
)
from .results import FAIL, INFEASIBLE, SUCCESS, RunResult
from .state import AllocationState, FlowDecision

__version__ = "0.1.0"
