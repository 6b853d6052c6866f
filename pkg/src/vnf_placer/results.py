"""Run outcome records shared by the solvers and the experiment harness."""

from __future__ import annotations

from dataclasses import dataclass, field

# Per-flow outcome labels. Deterministic and Las Vegas runs never produce
# FAIL; INFEASIBLE marks a flow for which no finite-cost option existed.
SUCCESS = "SUCCESS"
FAIL = "FAIL"
INFEASIBLE = "INFEASIBLE"


@dataclass
class RunResult:
    """Outcome of one solver run on one instance.

    fail_rate is #FAIL / m (always 0.0 for dp and lv). total_cost for mc
    covers fully served flows only (failed flows are rolled back), so mc
    costs are not comparable with dp/lv costs. counters hold
    instrumentation (work counts, normalization drift) for complexity and
    correctness checks.
    """

    instance_id: str
    algo: str  # "dp" | "lv" | "mc"
    seed: int | None
    trial: int
    total_cost: float
    fail_rate: float
    wall_time_ms: float
    labels: list[str]
    allocations: list[dict[int, int]]
    r: int | None = None
    row_update: bool | None = None
    counters: dict = field(default_factory=dict)
