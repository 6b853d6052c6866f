"""Best-possible deterministic online allocation.

For each arriving flow a two-dimensional table over (path position, served
demand) finds the minimum total marginal cost of covering the demand with
servers on the flow's path, given the loads committed so far. Decisions are
committed irrevocably in arrival order. Each run owns its state; distinct
runs may execute concurrently.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .instance import Flow, Instance
from .results import INFEASIBLE, SUCCESS, RunResult
from .state import AllocationState, FlowDecision

INF = math.inf


@dataclass
class DpTable:
    """Cost table for one flow.

    values[i][w] is the minimum marginal cost of serving exactly w demand
    units using the first i path servers (row 0 is the empty-prefix base:
    0 at w=0, inf elsewhere). choices[i][w] stores the amount placed on
    path server i by that optimum, for traceback.
    """

    path: tuple[int, ...]
    values: np.ndarray  # (n_path + 1, d + 1) float
    choices: np.ndarray  # (n_path + 1, d + 1) int64


def compute_table(
    state: AllocationState, flow: Flow, servers, counters: dict | None = None
) -> DpTable:
    """Fill the per-flow table bottom-up.

    Only path servers get rows; the recurrence chains consecutive path
    positions. Ties pick the smallest amount at the current server, which
    pushes demand toward earlier path positions deterministically.
    """
    path = flow.path
    d = flow.demand
    npath = len(path)
    values = np.full((npath + 1, d + 1), INF)
    values[0, 0] = 0.0
    choices = np.zeros((npath + 1, d + 1), dtype=np.int64)

    w = np.arange(d + 1)
    prev_idx = w[:, None] - w[None, :]  # prev_idx[w, y] = w - y
    valid = prev_idx >= 0
    clipped = np.maximum(prev_idx, 0)

    for i, sid in enumerate(path, start=1):
        marg = servers[sid].capability.marginal_many(int(state.loads[sid]), d)
        cand = np.where(valid, values[i - 1][clipped] + marg[None, :], INF)
        pick = np.argmin(cand, axis=1)  # first minimum = smallest amount
        choices[i] = pick
        values[i] = cand[w, pick]

    if counters is not None:
        counters.setdefault("dp_triples", []).append(npath * (d + 1) ** 2)
    return DpTable(path, values, choices)


def traceback(table: DpTable, demand: int) -> dict[int, int]:
    """Recover the optimal allocation from a filled table.

    Walks choices from the last path position down; position 1 absorbs the
    remainder (its only valid option), which keeps the allocation summing
    to the demand even when every option costs inf.
    """
    allocation: dict[int, int] = {}
    w = demand
    for i in range(len(table.path), 0, -1):
        amount = w if i == 1 else int(table.choices[i, w])
        if amount > 0:
            allocation[table.path[i - 1]] = amount
        w -= amount
    assert w == 0
    return allocation


def solve_flow(
    state: AllocationState, flow: Flow, servers, counters: dict | None = None
) -> FlowDecision:
    """Minimum-marginal-cost allocation of one flow's demand over its path.

    The cost may be inf when no finite option exists; the allocation still
    sums to the demand so the caller can commit and surface the result.
    """
    table = compute_table(state, flow, servers, counters)
    cost = float(table.values[len(flow.path), flow.demand])
    return FlowDecision(traceback(table, flow.demand), cost)


def run_online(
    inst: Instance, seed: int | None = None, instance_id: str | None = None
) -> RunResult:
    """Process flows in arrival order, committing each decision irrevocably.

    `seed` is echoed into the result for bookkeeping only; the algorithm is
    deterministic. Wall time covers the serve loop, not instance I/O.
    """
    servers = inst.server_list()
    state = AllocationState.fresh(inst.n)
    counters: dict = {"dp_triples": [], "marginal_costs": []}
    labels: list[str] = []

    t0 = time.perf_counter()
    for flow in inst.flows:
        decision = solve_flow(state, flow, servers, counters)
        state.apply(decision.allocation)
        counters["marginal_costs"].append(decision.marginal_cost)
        labels.append(INFEASIBLE if math.isinf(decision.marginal_cost) else SUCCESS)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    return RunResult(
        instance_id=instance_id or inst.instance_id,
        algo="dp",
        seed=seed,
        trial=0,
        total_cost=state.total_cost(servers),
        fail_rate=0.0,
        wall_time_ms=elapsed_ms,
        labels=labels,
        allocations=state.per_flow,
        counters=counters,
    )
