"""Exhaustive reference solvers for small instances.

These enumerate allocations directly, with no shared logic with the online
solvers, so they serve as independent ground truth: the per-flow minimum
marginal cost, and the global offline optimum over all flows jointly.
Both are pure functions of immutable inputs.
"""

from __future__ import annotations

import math
from typing import Iterator

from .instance import Instance, Flow
from .state import AllocationState

DEFAULT_MAX_STATES = 10_000_000


class BudgetExceededError(RuntimeError):
    """Enumeration would visit more states than the configured budget."""


def count_compositions(total: int, parts: int) -> int:
    """Number of ways to write `total` as an ordered sum of `parts` nonnegatives."""
    return math.comb(total + parts - 1, parts - 1)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Yield every ordered tuple of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def per_flow_optimal(
    state: AllocationState,
    flow: Flow,
    servers,
    max_states: int = DEFAULT_MAX_STATES,
) -> float:
    """Exact minimum marginal cost of serving one flow at the given loads.

    Enumerates every composition of the demand over the flow's path and
    sums scalar marginal costs per composition. Independent of the DP.
    """
    parts = len(flow.path)
    if count_compositions(flow.demand, parts) > max_states:
        raise BudgetExceededError(
            f"flow {flow.id}: {count_compositions(flow.demand, parts)} compositions "
            f"exceed budget {max_states}"
        )
    caps = [servers[sid].capability for sid in flow.path]
    loads = [int(state.loads[sid]) for sid in flow.path]
    best = math.inf
    for comp in compositions(flow.demand, parts):
        cost = 0.0
        for cap, load, amount in zip(caps, loads, comp):
            if amount > 0:
                cost += cap.marginal(load, amount)
                if cost >= best:
                    break
        if cost < best:
            best = cost
    return best


def offline_optimal(inst: Instance, max_states: int = DEFAULT_MAX_STATES) -> float:
    """Exact clairvoyant optimum: minimum total cost over all joint allocations.

    Depth-first search over the cross product of every flow's compositions,
    pruning branches whose partial cost already matches or exceeds the
    incumbent (safe because marginal costs are nonnegative). The result is
    independent of enumeration order.
    """
    total_states = 1
    for flow in inst.flows:
        total_states *= count_compositions(flow.demand, len(flow.path))
        if total_states > max_states:
            raise BudgetExceededError(
                f"joint enumeration needs more than {max_states} states"
            )

    servers = inst.server_list()
    loads = [0] * inst.n
    flows = inst.flows
    best = math.inf

    def objective() -> float:
        costs = [s.capability.eval(loads[s.id]) for s in servers]
        if any(math.isinf(c) for c in costs):
            return math.inf
        return math.fsum(costs)

    def dfs(j: int, partial: float) -> None:
        nonlocal best
        if j == len(flows):
            total = objective()  # recompute, avoiding accumulated float drift
            if total < best:
                best = total
            return
        flow = flows[j]
        caps = [servers[sid].capability for sid in flow.path]
        for comp in compositions(flow.demand, len(flow.path)):
            delta = 0.0
            for cap, sid, amount in zip(caps, flow.path, comp):
                if amount > 0:
                    delta += cap.marginal(loads[sid], amount)
                    if math.isinf(delta):
                        break
            if partial + delta >= best:
                continue
            for sid, amount in zip(flow.path, comp):
                loads[sid] += amount
            dfs(j + 1, partial + delta)
            for sid, amount in zip(flow.path, comp):
                loads[sid] -= amount

    if not flows:
        return 0.0
    dfs(0, 0.0)
    if math.isinf(best):
        # no finite allocation exists; report the infeasible optimum honestly
        return math.inf
    return best
