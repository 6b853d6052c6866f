"""Mutable allocation bookkeeping shared by the online solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AllocationState:
    """Per-run state: current server loads plus committed per-flow placements.

    Owned by exactly one run; never shared between concurrent runs.
    """

    loads: np.ndarray  # int64, length n
    per_flow: list[dict[int, int]] = field(default_factory=list)

    @classmethod
    def fresh(cls, n: int) -> "AllocationState":
        return cls(loads=np.zeros(n, dtype=np.int64))

    def apply(self, allocation: dict[int, int]) -> None:
        """Commit a flow's allocation irrevocably."""
        for sid, amount in allocation.items():
            self.loads[sid] += amount
        self.per_flow.append(dict(allocation))

    def total_cost(self, servers) -> float:
        """Objective value at the current loads: sum of each server's cost."""
        costs = [s.capability.eval(int(self.loads[s.id])) for s in servers]
        if any(math.isinf(c) for c in costs):
            return math.inf
        return math.fsum(costs)


@dataclass
class FlowDecision:
    """One flow's committed placement and its cost increase.

    The allocation maps server id to a positive amount and sums to the
    flow's demand; marginal_cost may be inf when no finite option existed.
    """

    allocation: dict[int, int]
    marginal_cost: float
