"""Randomized online allocation by inverse-marginal-cost sampling.

Both samplers share one device: for the current flow, a table over
(server, amount) pairs weighted by amount / marginal-cost, normalized into
a probability distribution and sampled by inverse CDF. The Las Vegas
variant keeps picking until the flow is fully served, so its output is
always feasible; the Monte Carlo variant caps the number of picks at
ceil(demand / r) and rolls the flow back as FAIL when coverage is not
reached within the cap.

Randomness comes from one `random.Random` (Mersenne Twister) stream per
run, consuming exactly one draw per sampled pick; numpy is used for
arithmetic only. Fixed seeds reproduce runs bit-for-bit. Each run owns its
state and generator; independent runs may execute concurrently.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

import numpy as np

from .instance import Flow, Instance
from .results import FAIL, SUCCESS, RunResult
from .state import AllocationState, FlowDecision

INF = math.inf

# normalization drift tolerance, enforced on every rebuild/update
NORMALIZATION_TOL = 1e-9


class AllDeadError(RuntimeError):
    """Every (server, amount) option for the current flow costs inf."""


class InfeasibleFlowError(RuntimeError):
    """A flow could not be served at all; the Las Vegas run is aborted."""

    def __init__(self, flow_id: int):
        super().__init__(f"flow {flow_id} has no finite-cost option left")
        self.flow_id = flow_id


@dataclass
class McConfig:
    """Monte Carlo knobs: rounds divisor r (flow gets ceil(d/r) picks) and seed."""

    r: int
    seed: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")


class ProbabilityTable:
    """Pick probabilities over (server, amount) pairs for one flow.

    raw[X][Y-1] is amount/marginal for on-path servers (0 off-path, 0 for
    infinite marginals); probs is raw scaled to total mass 1. Entries whose
    marginal cost is exactly zero carry no sampling mass; they are tracked
    separately and picked deterministically before any sampling (largest
    amount first, then lowest server id), realizing the limit an infinite
    weight would get.
    """

    def __init__(self, n: int, d: int):
        self.n = n
        self.d = d
        self.raw = np.zeros((n, d))
        self.probs = np.zeros((n, d))
        self.free: dict[int, int] = {}  # server id -> largest zero-cost amount
        self.norm_dev = 0.0

    def fill_row(self, sid: int, capability, load: int, counters: dict | None = None) -> None:
        """Recompute raw weights for one server at its current load."""
        d = self.d
        marg = capability.marginal_many(load, d)[1:]  # amounts 1..d
        amounts = np.arange(1, d + 1, dtype=float)
        with np.errstate(divide="ignore"):
            row = amounts / marg
        zero_cost = marg == 0.0
        # zero marginals (row inf) and infinite marginals (row 0) carry no mass
        self.raw[sid] = np.where(np.isfinite(row), row, 0.0)
        if zero_cost.any():
            self.free[sid] = int(np.nonzero(zero_cost)[0][-1]) + 1
        else:
            self.free.pop(sid, None)
        if counters is not None:
            counters["table_entries"] = counters.get("table_entries", 0) + d

    def normalize(self) -> None:
        total = self.raw.sum()
        if total > 0.0:
            self.probs = self.raw / total
            self._check_mass()
        else:
            self.probs = np.zeros_like(self.raw)

    def _check_mass(self) -> None:
        dev = abs(float(self.probs.sum()) - 1.0)
        self.norm_dev = max(self.norm_dev, dev)
        if dev > NORMALIZATION_TOL:
            raise AssertionError(f"probability table mass drifted by {dev}")

    @property
    def has_mass(self) -> bool:
        return bool(self.probs.any())

    def best_free_pick(self) -> tuple[int, int] | None:
        """Deterministic zero-cost pick: max amount, then min server id."""
        if not self.free:
            return None
        best_amount = max(self.free.values())
        sid = min(s for s, a in self.free.items() if a == best_amount)
        return sid, best_amount

    def sample(self, rng) -> tuple[int, int]:
        """Inverse-CDF draw over the flattened table in row-major order."""
        flat = self.probs.ravel()
        cum = np.cumsum(flat)
        total = float(cum[-1])
        if total <= 0.0:
            raise AllDeadError("no sampling mass")
        u = rng.random() * total
        idx = int(np.searchsorted(cum, u, side="right"))
        if idx >= flat.size:
            idx = flat.size - 1
        while flat[idx] == 0.0 and idx > 0:  # float edge: never return a zero-mass pair
            idx -= 1
        sid, y = divmod(idx, self.d)
        return sid, y + 1

    def update_row(self, sid: int, capability, load: int, counters: dict | None = None) -> None:
        """Row-only refresh that preserves the table's total mass.

        The refreshed row keeps the probability mass it held before,
        redistributed proportionally to the new raw weights. If the row's
        weight vanished entirely (all options saturated), its mass is
        redistributed over the remaining rows instead.
        """
        old_mass = float(self.probs[sid].sum())
        self.fill_row(sid, capability, load, counters)
        row_sum = float(self.raw[sid].sum())
        if row_sum > 0.0:
            self.probs[sid] = self.raw[sid] * (old_mass / row_sum)
        else:
            self.probs[sid] = 0.0
            remaining = float(self.probs.sum())
            if remaining > 0.0:
                self.probs /= remaining
        if self.probs.any():
            self._check_mass()
        if counters is not None:
            counters["max_norm_dev"] = max(counters.get("max_norm_dev", 0.0), self.norm_dev)


def build_table(
    state: AllocationState, flow: Flow, servers, counters: dict | None = None
) -> ProbabilityTable:
    """Full table build for the flow's current situation.

    Raises AllDeadError when every option is infinitely expensive and no
    zero-cost option exists: the flow cannot be served at all.
    """
    table = ProbabilityTable(len(servers), flow.demand)
    for sid in flow.path:
        table.fill_row(sid, servers[sid].capability, int(state.loads[sid]), counters)
    table.normalize()
    if counters is not None:
        counters["max_norm_dev"] = max(counters.get("max_norm_dev", 0.0), table.norm_dev)
    if not table.has_mass and not table.free:
        raise AllDeadError(f"flow {flow.id}: all options cost inf")
    return table


def _trim_excess(
    picks: list[tuple[int, int]],
    allocation: dict[int, int],
    loads: np.ndarray,
    excess: int,
) -> None:
    """Drop `excess` units, walking picks from the most recent backwards."""
    for i in range(len(picks) - 1, -1, -1):
        if excess == 0:
            break
        sid, amount = picks[i]
        cut = min(amount, excess)
        picks[i] = (sid, amount - cut)
        allocation[sid] -= cut
        loads[sid] -= cut
        if allocation[sid] == 0:
            del allocation[sid]
        excess -= cut
    assert excess == 0


def _true_marginal(allocation: dict[int, int], pre_loads: np.ndarray, servers) -> float:
    """Marginal cost of an allocation recomputed against pre-flow loads."""
    parts = [
        servers[sid].capability.marginal(int(pre_loads[sid]), amount)
        for sid, amount in allocation.items()
    ]
    if any(math.isinf(p) for p in parts):
        return INF
    return math.fsum(parts)


def _pick(table: ProbabilityTable, rng, counters: dict | None) -> tuple[int, int]:
    free = table.best_free_pick()
    if free is not None:
        return free
    if not table.has_mass:
        raise AllDeadError("no option left")
    if counters is not None:
        counters["sampled_picks"] = counters.get("sampled_picks", 0) + 1
    return table.sample(rng)


def lv_serve_flow(
    state: AllocationState,
    flow: Flow,
    servers,
    rng,
    row_update: bool = False,
    counters: dict | None = None,
) -> FlowDecision:
    """Serve one flow fully, sampling picks until its demand is covered.

    The final pick is trimmed so the served total equals the demand
    exactly. With row_update=True only the picked server's row is
    recomputed between picks (preserving total mass) instead of rebuilding
    the whole table. Raises InfeasibleFlowError when no finite-cost option
    remains; the flow's partial allocation is rolled back first. Loads in
    `state` are restored before returning; committing is the caller's job.
    """
    pre_loads = state.loads.copy()
    allocation: dict[int, int] = {}
    picks: list[tuple[int, int]] = []
    served = 0
    npicks = 0
    entries_before = counters.get("table_entries", 0) if counters is not None else 0
    try:
        table = build_table(state, flow, servers, counters)
        while served < flow.demand:
            sid, amount = _pick(table, rng, counters)
            allocation[sid] = allocation.get(sid, 0) + amount
            picks.append((sid, amount))
            state.loads[sid] += amount
            served += amount
            npicks += 1
            if served >= flow.demand:
                break
            if row_update:
                table.update_row(sid, servers[sid].capability, int(state.loads[sid]), counters)
            else:
                table = build_table(state, flow, servers, counters)
        if served > flow.demand:
            _trim_excess(picks, allocation, state.loads, served - flow.demand)
        if counters is not None:
            counters.setdefault("picks", []).append(npicks)
            counters.setdefault("entries_per_flow", []).append(
                counters.get("table_entries", 0) - entries_before
            )
        return FlowDecision(allocation, _true_marginal(allocation, pre_loads, servers))
    except AllDeadError:
        raise InfeasibleFlowError(flow.id) from None
    finally:
        state.loads[:] = pre_loads


def mc_serve_flow(
    state: AllocationState,
    flow: Flow,
    servers,
    rng,
    cfg: McConfig,
    counters: dict | None = None,
) -> tuple[FlowDecision | None, str]:
    """Serve one flow with at most ceil(demand / r) picks.

    Stops as soon as the demand is covered; a flow that is not covered
    within its pick budget (or that runs out of finite options) is labeled
    FAIL and every unit it placed is rolled back. SUCCESS flows are trimmed
    to their exact demand, like the Las Vegas variant. Loads in `state` are
    restored before returning; committing is the caller's job.
    """
    pre_loads = state.loads.copy()
    allocation: dict[int, int] = {}
    picks: list[tuple[int, int]] = []
    served = 0
    npicks = 0
    rounds = math.ceil(flow.demand / cfg.r)
    entries_before = counters.get("table_entries", 0) if counters is not None else 0

    def record():
        if counters is not None:
            counters.setdefault("picks", []).append(npicks)
            counters.setdefault("entries_per_flow", []).append(
                counters.get("table_entries", 0) - entries_before
            )

    try:
        for _ in range(rounds):
            if served >= flow.demand:
                break
            table = build_table(state, flow, servers, counters)
            sid, amount = _pick(table, rng, counters)
            allocation[sid] = allocation.get(sid, 0) + amount
            picks.append((sid, amount))
            state.loads[sid] += amount
            served += amount
            npicks += 1
    except AllDeadError:
        # remaining rounds are pointless; the flow fails and rolls back
        record()
        return None, FAIL
    finally:
        state.loads[:] = pre_loads

    record()
    if served < flow.demand:
        return None, FAIL
    if served > flow.demand:
        scratch = pre_loads.copy()  # loads already restored; trim bookkeeping only
        _trim_excess(picks, allocation, scratch, served - flow.demand)
    return FlowDecision(allocation, _true_marginal(allocation, pre_loads, servers)), SUCCESS


def run_lv(
    inst: Instance,
    seed: int,
    row_update: bool = False,
    instance_id: str | None = None,
) -> RunResult:
    """Las Vegas run over the whole instance; always feasible when it returns.

    Raises InfeasibleFlowError if some flow cannot be served at all.
    """
    rng = random.Random(seed)
    servers = inst.server_list()
    state = AllocationState.fresh(inst.n)
    counters: dict = {"table_entries": 0, "picks": [], "max_norm_dev": 0.0, "sampled_picks": 0}
    labels: list[str] = []

    t0 = time.perf_counter()
    for flow in inst.flows:
        decision = lv_serve_flow(state, flow, servers, rng, row_update, counters)
        state.apply(decision.allocation)
        labels.append(SUCCESS)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    return RunResult(
        instance_id=instance_id or inst.instance_id,
        algo="lv",
        seed=seed,
        trial=0,
        total_cost=state.total_cost(servers),
        fail_rate=0.0,
        wall_time_ms=elapsed_ms,
        labels=labels,
        allocations=state.per_flow,
        row_update=row_update,
        counters=counters,
    )


def run_mc(
    inst: Instance,
    seed: int,
    r: int,
    instance_id: str | None = None,
) -> RunResult:
    """Monte Carlo run; failed flows contribute no load and no cost.

    The reported cost covers fully served flows only, so it is not
    comparable with dp/lv costs; fail_rate is the fraction of FAIL flows.
    """
    cfg = McConfig(r=r, seed=seed)
    rng = random.Random(seed)
    servers = inst.server_list()
    state = AllocationState.fresh(inst.n)
    counters: dict = {"table_entries": 0, "picks": [], "max_norm_dev": 0.0, "sampled_picks": 0}
    labels: list[str] = []
    failures = 0

    t0 = time.perf_counter()
    for flow in inst.flows:
        decision, label = mc_serve_flow(state, flow, servers, rng, cfg, counters)
        labels.append(label)
        if decision is None:
            failures += 1
            state.per_flow.append({})
        else:
            state.apply(decision.allocation)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    return RunResult(
        instance_id=instance_id or inst.instance_id,
        algo="mc",
        seed=seed,
        trial=0,
        total_cost=state.total_cost(servers),
        fail_rate=failures / inst.m if inst.m else 0.0,
        wall_time_ms=elapsed_ms,
        labels=labels,
        allocations=state.per_flow,
        r=r,
        counters=counters,
    )
