"""Problem instances: servers with cost functions plus an ordered flow sequence.

Provides seeded random generation, two structured families used for
worst-case studies, recording-matrix export, and a JSON file format that
round-trips byte-identically (save -> load -> save).

Instances are treated as immutable after construction or loading and are
safe to share across concurrent runs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capability import (
    CapabilityFunction,
    ConcavePiecewise,
    FixedPlusLinear,
    HardCap,
    Step,
    capability_from_json,
)

FORMAT_VERSION = 1

# Families drawn by gen_random when no explicit mix is given: the four
# cost-function shapes, equally likely.
DEFAULT_MIX = {"step": 1.0, "hardcap": 1.0, "fixed_linear": 1.0, "concave": 1.0}


class InstanceFormatError(ValueError):
    """Schema violation in an instance file; the message carries the field path."""


@dataclass(frozen=True)
class Server:
    id: int
    capability: CapabilityFunction


@dataclass(frozen=True)
class Flow:
    id: int  # doubles as arrival order
    demand: int
    path: tuple[int, ...]  # sorted, duplicate-free server ids


@dataclass
class Instance:
    servers: list[Server]
    flows: list[Flow]
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.servers)

    @property
    def m(self) -> int:
        return len(self.flows)

    @property
    def max_demand(self) -> int:
        return max((f.demand for f in self.flows), default=0)

    @property
    def instance_id(self) -> str:
        meta = self.metadata
        if "id" in meta:
            return str(meta["id"])
        gen = meta.get("generator", "instance")
        seed = meta.get("seed")
        return f"{gen}-{seed}" if seed is not None else str(gen)

    def server_list(self) -> list[Server]:
        """Servers ordered by id (input order is preserved in self.servers)."""
        return sorted(self.servers, key=lambda s: s.id)


# ---------------------------------------------------------------------------
# generators


def default_capability_params(max_demand: int) -> dict:
    """Parameter ranges used by gen_random, recorded in instance metadata.

    Per-unit prices are kept within one order of magnitude across families;
    wider spreads make sampled allocations drift far from the per-flow
    optimum and push random instances toward infeasibility.
    """
    return {
        "step": {"unit_size": [1, 20], "per_unit_cost": [0.2, 1.0]},
        "hardcap": {
            "open_cost": [0.5, 3.0],
            "capacity": [max(1, max_demand // 2), 2 * max_demand],
        },
        "fixed_linear": {"open_cost": [0.0, 2.0], "slope": [0.2, 1.0]},
        "concave": {
            "breakpoints": 3,
            "max_load": 2 * max_demand,
            "first_slope": [0.3, 1.2],
            "slope_decay": [0.5, 0.9],
        },
    }


def _random_capability(rng: random.Random, kind: str, max_demand: int) -> CapabilityFunction:
    d = max_demand
    if kind == "step":
        unit_size = rng.randint(1, 20)
        return Step(unit_size, rng.uniform(0.2, 1.0) * unit_size)
    if kind == "hardcap":
        return HardCap(rng.uniform(0.5, 3.0), rng.randint(max(1, d // 2), 2 * d))
    if kind == "fixed_linear":
        return FixedPlusLinear(rng.uniform(0.0, 2.0), rng.uniform(0.2, 1.0))
    if kind == "concave":
        # decreasing slopes keep the interpolant concave and nondecreasing
        loads = sorted(rng.sample(range(1, max(4, 2 * d + 1)), 3))
        s = rng.uniform(0.3, 1.2)
        bps = []
        cost = 0.0
        prev = 0
        for l in loads:
            cost += s * (l - prev)
            bps.append((l, cost))
            prev = l
            s *= rng.uniform(0.5, 0.9)
        return ConcavePiecewise(tuple(bps))
    raise ValueError(f"unknown capability kind {kind!r}")


def gen_random(
    n: int,
    m: int,
    max_demand: int,
    path_len_range: tuple[int, int] | None = None,
    seed: int = 0,
    capability_mix: dict[str, float] | None = None,
) -> Instance:
    """Seeded random instance: n servers, m flows with uniform demands/paths.

    Each server draws a cost function from `capability_mix` (a kind->weight
    map, default the four families equally weighted). Each flow draws a
    demand uniform in [1, max_demand] and a path that is a uniform random
    server subset of uniform size in path_len_range (default [1, n]).
    Identical arguments produce identical instances.
    """
    if n < 1 or m < 1 or max_demand < 1:
        raise ValueError("n, m and max_demand must all be >= 1")
    pmin, pmax = path_len_range if path_len_range is not None else (1, n)
    if not (1 <= pmin <= pmax <= n):
        raise ValueError(f"path_len_range must satisfy 1 <= min <= max <= n, got ({pmin}, {pmax})")
    mix = dict(capability_mix) if capability_mix else dict(DEFAULT_MIX)
    kinds = sorted(mix)
    weights = [mix[k] for k in kinds]
    if any(w < 0 for w in weights) or sum(weights) <= 0:
        raise ValueError("capability_mix weights must be nonnegative with positive sum")

    rng = random.Random(seed)
    servers = [
        Server(i, _random_capability(rng, rng.choices(kinds, weights)[0], max_demand))
        for i in range(n)
    ]
    flows = []
    for j in range(m):
        demand = rng.randint(1, max_demand)
        size = rng.randint(pmin, pmax)
        path = tuple(sorted(rng.sample(range(n), size)))
        flows.append(Flow(j, demand, path))
    metadata = {
        "generator": "random",
        "seed": seed,
        "n": n,
        "m": m,
        "max_demand": max_demand,
        "path_len_range": [pmin, pmax],
        "capability_mix": {k: mix[k] for k in kinds},
        "capability_params": default_capability_params(max_demand),
    }
    return Instance(servers, flows, metadata)


def gen_adversarial(m: int) -> Instance:
    """Worst-case construction for deterministic online allocation.

    m servers, all hard-capacitated with opening cost 1 and capacity 1.
    Only the first m/2 unit-demand flows are generated here, flow k
    (0-indexed) passing through the server pair {2k, 2k+1}; the second
    half depends on the solver's own choices and is appended by
    `adversary_extend` once those are known.
    """
    if m < 2 or m % 2 != 0:
        raise ValueError(f"m must be a positive even integer, got {m}")
    servers = [Server(i, HardCap(1.0, 1)) for i in range(m)]
    flows = [Flow(k, 1, (2 * k, 2 * k + 1)) for k in range(m // 2)]
    metadata = {"generator": "adversarial", "m": m, "phase": "first_half"}
    return Instance(servers, flows, metadata)


def adversary_extend(partial: Instance, first_half_allocations: list[dict[int, int]]) -> Instance:
    """Append the half of flows that chase the solver's first-half choices.

    Each appended flow has unit demand and a singleton path: exactly the
    server the solver picked for the corresponding first-half flow.
    Returns a new Instance; `partial` is left untouched.
    """
    half = len(partial.flows)
    if len(first_half_allocations) != half:
        raise ValueError(
            f"expected one allocation per first-half flow ({half}), got {len(first_half_allocations)}"
        )
    new_flows = list(partial.flows)
    for k, alloc in enumerate(first_half_allocations):
        items = [(sid, amt) for sid, amt in alloc.items() if amt > 0]
        if len(items) != 1 or items[0][1] != 1:
            raise ValueError(f"allocations not singleton per flow: flow {k} got {alloc}")
        sid = items[0][0]
        if sid not in partial.flows[k].path:
            raise ValueError(f"flow {k} allocation on server {sid}, which is off its path")
        new_flows.append(Flow(half + k, 1, (sid,)))
    metadata = dict(partial.metadata)
    metadata["phase"] = "extended"
    return Instance(list(partial.servers), new_flows, metadata)


def gen_pq(m: int, epsilon: float) -> Instance:
    """One shared hub server plus m leaf servers, one unit flow per leaf.

    Server 0 (the hub) costs 1 + epsilon*u once used; each leaf server k
    costs u. Flow k has demand 1 and path {0, k}. Greedy per-flow choices
    pay 1 per flow here while routing everything to the hub costs
    1 + epsilon*m, so the gap grows linearly with m.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (epsilon > 0):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    servers = [Server(0, FixedPlusLinear(1.0, float(epsilon)))]
    servers += [Server(k, FixedPlusLinear(0.0, 1.0)) for k in range(1, m + 1)]
    flows = [Flow(k, 1, (0, k + 1)) for k in range(m)]
    metadata = {"generator": "pq", "m": m, "epsilon": float(epsilon)}
    return Instance(servers, flows, metadata)


def recording_matrix(inst: Instance) -> np.ndarray:
    """n x m binary matrix: entry (i, j) is 1 iff flow j's path contains server i."""
    mat = np.zeros((inst.n, inst.m), dtype=np.int8)
    for j, flow in enumerate(inst.flows):
        for i in flow.path:
            mat[i, j] = 1
    return mat


# ---------------------------------------------------------------------------
# file format


def _server_to_json(s: Server) -> dict:
    return {"id": s.id, "capability": s.capability.to_json()}


def _flow_to_json(f: Flow) -> dict:
    return {"id": f.id, "demand": f.demand, "path": list(f.path)}


def dumps(inst: Instance) -> str:
    obj = {
        "version": FORMAT_VERSION,
        "metadata": inst.metadata,
        "servers": [_server_to_json(s) for s in inst.servers],
        "flows": [_flow_to_json(f) for f in inst.flows],
    }
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def save(inst: Instance, destination) -> None:
    """Write the instance as UTF-8 JSON to a path or text file object."""
    text = dumps(inst)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def _expect_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(f"{where}: expected an integer, got {v!r}")
    return v


def _parse(obj) -> Instance:
    if not isinstance(obj, dict):
        raise InstanceFormatError("top level: expected an object")
    version = obj.get("version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"version: expected {FORMAT_VERSION}, got {version!r}")
    metadata = obj.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InstanceFormatError("metadata: expected an object")

    raw_servers = obj.get("servers")
    if not isinstance(raw_servers, list) or not raw_servers:
        raise InstanceFormatError("servers: expected a non-empty list")
    servers = []
    seen: set[int] = set()
    for i, s in enumerate(raw_servers):
        if not isinstance(s, dict):
            raise InstanceFormatError(f"servers[{i}]: expected an object")
        sid = _expect_int(s.get("id"), f"servers[{i}].id")
        if sid < 0:
            raise InstanceFormatError(f"servers[{i}].id: must be >= 0, got {sid}")
        if sid in seen:
            raise InstanceFormatError(f"servers[{i}].id: duplicate id {sid}")
        seen.add(sid)
        try:
            cap = capability_from_json(s.get("capability"), f"servers[{i}].capability")
        except ValueError as e:
            raise InstanceFormatError(str(e)) from None
        servers.append(Server(sid, cap))
    n = len(servers)
    if seen != set(range(n)):
        missing = sorted(set(range(n)) - seen)
        raise InstanceFormatError(f"servers: ids must be dense 0..{n - 1}, missing {missing}")

    raw_flows = obj.get("flows")
    if not isinstance(raw_flows, list):
        raise InstanceFormatError("flows: expected a list")
    flows = []
    for j, f in enumerate(raw_flows):
        if not isinstance(f, dict):
            raise InstanceFormatError(f"flows[{j}]: expected an object")
        fid = _expect_int(f.get("id"), f"flows[{j}].id")
        if fid != j:
            raise InstanceFormatError(f"flows[{j}].id: expected {j} (arrival order), got {fid}")
        demand = _expect_int(f.get("demand"), f"flows[{j}].demand")
        if demand < 1:
            raise InstanceFormatError(f"flows[{j}].demand: demand must be >= 1, got {demand}")
        raw_path = f.get("path")
        if not isinstance(raw_path, list) or not raw_path:
            raise InstanceFormatError(f"flows[{j}].path: expected a non-empty list")
        path = [_expect_int(p, f"flows[{j}].path[{k}]") for k, p in enumerate(raw_path)]
        if len(set(path)) != len(path):
            raise InstanceFormatError(f"flows[{j}].path: duplicate server ids in {path}")
        for p in path:
            if not (0 <= p < n):
                raise InstanceFormatError(f"flows[{j}].path: server id {p} out of range 0..{n - 1}")
        flows.append(Flow(fid, demand, tuple(sorted(path))))

    return Instance(servers, flows, metadata)


def loads(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"line {e.lineno}: invalid JSON: {e.msg}") from None
    return _parse(obj)


def load(source) -> Instance:
    """Read an instance from a path or text file object; see `save`."""
    if hasattr(source, "read"):
        return loads(source.read())
    return loads(Path(source).read_text(encoding="utf-8"))
