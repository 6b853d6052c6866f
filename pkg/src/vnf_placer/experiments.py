"""Experiment suites: instance batteries, derived seeding, CSV artifacts.

Every RNG seed used anywhere in a suite is derived by hashing the master
seed together with the cell's coordinates, so suites are reproducible and
suites with different master seeds share no derived seed. Independent
cells may run concurrently (set VNF_PLACER_THREADS); rows are always
written through one sink in deterministic cell order.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import dp, randomized
from .instance import Instance, gen_random
from .randomized import InfeasibleFlowError
from .reporting import RATIO_COLUMNS, format_cost, result_to_row, write_rows

EXPERIMENT_NAMES = ("exp1", "exp2", "exp3", "exp4")

# Experiment instances avoid short paths: a short path can consist entirely
# of saturated hard-capacitated servers, making the whole instance
# infeasible for feasibility-preserving solvers (measured: 73% of desk
# instances with unrestricted sizes, 0 of 310 at minimum 6). Sizes are
# drawn uniformly from [MIN_PATH_LEN, n].
MIN_PATH_LEN = 6

EXPERIMENT_CONFIGS = {
    ("exp1", "desk"): {"n": 20, "m": 100, "max_demand": 50, "instances": 10},
    ("exp1", "full"): {"n": 50, "m": 400, "max_demand": 200, "instances": 35},
    ("exp2", "desk"): {"n": 20, "m": 100, "max_demand": 50, "instances": 10, "trials": 10},
    ("exp2", "full"): {"n": 50, "m": 400, "max_demand": 200, "instances": 30, "trials": 30},
    ("exp3", "desk"): {
        "types": {"A": (20, 40, 50), "B": (20, 200, 50), "C": (20, 200, 250)},
        "instances": 10,
        "r": 50,
    },
    ("exp3", "full"): {
        "types": {"A": (50, 100, 200), "B": (50, 500, 200), "C": (50, 500, 1000)},
        "instances": 30,
        "r": 50,
    },
    ("exp4", "desk"): {
        "n": 20,
        "m": 200,
        "max_demand": 400,
        "seeds": 20,
        "r_grid": list(range(5, 55, 5)),
    },
    ("exp4", "full"): {
        "n": 50,
        "m": 500,
        "max_demand": 1000,
        "seeds": 20,
        "r_grid": list(range(5, 55, 5)),
    },
}


def derive_seed(master: int, *parts) -> int:
    """Deterministic 64-bit seed from the master seed and cell coordinates."""
    text = "|".join([str(master), *[str(p) for p in parts]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class ExperimentSpec:
    name: str
    master_seed: int
    scale: str = "desk"

    def __post_init__(self):
        if self.name not in EXPERIMENT_NAMES:
            raise ValueError(f"unknown experiment {self.name!r}, expected one of {EXPERIMENT_NAMES}")
        if self.scale not in ("desk", "full"):
            raise ValueError(f'scale must be "desk" or "full", got {self.scale!r}')

    @property
    def config(self) -> dict:
        return EXPERIMENT_CONFIGS[(self.name, self.scale)]


def _worker_count() -> int:
    raw = os.environ.get("VNF_PLACER_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"VNF_PLACER_THREADS must be a positive integer, got {raw!r}") from None
    if workers < 1:
        raise ValueError(f"VNF_PLACER_THREADS must be a positive integer, got {raw!r}")
    return workers


def _run_cells(cells: list[tuple[tuple, callable]]) -> list:
    """Execute (key, fn) cells, returning results sorted by key."""
    workers = _worker_count()
    if workers == 1:
        results = [(key, fn()) for key, fn in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(key, pool.submit(fn)) for key, fn in cells]
            results = [(key, fut.result()) for key, fut in futures]
    results.sort(key=lambda kv: kv[0])
    return [res for _, res in results]


def _error_row(instance_id: str, algo: str, seed: int, trial: int, err: Exception, **echo) -> dict:
    """Pinned-schema row for a run that could not complete (recorded, not fatal)."""
    return {
        "instance_id": instance_id,
        "algo": algo,
        "seed": str(seed),
        "trial": str(trial),
        "cost": "inf",
        "fail_rate": repr(1.0),
        "time_ms": repr(0.0),
        "r": str(echo.get("r", "")) if echo.get("r") is not None else "",
        "row_update": echo.get("row_update", ""),
    }


def every_path_has_uncapped_server(inst: Instance) -> bool:
    """True when no flow's path consists solely of hard-capacitated servers.

    With one uncapped server per path, every flow always has a finite-cost
    option, so no solver can run out of options mid-stream regardless of
    how earlier demand was placed.
    """
    return all(
        any(inst.servers[sid].capability.kind != "hardcap" for sid in flow.path)
        for flow in inst.flows
    )


def experiment_instance(master: int, name: str, idx, n: int, m: int, max_demand: int) -> Instance:
    """Deterministic experiment instance, redrawn until structurally feasible.

    The redraw salt is part of the derived seed, so the accepted instance is
    a pure function of (master, name, idx); the attempt count lands in the
    metadata.
    """
    parts = idx if isinstance(idx, tuple) else (idx,)
    attempt = 0
    while True:
        inst = gen_random(
            n,
            m,
            max_demand,
            path_len_range=(min(MIN_PATH_LEN, n), n),
            seed=derive_seed(master, name, "inst", *parts, attempt),
        )
        if every_path_has_uncapped_server(inst):
            break
        attempt += 1
    inst.metadata["id"] = "-".join([name, *[str(p) for p in parts]])
    inst.metadata["feasibility_redraws"] = attempt
    return inst


def _safe_lv(inst: Instance, seed: int, row_update: bool, trial: int) -> dict:
    try:
        res = randomized.run_lv(inst, seed=seed, row_update=row_update)
        res.trial = trial
        return result_to_row(res)
    except InfeasibleFlowError as err:
        return _error_row(inst.instance_id, "lv", seed, trial, err,
                          row_update="true" if row_update else "false")


def run_exp1(master: int, cfg: dict) -> dict[str, list[dict]]:
    """Cost comparison: the DP baseline against one LV run per table mode."""
    instances = [
        experiment_instance(master, "exp1", i, cfg["n"], cfg["m"], cfg["max_demand"])
        for i in range(cfg["instances"])
    ]
    cells = []
    for i, inst in enumerate(instances):
        cells.append(((i, 0, 0), lambda inst=inst, i=i: result_to_row(
            dp.run_online(inst, seed=derive_seed(master, "exp1", "dp", i)))))
        for mode_idx, row_update in enumerate((False, True)):
            seed = derive_seed(master, "exp1", "lv", i, mode_idx)
            cells.append(((i, 1, mode_idx), lambda inst=inst, seed=seed, ru=row_update: _safe_lv(inst, seed, ru, 0)))
    return {"exp1.csv": _run_cells(cells)}


def run_exp2(master: int, cfg: dict) -> dict[str, list[dict]]:
    """Expected LV cost over repeated trials against one DP run, plus ratios."""
    instances = [
        experiment_instance(master, "exp2", i, cfg["n"], cfg["m"], cfg["max_demand"])
        for i in range(cfg["instances"])
    ]
    cells = []
    for i, inst in enumerate(instances):
        cells.append(((i, 0, 0), lambda inst=inst, i=i: result_to_row(
            dp.run_online(inst, seed=derive_seed(master, "exp2", "dp", i)))))
        for t in range(cfg["trials"]):
            seed = derive_seed(master, "exp2", "lv", i, t)
            cells.append(((i, 1, t), lambda inst=inst, seed=seed, t=t: _safe_lv(inst, seed, False, t)))
    rows = _run_cells(cells)

    # per-instance mean LV/DP cost ratio
    ratio_rows = []
    for i, inst in enumerate(instances):
        mine = [r for r in rows if r["instance_id"] == inst.instance_id]
        dp_cost = next(float(r["cost"]) if r["cost"] != "inf" else math.inf
                       for r in mine if r["algo"] == "dp")
        lv_costs = [float(r["cost"]) if r["cost"] != "inf" else math.inf
                    for r in mine if r["algo"] == "lv"]
        lv_mean = sum(lv_costs) / len(lv_costs) if lv_costs else math.inf
        ratio = lv_mean / dp_cost if dp_cost not in (0.0, math.inf) and math.isfinite(lv_mean) else math.inf
        ratio_rows.append({
            "instance_id": inst.instance_id,
            "dp_cost": format_cost(dp_cost),
            "lv_mean_cost": format_cost(lv_mean),
            "ratio": format_cost(ratio),
        })
    return {"exp2.csv": rows, "exp2_ratios.csv": ratio_rows}


def run_exp3(master: int, cfg: dict) -> dict[str, list[dict]]:
    """Wall-time comparison of LV and MC across three instance sizes."""
    cells = []
    order = 0
    for tname, (n, m, max_demand) in cfg["types"].items():
        for i in range(cfg["instances"]):
            inst = experiment_instance(master, "exp3", (tname, i), n, m, max_demand)
            lv_seed = derive_seed(master, "exp3", "lv", tname, i)
            mc_seed = derive_seed(master, "exp3", "mc", tname, i)
            cells.append(((order, 0), lambda inst=inst, s=lv_seed: _safe_lv(inst, s, False, 0)))
            cells.append(((order, 1), lambda inst=inst, s=mc_seed: result_to_row(
                randomized.run_mc(inst, seed=s, r=cfg["r"]))))
            order += 1
    return {"exp3.csv": _run_cells(cells)}


def run_exp4(master: int, cfg: dict) -> dict[str, list[dict]]:
    """FAIL rate of MC as the rounds divisor r grows."""
    instances = [
        experiment_instance(master, "exp4", i, cfg["n"], cfg["m"], cfg["max_demand"])
        for i in range(cfg["seeds"])
    ]
    cells = []
    for i, inst in enumerate(instances):
        for r in cfg["r_grid"]:
            seed = derive_seed(master, "exp4", "mc", i, r)
            cells.append(((i, r), lambda inst=inst, seed=seed, r=r: result_to_row(
                randomized.run_mc(inst, seed=seed, r=r))))
    return {"exp4.csv": _run_cells(cells)}


_RUNNERS = {"exp1": run_exp1, "exp2": run_exp2, "exp3": run_exp3, "exp4": run_exp4}


def run_experiment(spec: ExperimentSpec, out_dir) -> dict[str, Path]:
    """Run one suite and write its CSV artifacts plus a metadata echo.

    Returns a name -> path map of everything written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = spec.config
    artifacts = _RUNNERS[spec.name](spec.master_seed, cfg)

    written: dict[str, Path] = {}
    for fname, rows in artifacts.items():
        path = out / fname
        columns = RATIO_COLUMNS if fname.endswith("_ratios.csv") else None
        write_rows(path, rows, columns)
        written[fname] = path

    meta = {
        "experiment": spec.name,
        "scale": spec.scale,
        "master_seed": spec.master_seed,
        "config": cfg,
        "min_path_len": MIN_PATH_LEN,
        "seed_derivation": "sha256(master|coordinates), first 8 bytes big-endian",
        "instance_filter": "redraw until every path contains an uncapped server",
        "notes": "cost column is 'inf' for runs that hit an infeasible flow",
    }
    meta_path = out / f"{spec.name}_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    written[meta_path.name] = meta_path
    return written
