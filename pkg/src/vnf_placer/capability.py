"""Server cost-of-load functions.

A server charges for hosted demand through a nondecreasing function of its
integer load, with zero cost at zero load. Values live in the nonnegative
reals extended with +inf (a saturated server). Five families are supported:
step, hard-capacitated, fixed-plus-linear, concave piecewise-linear, and
explicit lookup tables.

All functions are immutable after construction and safe to share between
concurrent evaluators.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

KINDS = ("step", "hardcap", "fixed_linear", "concave", "table")


@dataclass(frozen=True)
class Violation:
    """A probed property failure: nonzero cost at load 0, or a decrease."""

    kind: str  # "origin" or "monotonic"
    load_a: int
    load_b: int
    value_a: float
    value_b: float

    def __str__(self) -> str:
        if self.kind == "origin":
            return f"f(0) = {self.value_a}, expected 0"
        return (
            f"violation at ({self.load_a},{self.load_b}): "
            f"f({self.load_a}) = {self.value_a} > f({self.load_b}) = {self.value_b}"
        )


class CapabilityFunction:
    """Base class for integer-load cost functions."""

    kind = "abstract"

    def eval(self, load: int) -> float:
        """Cost of carrying `load` units. eval(0) is 0 for every variant."""
        raise NotImplementedError

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        """Vectorized eval over an integer array; same arithmetic as eval."""
        raise NotImplementedError

    def marginal(self, current_load: int, added: int) -> float:
        """Cost increase of placing `added` more units at `current_load`.

        Defensively returns inf if the current load already costs inf
        (solvers never create such states on purpose).
        """
        base = self.eval(current_load)
        if math.isinf(base):
            return INF
        return self.eval(current_load + added) - base

    def marginal_many(self, current_load: int, added_max: int) -> np.ndarray:
        """Marginal costs for added = 0..added_max; index 0 is exactly 0.0."""
        base = self.eval(current_load)
        if math.isinf(base):
            out = np.full(added_max + 1, INF)
            out[0] = 0.0
            return out
        loads = current_load + np.arange(added_max + 1, dtype=np.int64)
        out = self.eval_many(loads) - base
        out[0] = 0.0
        return out

    def validate(self, probe_limit: int) -> list[Violation]:
        """Probe f on 0..probe_limit for f(0)=0 and monotonicity.

        Violations are returned as data, never raised; an empty list means
        no violation was found up to the probe limit.
        """
        if probe_limit < 1:
            raise ValueError("probe_limit must be >= 1")
        vals = self.eval_many(np.arange(probe_limit + 1, dtype=np.int64))
        out: list[Violation] = []
        if vals[0] != 0.0:
            out.append(Violation("origin", 0, 0, float(vals[0]), 0.0))
        for x in range(probe_limit):
            if vals[x] > vals[x + 1]:
                out.append(
                    Violation("monotonic", x, x + 1, float(vals[x]), float(vals[x + 1]))
                )
        return out

    def to_json(self) -> dict:
        raise NotImplementedError


def _check_finite_nonneg(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite nonnegative number, got {value}")


@dataclass(frozen=True)
class Step(CapabilityFunction):
    """Cost grows in fixed-price blocks of `unit_size` units each.

    f(0) = 0 and f(u) = unit_cost * ceil(u / unit_size) for u > 0.
    """

    unit_size: int
    unit_cost: float

    kind = "step"

    def __post_init__(self):
        if int(self.unit_size) != self.unit_size or self.unit_size < 1:
            raise ValueError(f"unit_size must be a positive integer, got {self.unit_size}")
        object.__setattr__(self, "unit_size", int(self.unit_size))
        object.__setattr__(self, "unit_cost", float(self.unit_cost))
        _check_finite_nonneg("unit_cost", self.unit_cost)
        if self.unit_cost <= 0:
            raise ValueError("unit_cost must be positive")

    def eval(self, load: int) -> float:
        # integer ceiling; exact for loads up to 2**53
        return self.unit_cost * ((load + self.unit_size - 1) // self.unit_size)

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        return self.unit_cost * ((loads + self.unit_size - 1) // self.unit_size)

    def to_json(self) -> dict:
        return {"kind": "step", "unit_size": self.unit_size, "unit_cost": self.unit_cost}


@dataclass(frozen=True)
class HardCap(CapabilityFunction):
    """Flat opening cost up to a hard capacity, infinite beyond it."""

    open_cost: float
    capacity: int

    kind = "hardcap"

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ValueError(f"capacity must be a positive integer, got {self.capacity}")
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "open_cost", float(self.open_cost))
        _check_finite_nonneg("open_cost", self.open_cost)

    def eval(self, load: int) -> float:
        if load == 0:
            return 0.0
        return self.open_cost if load <= self.capacity else INF

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        return np.where(loads == 0, 0.0, np.where(loads <= self.capacity, self.open_cost, INF))

    def to_json(self) -> dict:
        return {"kind": "hardcap", "open_cost": self.open_cost, "capacity": self.capacity}


@dataclass(frozen=True)
class FixedPlusLinear(CapabilityFunction):
    """Opening cost plus a linear per-unit charge: f(u) = b + a*u for u > 0."""

    open_cost: float
    slope: float

    kind = "fixed_linear"

    def __post_init__(self):
        object.__setattr__(self, "open_cost", float(self.open_cost))
        object.__setattr__(self, "slope", float(self.slope))
        _check_finite_nonneg("open_cost", self.open_cost)
        _check_finite_nonneg("slope", self.slope)

    def eval(self, load: int) -> float:
        if load == 0:
            return 0.0
        return self.open_cost + self.slope * load

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        return np.where(loads == 0, 0.0, self.open_cost + self.slope * loads)

    def to_json(self) -> dict:
        return {"kind": "fixed_linear", "open_cost": self.open_cost, "slope": self.slope}


@dataclass(frozen=True)
class ConcavePiecewise(CapabilityFunction):
    """Piecewise-linear interpolation through (0,0) and given breakpoints.

    Integer loads between breakpoints are interpolated linearly; loads past
    the last breakpoint extend along the final segment's slope. Breakpoint
    loads must be strictly increasing positive integers; costs must be
    finite and nonnegative (concavity itself is the generator's business,
    `validate` probes monotonicity).
    """

    breakpoints: tuple[tuple[int, float], ...]

    kind = "concave"

    # derived lookup arrays, filled in __post_init__
    _xs: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _ys: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _slopes: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _xs_arr: np.ndarray = field(init=False, repr=False, compare=False)
    _ys_arr: np.ndarray = field(init=False, repr=False, compare=False)
    _slopes_arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple((int(l), float(c)) for l, c in self.breakpoints)
        if not bps:
            raise ValueError("breakpoints must be non-empty")
        prev = 0
        for l, c in bps:
            if l <= prev:
                raise ValueError(f"breakpoint loads must be strictly increasing positive integers, got {l}")
            _check_finite_nonneg("breakpoint cost", c)
            prev = l
        object.__setattr__(self, "breakpoints", bps)
        xs = (0,) + tuple(l for l, _ in bps)
        ys = (0.0,) + tuple(c for _, c in bps)
        slopes = tuple((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(bps)))
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        object.__setattr__(self, "_slopes", slopes)
        object.__setattr__(self, "_xs_arr", np.array(xs, dtype=np.int64))
        object.__setattr__(self, "_ys_arr", np.array(ys))
        object.__setattr__(self, "_slopes_arr", np.array(slopes))

    def eval(self, load: int) -> float:
        xs, ys, slopes = self._xs, self._ys, self._slopes
        nseg = len(slopes)
        j = bisect_right(xs, load) - 1
        if j >= nseg:  # at or past the last breakpoint: linear extension
            return ys[nseg] + (load - xs[nseg]) * slopes[nseg - 1]
        val = ys[j] + (load - xs[j]) * slopes[j]
        # clamp guards against 1-ulp overshoot at segment seams
        return min(val, ys[j + 1])

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        xs, ys, slopes = self._xs_arr, self._ys_arr, self._slopes_arr
        nseg = len(slopes)
        j = np.searchsorted(xs, loads, side="right") - 1
        ext = j >= nseg
        ja = np.where(ext, nseg, j)
        js = np.where(ext, nseg - 1, np.minimum(j, nseg - 1))
        val = ys[ja] + (loads - xs[ja]) * slopes[js]
        cap = ys[np.where(ext, nseg, np.minimum(j + 1, nseg))]
        return np.where(ext, val, np.minimum(val, cap))

    def to_json(self) -> dict:
        return {"kind": "concave", "breakpoints": [[l, c] for l, c in self.breakpoints]}


@dataclass(frozen=True)
class Table(CapabilityFunction):
    """Explicit costs for loads 0..L with a declared overflow policy.

    overflow "last" repeats the final value past L; overflow "inf" makes
    any load beyond the table infinite. Entries may themselves be inf.
    Monotonicity of the values is not enforced at construction; `validate`
    reports decreases as violations.
    """

    values: tuple[float, ...]
    overflow: str = "last"

    kind = "table"

    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("values must be non-empty")
        for v in vals:
            if math.isnan(v) or v < 0:
                raise ValueError(f"table values must be nonnegative, got {v}")
        if self.overflow not in ("last", "inf"):
            raise ValueError(f'overflow must be "last" or "inf", got {self.overflow!r}')
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_arr", np.array(vals))

    def eval(self, load: int) -> float:
        last = len(self.values) - 1
        if load <= last:
            return self.values[load]
        return self.values[last] if self.overflow == "last" else INF

    def eval_many(self, loads: np.ndarray) -> np.ndarray:
        last = len(self.values) - 1
        out = self._arr[np.minimum(loads, last)]
        if self.overflow == "inf":
            out = np.where(loads > last, INF, out)
        return out

    def to_json(self) -> dict:
        return {
            "kind": "table",
            "values": [_num_to_json(v) for v in self.values],
            "overflow": self.overflow,
        }


def _num_to_json(x: float):
    return "inf" if math.isinf(x) else x


def _num_from_json(v, where: str) -> float:
    if v == "inf":
        return INF
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f'{where}: expected a number or "inf", got {v!r}')
    return float(v)


def _int_from_json(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"{where}: expected an integer, got {v!r}")
    return v


def capability_from_json(obj: dict, where: str = "capability") -> CapabilityFunction:
    """Parse the serialized form produced by to_json.

    Raises ValueError with a field path on any schema problem.
    """
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected an object, got {type(obj).__name__}")
    kind = obj.get("kind")
    try:
        if kind == "step":
            return Step(
                _int_from_json(obj["unit_size"], f"{where}.unit_size"),
                _num_from_json(obj["unit_cost"], f"{where}.unit_cost"),
            )
        if kind == "hardcap":
            return HardCap(
                _num_from_json(obj["open_cost"], f"{where}.open_cost"),
                _int_from_json(obj["capacity"], f"{where}.capacity"),
            )
        if kind == "fixed_linear":
            return FixedPlusLinear(
                _num_from_json(obj["open_cost"], f"{where}.open_cost"),
                _num_from_json(obj["slope"], f"{where}.slope"),
            )
        if kind == "concave":
            bps = obj["breakpoints"]
            if not isinstance(bps, list):
                raise ValueError(f"{where}.breakpoints: expected a list")
            parsed = []
            for i, bp in enumerate(bps):
                if not isinstance(bp, list) or len(bp) != 2:
                    raise ValueError(f"{where}.breakpoints[{i}]: expected [load, cost]")
                parsed.append(
                    (
                        _int_from_json(bp[0], f"{where}.breakpoints[{i}][0]"),
                        _num_from_json(bp[1], f"{where}.breakpoints[{i}][1]"),
                    )
                )
            return ConcavePiecewise(tuple(parsed))
        if kind == "table":
            vals = obj["values"]
            if not isinstance(vals, list):
                raise ValueError(f"{where}.values: expected a list")
            parsed_vals = tuple(
                _num_from_json(v, f"{where}.values[{i}]") for i, v in enumerate(vals)
            )
            overflow = obj.get("overflow", "last")
            return Table(parsed_vals, overflow)
    except KeyError as e:
        raise ValueError(f"{where}: missing field {e.args[0]!r}") from None
    raise ValueError(f'{where}.kind: unknown kind {kind!r}, expected one of {KINDS}')
