import random

import pytest

from vnf_placer import (
    ConcavePiecewise,
    FixedPlusLinear,
    HardCap,
    Step,
    Table,
)


def dyadic_variant_zoo():
    """Variants whose parameters are exactly representable binary fractions,
    so cost sums are exact in double precision."""
    return [
        Step(1, 1.0),
        Step(2, 1.0),
        Step(3, 2.0),
        Step(7, 0.5),
        Step(20, 2.25),
        HardCap(1.0, 1),
        HardCap(0.0, 5),
        HardCap(2.5, 12),
        FixedPlusLinear(1.0, 0.25),
        FixedPlusLinear(0.0, 1.0),
        FixedPlusLinear(2.0, 0.0),
        # breakpoint gaps are powers of two and costs dyadic: slopes stay dyadic
        ConcavePiecewise(((4, 8.0),)),
        ConcavePiecewise(((2, 4.0), (4, 6.0))),
        ConcavePiecewise(((1, 2.0), (3, 3.0), (7, 4.0))),
        Table((0.0, 1.0, 1.5, 1.5, 2.0), "last"),
        Table((0.0, 0.5, 1.0), "inf"),
    ]


def real_variant_zoo(seed=20240601, count=30):
    """Seeded variants with arbitrary real parameters."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        kind = rng.choice(["step", "hardcap", "fixed_linear", "concave", "table"])
        if kind == "step":
            out.append(Step(rng.randint(1, 15), rng.uniform(0.1, 4.0)))
        elif kind == "hardcap":
            out.append(HardCap(rng.uniform(0.0, 4.0), rng.randint(1, 30)))
        elif kind == "fixed_linear":
            out.append(FixedPlusLinear(rng.uniform(0.0, 3.0), rng.uniform(0.0, 2.0)))
        elif kind == "concave":
            loads = sorted(rng.sample(range(1, 40), 3))
            slope = rng.uniform(0.2, 2.0)
            bps, cost, prev = [], 0.0, 0
            for l in loads:
                cost += slope * (l - prev)
                bps.append((l, cost))
                prev = l
                slope *= rng.uniform(0.3, 0.9)
            out.append(ConcavePiecewise(tuple(bps)))
        else:
            length = rng.randint(2, 12)
            vals, acc = [0.0], 0.0
            for _ in range(length - 1):
                acc += rng.uniform(0.0, 2.0)
                vals.append(acc)
            out.append(Table(tuple(vals), rng.choice(["last", "inf"])))
    return out


@pytest.fixture
def dyadic_zoo():
    return dyadic_variant_zoo()


@pytest.fixture
def real_zoo():
    return real_variant_zoo()
