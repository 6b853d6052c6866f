import math

import numpy as np
import pytest

from vnf_placer import (
    ConcavePiecewise,
    FixedPlusLinear,
    HardCap,
    Step,
    Table,
    capability_from_json,
)

INF = math.inf


def test_step_worked_example():
    assert Step(2, 1.0).eval(5) == 3.0


def test_step_is_pure_ceiling_with_unit_cost_one():
    for unit in (1, 2, 3, 7, 10):
        f = Step(unit, 1.0)
        for u in range(1, 1001):
            assert f.eval(u) == math.ceil(u / unit)


def test_hardcap_examples():
    f = HardCap(1.0, 1)
    assert f.eval(0) == 0.0
    assert f.eval(1) == 1.0
    assert f.eval(2) == INF


def test_fixed_plus_linear_example():
    assert FixedPlusLinear(1.0, 0.01).eval(100) == 2.0


def test_zero_load_costs_nothing(dyadic_zoo, real_zoo):
    for f in dyadic_zoo + real_zoo:
        assert f.eval(0) == 0.0


def test_marginal_hardcap_fresh_and_saturated():
    f = HardCap(1.0, 1)
    assert f.marginal(0, 1) == 1.0
    assert f.marginal(1, 1) == INF


def test_marginal_step_inside_and_across_block():
    f = Step(3, 2.0)
    assert f.marginal(2, 1) == 0.0  # 3 units still fit the first block
    assert f.marginal(3, 1) == 2.0  # unit 4 opens a new block


def test_marginal_matches_eval_difference_exactly_for_dyadic(dyadic_zoo):
    for f in dyadic_zoo:
        for u in range(0, 40):
            if math.isinf(f.eval(u)):
                continue
            for a in (1, 2, 5, 11):
                m = f.marginal(u, a)
                assert m >= 0.0
                assert m + f.eval(u) == f.eval(u + a)


def test_marginal_additivity_within_tolerance_for_real_params(real_zoo):
    for f in real_zoo:
        for u in range(0, 35):
            base = f.eval(u)
            if math.isinf(base):
                continue
            for a in (1, 3, 8):
                m = f.marginal(u, a)
                assert m >= 0.0
                total = f.eval(u + a)
                if math.isinf(m):
                    assert math.isinf(total)
                else:
                    assert abs((m + base) - total) <= 1e-9 * max(1.0, abs(total))


def test_marginal_from_saturated_state_is_inf():
    f = HardCap(1.0, 2)
    assert f.marginal(3, 1) == INF  # defensive: eval(3) is already inf


def test_monotone_on_wide_probe(dyadic_zoo, real_zoo):
    for f in dyadic_zoo + real_zoo:
        vals = f.eval_many(np.arange(0, 301, dtype=np.int64))
        assert all(vals[i] <= vals[i + 1] for i in range(300))
        assert f.validate(300) == []


def test_validate_reports_table_decrease():
    f = Table((0.0, 2.0, 1.0), "last")
    violations = f.validate(2)
    assert len(violations) == 1
    v = violations[0]
    assert (v.kind, v.load_a, v.load_b) == ("monotonic", 1, 2)
    assert (v.value_a, v.value_b) == (2.0, 1.0)
    assert "(1,2)" in str(v)


def test_validate_free_hardcap_is_clean():
    assert HardCap(0.0, 5).validate(10) == []


def test_validate_reports_nonzero_origin():
    f = Table((1.0, 2.0), "last")
    kinds = [v.kind for v in f.validate(1)]
    assert "origin" in kinds


def test_validate_rejects_bad_probe_limit():
    with pytest.raises(ValueError):
        Step(1, 1.0).validate(0)


def test_eval_many_matches_scalar_eval_bitwise(dyadic_zoo, real_zoo):
    loads = np.arange(0, 120, dtype=np.int64)
    for f in dyadic_zoo + real_zoo:
        vec = f.eval_many(loads)
        for u in range(120):
            assert vec[u] == f.eval(u)


def test_concave_interpolation_and_extension():
    f = ConcavePiecewise(((2, 4.0), (4, 6.0)))
    assert f.eval(0) == 0.0
    assert f.eval(1) == 2.0  # halfway up the first segment (slope 2)
    assert f.eval(2) == 4.0
    assert f.eval(3) == 5.0  # second segment, slope 1
    assert f.eval(4) == 6.0
    assert f.eval(6) == 8.0  # past the last breakpoint: extend at slope 1


def test_table_overflow_policies():
    last = Table((0.0, 1.0, 3.0), "last")
    assert last.eval(2) == 3.0
    assert last.eval(10) == 3.0
    hard = Table((0.0, 1.0, 3.0), "inf")
    assert hard.eval(2) == 3.0
    assert hard.eval(3) == INF


@pytest.mark.parametrize(
    "build",
    [
        lambda: Step(0, 1.0),
        lambda: Step(2, 0.0),
        lambda: Step(2, -1.0),
        lambda: HardCap(-0.5, 3),
        lambda: HardCap(1.0, 0),
        lambda: FixedPlusLinear(-1.0, 0.5),
        lambda: FixedPlusLinear(1.0, -0.5),
        lambda: ConcavePiecewise(()),
        lambda: ConcavePiecewise(((2, 1.0), (2, 2.0))),
        lambda: ConcavePiecewise(((0, 1.0),)),
        lambda: ConcavePiecewise(((3, -1.0),)),
        lambda: Table((), "last"),
        lambda: Table((0.0, -1.0), "last"),
        lambda: Table((0.0, 1.0), "sometimes"),
    ],
)
def test_construction_rejects_bad_parameters(build):
    with pytest.raises(ValueError):
        build()


def test_json_round_trip(dyadic_zoo, real_zoo):
    for f in dyadic_zoo + real_zoo:
        again = capability_from_json(f.to_json())
        assert again == f


def test_json_round_trip_with_inf_table_values():
    f = Table((0.0, 1.0, INF), "inf")
    doc = f.to_json()
    assert doc["values"][2] == "inf"
    assert capability_from_json(doc) == f


def test_json_rejects_unknown_kind():
    with pytest.raises(ValueError, match="kind"):
        capability_from_json({"kind": "quadratic"})


def test_json_rejects_missing_field():
    with pytest.raises(ValueError, match="unit_cost"):
        capability_from_json({"kind": "step", "unit_size": 2})
