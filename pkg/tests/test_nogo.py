import math

import numpy as np
import pytest

from kgmsoliton import ModelConfig, Potential, condition_expr
from kgmsoliton.nogo import (
    POWER_LAW_CASES,
    PreconditionError,
    Status,
    check_condition,
    classify_general,
    classify_power_law,
    default_phi_range,
    sample_grid,
)
from kgmsoliton.potentials import DomainError

QUARTIC = Potential.quartic(1.0, 1.0)


@pytest.mark.parametrize(
    "args, label",
    [
        ((0.0, 3.0, 1.0, 4.0), "γ=0"),
        ((1.0, 4.0, 1.0, 4.0), "γ>0, p≥2"),
        ((1.0, 1.5, 1.0, 0.25), "γ>0, 1<p<2, m²≥ω²"),
        ((-1.0, 1.5, 0.0, 4.0), "γ<0, 1<p≤2"),
        ((-1.0, 6.0, 1.0, 0.25), "γ<0, p≥6, m²≥ω²>0"),
        ((-1.0, 6.0, 1.0, 1.0), "γ<0, p≥6, m²≥ω²>0"),
    ],
)
def test_power_law_cases(args, label):
    v = classify_power_law(*args)
    assert v.status is Status.EXCLUDED
    assert v.condition == label
    assert v.witness is None
    assert label in POWER_LAW_CASES


@pytest.mark.parametrize(
    "args",
    [(-1.0, 4.0, 1.0, 4.0), (1.0, 1.5, 0.25, 1.0), (-1.0, 6.0, 0.0, 0.0), (-1.0, 7.0, 0.25, 1.0)],
)
def test_power_law_not_excluded(args):
    v = classify_power_law(*args)
    assert v.status is Status.NOT_EXCLUDED
    assert v.witness is None


def test_power_law_domain():
    with pytest.raises(DomainError):
        classify_power_law(1.0, 1.0, 1.0, 1.0)


def test_sample_grid():
    xs = sample_grid((0.0, 1e3), 512)
    assert xs[0] > 0.0 and xs[-1] == 1e3
    assert np.all(np.diff(xs) > 0)
    assert xs[0] <= 1e-6
    assert len(xs) >= 400
    assert sample_grid((0.5, 2.0), 64)[0] == 0.5


def test_default_range_follows_field_scale():
    small = ModelConfig(0.5, 1.0, 0.0, Potential.power_law(-1.0, 4.0))
    assert default_phi_range(small) == (0.0, 1e3)
    huge = ModelConfig(0.26, 0.0, 0.0, Potential.power_law(1.04, 1.93))
    assert default_phi_range(huge)[1] > 1e18


def test_check_examples():
    v = check_condition(ModelConfig(1.0, 0.0, 0.1, Potential.power_law(1.0, 3.0)), "KGM1")
    assert v.status is Status.EXCLUDED and v.witness is None

    v = check_condition(ModelConfig(1.0, 0.0, 0.0, QUARTIC), "KGM1", (0.0, 2.0))
    assert v.status is Status.NOT_EXCLUDED
    assert v.witness > 0.0
    assert condition_expr(ModelConfig(1.0, 0.0, 0.0, QUARTIC), "KGM1", v.witness) < 0.0

    v = check_condition(ModelConfig(math.sqrt(0.5), 0.0, 0.0, QUARTIC), "QB2", (0.0, 2.0))
    assert v.status is Status.NOT_EXCLUDED
    assert v.roots == pytest.approx((1.0,), abs=1e-12)

    v = check_condition(ModelConfig(0.0, 1.0, 0.1, Potential.power_law(1.0, 4.0)), "KGM3", (0.0, 10.0))
    assert v.status is Status.EXCLUDED


def test_witness_violates_by_more_than_tol():
    model = ModelConfig(0.5, 0.0, 0.3, QUARTIC)
    for cond in ("KGM1", "KGM2", "KGM3", "AMP"):
        v = check_condition(model, cond, (0.0, 5.0))
        if v.status is Status.NOT_EXCLUDED:
            assert v.margin < -1e-10
            assert condition_expr(model, cond, v.witness) < 0.0


def test_preconditions():
    with pytest.raises(PreconditionError):
        check_condition(ModelConfig(0.0, 1.0, 0.1, QUARTIC), "KGM2")
    with pytest.raises(PreconditionError):
        check_condition(ModelConfig(0.5, 0.0, 0.1, QUARTIC), "QB2")
    with pytest.raises(PreconditionError):
        check_condition(ModelConfig(0.5, 1.0, 0.0, QUARTIC), "QB2")
    with pytest.raises(DomainError):
        check_condition(ModelConfig(0.5, 0.0, 0.0, QUARTIC), "KGM1", (1.0, 0.5))
    with pytest.raises(DomainError):
        check_condition(ModelConfig(0.5, 0.0, 0.0, QUARTIC), "KGM1", n=4)
    with pytest.raises(DomainError):
        check_condition(ModelConfig(0.5, 0.0, 0.0, QUARTIC), "KGM1", tol=0.0)


def test_equality_boundary_is_excluded():
    v = check_condition(ModelConfig(0.7, 0.0, 0.2, Potential.power_law(3.0, 2.0)), "KGM1")
    assert v.status is Status.EXCLUDED


def test_qb2_tolerance_band_is_inconclusive():
    # V = phi^2 + c phi^4 with omega = 1 gives QB2 = -2 c phi^4, far inside the band
    model = ModelConfig(1.0, 0.0, 0.0, Potential.polynomial([(2, 1.0), (4, 1e-14)]))
    v = check_condition(model, "QB2", (0.0, 1.0))
    assert v.status is Status.INCONCLUSIVE


def test_classify_general_logarithmic():
    res = classify_general(ModelConfig(1.0, 0.0, 0.0, Potential.logarithmic(1.0, 1.0)), (1e-3, 1e3))
    assert res.aggregate.status is Status.NOT_EXCLUDED
    assert len(res.per_condition) == 4
    assert all(v.status is Status.NOT_EXCLUDED for v in res.per_condition)


def test_classify_general_examples():
    res = classify_general(ModelConfig(0.8, 0.0, 0.3, Potential.power_law(1.0, 2.0)))
    assert res.aggregate.excluded and res.aggregate.condition == "KGM1"

    res = classify_general(ModelConfig(math.sqrt(2.0), 0.0, 0.0, QUARTIC))
    by = {v.condition: v for v in res.per_condition}
    assert by["KGM3"].status is Status.NOT_EXCLUDED
    assert by["QB2"].status is Status.EXCLUDED
    assert res.aggregate.excluded


def test_gauged_condition_set():
    gauged = classify_general(ModelConfig(0.5, 0.0, 0.3, QUARTIC))
    assert [v.condition for v in gauged.per_condition] == ["KGM1", "KGM2", "KGM3", "AMP"]
    static = classify_general(ModelConfig(0.0, 1.0, 0.3, QUARTIC))
    assert [v.condition for v in static.per_condition] == ["KGM1", "KGM3", "AMP"]


def test_ungauged_mass_is_absorbed():
    # e = 0, m != 0: QB2 is evaluated with omega^2 - m^2
    res = classify_general(ModelConfig(1.0, 0.5, 0.0, QUARTIC))
    assert [v.condition for v in res.per_condition] == ["KGM1", "QB2", "KGM3", "AMP"]


def test_refinement_does_not_unexclude():
    rng = np.random.default_rng(3)
    for _ in range(40):
        g, p = rng.uniform(-2, 2), rng.uniform(1.1, 8)
        model = ModelConfig(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.05, 1), Potential.power_law(g, p))
        coarse = classify_general(model, n=64).aggregate
        if coarse.excluded:
            for n in (256, 2048):
                assert classify_general(model, n=n).aggregate.excluded


def test_deterministic():
    model = ModelConfig(0.9, 0.3, 0.2, Potential.logarithmic(1.0, 0.5))
    assert classify_general(model).to_dict() == classify_general(model).to_dict()


def test_grid_consistency_with_case_table():
    gammas = np.union1d(np.linspace(-2, 2, 10), [0.0])
    ps = np.linspace(1.1, 8, 10)
    for g in gammas:
        for p in ps:
            for m2 in np.linspace(0, 2, 5):
                for w2 in np.linspace(0, 2, 5):
                    if classify_power_law(g, p, m2, w2).excluded:
                        model = ModelConfig(math.sqrt(w2), math.sqrt(m2), 0.2, Potential.power_law(g, p))
                        assert classify_general(model, n=128).aggregate.excluded, (g, p, m2, w2)
