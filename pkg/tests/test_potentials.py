import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgmsoliton import ConditionId, DomainError, Family, ModelConfig, Potential, coleman_indicator, condition_expr
from kgmsoliton.potentials import eval_d2V, eval_dV, eval_V

EPS_STEP = np.finfo(float).eps ** (1.0 / 3.0)

POTENTIALS = [
    Potential.power_law(1.0, 4.0),
    Potential.power_law(-0.7, 1.5),
    Potential.power_law(2.0, 6.5),
    Potential.quartic(1.0, 1.0),
    Potential.quartic(0.3, 2.5),
    Potential.logarithmic(1.0, 1.0),
    Potential.logarithmic(0.5, -0.4),
    Potential.polynomial([(2, 1.0), (4, -2.0), (6, 1.0)]),
]


def test_eval_examples():
    assert eval_V(Potential.power_law(1, 4), 2.0) == 16.0
    assert eval_dV(Potential.power_law(1, 4), 2.0) == 32.0
    assert eval_V(Potential.logarithmic(1, 1), 0.0) == 0.0
    assert eval_dV(Potential.logarithmic(1, 1), 1.0) == 0.0
    assert eval_V(Potential.quartic(1, 1), 1.0) == 0.0


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.family.value)
def test_zero_at_origin(pot):
    assert eval_V(pot, 0.0) == 0.0
    assert eval_dV(pot, 0.0) == 0.0


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.family.value)
def test_vectorized_matches_scalar(pot):
    xs = np.array([-3.0, -0.2, 0.0, 0.7, 2.5])
    vec = eval_V(pot, xs)
    assert isinstance(vec, np.ndarray)
    assert np.allclose(vec, [eval_V(pot, float(x)) for x in xs], rtol=4e-16, atol=0)
    assert isinstance(eval_V(pot, 0.5), float)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    pot = Potential.quartic(1, 1)
    with pytest.raises(DomainError):
        eval_V(pot, bad)
    with pytest.raises(DomainError):
        eval_dV(pot, np.array([0.0, bad]))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="PowerLaw", p=1.0),
        dict(family="PowerLaw", p=0.5),
        dict(family="Quartic", mu2=-1.0, g=1.0),
        dict(family="Quartic", mu2=1.0, g=-1.0),
        dict(family="Polynomial", coeffs=((3, 1.0),)),
        dict(family="Polynomial", coeffs=((0, 1.0),)),
        dict(family="PowerLaw", p=3.0, coeffs=((2, 1.0),)),
        dict(family="PowerLaw", gamma=math.nan, p=3.0),
    ],
)
def test_invalid_construction(kwargs):
    with pytest.raises(DomainError):
        Potential(**kwargs)


def test_unknown_family():
    with pytest.raises(ValueError):
        Potential("Sextic")


def test_from_dict_roundtrip():
    for pot in POTENTIALS:
        assert Potential.from_dict(pot.to_dict()) == pot


@pytest.mark.parametrize(
    "record",
    [
        {"gamma": 1, "p": 3},
        {"family": "PowerLaw", "gamma": 1},
        {"family": "PowerLaw", "gamma": 1, "p": 3, "g": 2},
        {"family": "Quartic", "mu2": "1", "g": 1},
        {"family": "Nope"},
    ],
)
def test_from_dict_errors(record):
    with pytest.raises(DomainError):
        Potential.from_dict(record)


def test_polynomial_merges_and_sorts():
    pot = Potential.polynomial({4: 1.0, 2: 0.5})
    assert pot.coeffs == ((2, 0.5), (4, 1.0))
    assert Potential.polynomial([(2, 1.0), (2, 2.0)]).coeffs == ((2, 3.0),)


def _fd(f, x):
    """Central difference with the cube-root-of-epsilon step relative to ``x``."""
    h = EPS_STEP * (abs(x) if x else 1.0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _local_scale(f, x):
    # V' has isolated zeros; measure errors against its size nearby
    return max(abs(f(x)), abs(f(1.1 * x)), abs(f(x / 1.1)), 1e-300)


finite_phi = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
# below ~1e-30 the higher powers underflow and differencing is meaningless
fd_phi = st.just(0.0) | st.builds(lambda s, a: s * a, st.sampled_from([-1.0, 1.0]), st.floats(1e-30, 1e6))


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.family.value)
@settings(max_examples=200, deadline=None)
@given(x=fd_phi)
def test_dV_matches_finite_difference(pot, x):
    fd = _fd(lambda y: eval_V(pot, y), x)
    exact = eval_dV(pot, x)
    if x == 0.0 or (pot.family is Family.LOGARITHMIC and abs(x) < 1e-8):
        assert abs(fd - exact) <= 1e-6
        return
    assert abs(fd - exact) <= 1e-6 * _local_scale(lambda y: eval_dV(pot, y), x)


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.family.value)
@settings(max_examples=100, deadline=None)
@given(x=st.floats(min_value=1e-3, max_value=1e3))
def test_d2V_matches_finite_difference(pot, x):
    fd = _fd(lambda y: eval_dV(pot, y), x)
    exact = eval_d2V(pot, x)
    assert abs(fd - exact) <= 1e-6 * _local_scale(lambda y: eval_d2V(pot, y), x)


@pytest.mark.parametrize("pot", POTENTIALS, ids=lambda p: p.family.value)
@given(x=finite_phi)
def test_even_and_odd(pot, x):
    assert eval_V(pot, x) == eval_V(pot, -x)
    assert eval_dV(pot, x) == -eval_dV(pot, -x)


MODELS = [ModelConfig(w, m, e, pot) for pot in POTENTIALS for (w, m, e) in ((0.7, 0.0, 0.0), (1.3, 0.4, 0.2))]


@pytest.mark.parametrize("cond", list(ConditionId))
@given(x=finite_phi)
@settings(max_examples=50, deadline=None)
def test_condition_even_and_zero(cond, x):
    for model in MODELS:
        assert condition_expr(model, cond, 0.0) == 0.0
        assert condition_expr(model, cond, x) == condition_expr(model, cond, -x)


@settings(max_examples=100, deadline=None)
@given(gamma=st.floats(-5, 5), p=st.floats(1.01, 9), x=st.floats(1e-3, 1e3))
def test_kgm1_power_law_closed_form(gamma, p, x):
    model = ModelConfig(0.5, 1.0, 0.1, Potential.power_law(gamma, p))
    closed = gamma * (p - 2.0) * abs(x) ** p
    got = condition_expr(model, ConditionId.KGM1, x)
    assert abs(got - closed) <= 1e-12 * max(abs(gamma * p * x**p), 1e-300)


def test_condition_examples():
    q = ModelConfig(0.0, 0.0, 0.0, Potential.quartic(1, 1))
    assert condition_expr(q, "KGM1", 1.0) == -2.0
    flat = ModelConfig(0.3, 0.0, 0.0, Potential.power_law(2.0, 2.0))
    assert condition_expr(flat, "KGM1", np.linspace(0, 5, 7)).tolist() == [0.0] * 7
    w, mu2, g = 0.8, 1.0, 0.6
    lg = ModelConfig(w, 0.0, 0.0, Potential.logarithmic(mu2, g))
    for x in (0.1, 0.9, 3.0):
        ref = (4 * w * w - 4 * mu2 - 2 * g) * x * x + 4 * g * x * x * math.log(x * x)
        assert condition_expr(lg, "QB2", x) == pytest.approx(ref, rel=1e-12)


def test_unknown_condition():
    with pytest.raises(DomainError):
        condition_expr(MODELS[0], "KGM9", 1.0)


def test_model_config_normalization():
    model = ModelConfig(-0.8, 0.0, 0.1, Potential.quartic(1, 1))
    assert model.omega == 0.8
    with pytest.raises(DomainError):
        ModelConfig(1.0, -1.0, 0.0, Potential.quartic(1, 1))
    with pytest.raises(DomainError):
        ModelConfig(1.0, 0.0, -0.1, Potential.quartic(1, 1))
    with pytest.raises(DomainError):
        ModelConfig.from_dict({"m": 0.0, "potential": {"family": "Quartic", "mu2": 1, "g": 1}})
    assert ModelConfig.from_dict(model.to_dict()) == model


def test_decay_rate():
    assert ModelConfig(math.sqrt(0.5), 0, 0, Potential.quartic(1, 1)).decay_rate() == pytest.approx(math.sqrt(0.5))
    assert math.isnan(ModelConfig(2.0, 0, 0, Potential.quartic(1, 1)).decay_rate())
    assert math.isinf(ModelConfig(1.0, 0, 0, Potential.logarithmic(1, 1)).decay_rate())
    assert ModelConfig(0.5, 1.0, 0, Potential.power_law(-1, 4)).decay_rate() == pytest.approx(math.sqrt(0.75))


def test_coleman_indicator():
    q = coleman_indicator(Potential.quartic(1, 1), (0.1, 10.0), 64)
    assert not q.attained_interior and q.min_location == pytest.approx(10.0)
    pl = coleman_indicator(Potential.power_law(1, 4), (0.1, 10.0), 64)
    assert not pl.attained_interior and pl.min_location == pytest.approx(0.1)
    poly = coleman_indicator(Potential.polynomial([(2, 1), (4, -2), (6, 1)]), (0.1, 10.0), 64)
    assert poly.attained_interior
    assert poly.min_location == pytest.approx(1.0, abs=1e-6)
    assert poly.min_value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        coleman_indicator(Potential.quartic(1, 1), (0.0, 1.0))
    with pytest.raises(DomainError):
        coleman_indicator(Potential.quartic(1, 1), (0.1, 1.0), 2)
