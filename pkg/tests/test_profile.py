import json
import math

import numpy as np
import pytest

from kgmsoliton import ModelConfig, Potential, RadialProfile, ScalingParams
from kgmsoliton.profile import model_hash, radial_gradient, uniform_step

MODEL = ModelConfig(1.0, 0.0, 0.0, Potential.logarithmic(1.0, 1.0))


def gaussian(n=301, R=12.0, width=1.0):
    r = np.linspace(0.0, R, n)
    return RadialProfile(r, math.e * np.exp(-0.5 * (r / width) ** 2), np.zeros(n), MODEL)


def test_validation():
    r = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        RadialProfile(r + 0.1, r, r, MODEL)
    with pytest.raises(ValueError):
        RadialProfile(r[::-1], r, r, MODEL)
    with pytest.raises(ValueError):
        RadialProfile(r, r[:-1], r, MODEL)
    with pytest.raises(ValueError):
        RadialProfile(r[:2], r[:2], r[:2], MODEL)
    with pytest.raises(ValueError):
        ScalingParams(1.0, 0.0, 0.0)


def test_radial_gradient_sixth_order():
    errs = []
    for n in (101, 201):
        p = gaussian(n)
        d = radial_gradient(p.phi, p.h)
        exact = -p.r * p.phi
        errs.append(np.max(np.abs(d - exact)))
    assert errs[1] < errs[0] / 30.0
    assert errs[1] < 1e-6
    assert radial_gradient(gaussian().phi, 0.04)[0] == 0.0
    with pytest.raises(ValueError):
        radial_gradient(np.ones(5), 0.1)


def test_uniform_step():
    assert uniform_step(np.linspace(0, 2, 11)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        uniform_step(np.array([0.0, 0.1, 0.3]))


def test_decay_and_nodes():
    p = gaussian()
    assert p.decays()
    assert p.node_count() == 0
    assert not p.is_zero()
    wavy = p.with_fields(np.cos(p.r) * p.phi, p.a0)
    assert wavy.node_count() == 4
    short = gaussian(R=3.0)
    assert not short.decays()


def test_phi_tail_recovers_exponential():
    r = np.linspace(0.0, 40.0, 2001)
    kappa = 0.7
    phi = np.where(r > 0, np.exp(-kappa * r) / np.maximum(r, 1e-300), 1.0)
    phi[0] = phi[1]
    p = RadialProfile(r, phi, np.zeros_like(r), MODEL)
    _, _, k = p.phi_tail()
    assert k == pytest.approx(kappa, rel=1e-10)
    outside = np.array([45.0, 50.0])
    assert p.eval_phi(outside) == pytest.approx(np.exp(-kappa * outside) / outside, rel=1e-9)


def test_eval_inside_matches_grid():
    p = gaussian()
    assert np.allclose(p.eval_phi(p.r), p.phi, rtol=0, atol=1e-14)
    mid = 0.5 * (p.r[1:] + p.r[:-1])
    assert np.max(np.abs(p.eval_phi(mid) - math.e * np.exp(-0.5 * mid**2))) < 1e-5


def test_a0_coulomb_continuation():
    r = np.linspace(0.0, 20.0, 401)
    a0 = 1.0 / np.sqrt(1.0 + r**2)
    p = RadialProfile(r, np.exp(-r * r), a0, MODEL)
    assert p.eval_a0(np.array([40.0]))[0] == pytest.approx(20.0 * a0[-1] / 40.0)
    tail = p.coulomb_tail()
    assert tail["rel_spread"] < 1e-2
    assert tail["coulomb_constant"] == pytest.approx(20.0 * a0[-1])


def test_csv_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    p = gaussian()
    p = p.with_fields(p.phi * (1 + 1e-3 * rng.standard_normal(len(p.r))), rng.standard_normal(len(p.r)))
    text = p.to_csv(tmp_path / "p.csv")
    q = RadialProfile.from_csv(tmp_path / "p.csv", MODEL)
    for name in ("r", "phi", "a0"):
        assert np.array_equal(getattr(p, name), getattr(q, name))
    assert text.splitlines()[0] == "r,phi,a0"


def test_json_roundtrip_bit_exact(tmp_path):
    p = gaussian()
    p.ode_residual = 1.234e-7
    p.meta["note"] = "x"
    p.to_json(tmp_path / "p.json")
    q = RadialProfile.from_json(tmp_path / "p.json")
    for name in ("r", "phi", "a0"):
        assert np.array_equal(getattr(p, name), getattr(q, name))
    assert q.model == p.model
    assert q.ode_residual == p.ode_residual
    assert q.meta == p.meta
    nan_res = gaussian()
    assert math.isnan(RadialProfile.from_json(nan_res.to_json()).ode_residual)


def test_json_hash_mismatch(tmp_path):
    data = json.loads(gaussian().to_json())
    data["model"]["omega"] = 0.5
    with pytest.raises(ValueError):
        RadialProfile.from_json(json.dumps(data))


def test_model_hash_is_stable():
    assert model_hash(MODEL) == model_hash(ModelConfig.from_dict(MODEL.to_dict()))
    assert model_hash(MODEL) != model_hash(MODEL.replace(e=0.1))
    assert len(model_hash(MODEL)) == 16


def test_scaling_params():
    s = ScalingParams(1.5, 0.0)
    assert s.lam == 1.0
    assert s.at(2.0).to_dict() == {"alpha": 1.5, "beta": 0.0, "lambda": 2.0}
