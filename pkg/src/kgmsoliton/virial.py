"""Integral functionals of a profile and the scaling identities they obey.

For a solution of the reduced action, stationarity under
``phi -> lam^alpha phi(lam x)``, ``A0 -> lam^beta A0(lam x)`` gives linear
relations among the functionals; the residual helpers below return
``|sum of terms| / sum |terms|`` so tolerances are scale free.
:func:`scaling_curve` evaluates ``S(lam)`` by direct substitution and is the
independent check on those closed forms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import simpson

from .potentials import DomainError, Family, ModelConfig, eval_dV, eval_V
from .profile import DECAY_RATIO, RadialProfile, ScalingParams, radial_gradient, uniform_step

__all__ = [
    "FunctionalSet",
    "ScalingParams",
    "compute_functionals",
    "ds2_terms",
    "ds4_terms",
    "amplitude_terms",
    "action_terms",
    "normalized",
    "virial_residual_power",
    "virial_residual_general",
    "virial_residual_amplitude",
    "action_value",
    "power_law_action",
    "scaling_curve",
    "stationarity",
    "charge",
    "identity_report",
    "STATIONARITY_PAIRS",
    "GENERAL_ALPHAS",
]

STATIONARITY_PAIRS = ((1.5, 0.0), (0.5, 2.0), (0.0, 3.0))
GENERAL_ALPHAS = (0.0, 0.5, 1.0, 1.5)

_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(64)


@dataclass(frozen=True)
class FunctionalSet:
    """``V1 = int phi^2``, ``Pi1 = int |grad phi|^2``, ``Pi2 = 1/2 int |grad A0|^2``,
    ``I1 = 2 e omega int A0 phi^2``, ``I2 = e^2 int A0^2 phi^2``,
    ``V2 = int V(phi)``, ``J = int V'(phi) phi``; all over R^3."""

    V1: float
    Pi1: float
    Pi2: float
    I1: float
    I2: float
    V2: float
    J: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def zero(cls) -> "FunctionalSet":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _integrands(model: ModelConfig, phi, dphi, a0, da0):
    e, om = model.e, model.omega
    phi2 = phi * phi
    return {
        "V1": phi2,
        "Pi1": dphi * dphi,
        "Pi2": 0.5 * da0 * da0,
        "I1": 2.0 * e * om * a0 * phi2,
        "I2": e * e * a0 * a0 * phi2,
        "V2": np.asarray(eval_V(model.potential, phi)),
        "J": np.asarray(eval_dV(model.potential, phi)) * phi,
    }


def compute_functionals(profile: RadialProfile, decay_ratio: float = DECAY_RATIO) -> FunctionalSet:
    """Composite Simpson on the grid plus tail corrections beyond ``R_max``.

    The scalar tail is the exponential fitted to the last decade of the
    profile, integrated with Gauss-Laguerre; the gauge tail is Coulombic and
    only ``Pi2`` picks up a closed-form piece ``2 pi (R A0(R))^2 / R``.

    Raises
    ------
    ValueError
        If ``|phi(R_max)|`` is not below ``decay_ratio * |phi(0)|``.
    """
    if not profile.decays(decay_ratio):
        raise ValueError(
            f"profile not localized: |phi(R_max)|/|phi(0)| = "
            f"{abs(profile.phi[-1]) / max(abs(profile.phi0), 1e-300):.3e} >= {decay_ratio:g}"
        )
    if profile.is_zero():
        return FunctionalSet.zero()
    r = profile.r
    h = uniform_step(r)
    dphi = radial_gradient(profile.phi, h)
    da0 = radial_gradient(profile.a0, h)
    weight = 4.0 * math.pi * r * r
    parts = _integrands(profile.model, profile.phi, dphi, profile.a0, da0)
    vals = {k: float(simpson(v * weight, x=r)) for k, v in parts.items()}

    for k, v in _phi_tail_integrals(profile).items():
        vals[k] += v
    R = profile.r_max
    c = R * profile.a0[-1]
    vals["Pi2"] += 2.0 * math.pi * c * c / R
    if profile.model.e == 0.0:
        vals["Pi2"] = vals["I1"] = vals["I2"] = 0.0
    return FunctionalSet(**vals)


def _phi_tail_integrals(profile: RadialProfile) -> dict[str, float]:
    r_ref, phi_ref, kappa = profile.phi_tail()
    if phi_ref == 0.0 or not math.isfinite(kappa):
        return {}
    R = profile.r_max
    rr = R + _LAG_X / kappa
    phi = phi_ref * (r_ref / rr) * np.exp(-kappa * (rr - r_ref))
    dphi = -phi * (kappa + 1.0 / rr)
    a0 = R * profile.a0[-1] / rr
    da0 = -a0 / rr
    parts = _integrands(profile.model, phi, dphi, a0, da0)
    jac = 4.0 * math.pi * rr * rr * np.exp(_LAG_X) / kappa
    return {k: float(np.sum(_LAG_W * v * jac)) for k, v in parts.items() if k != "Pi2"}


def normalized(terms: Sequence[float]) -> float:
    total = float(np.sum(np.abs(terms)))
    if total == 0.0:
        return 0.0
    return abs(float(np.sum(terms))) / total


def ds2_terms(f: FunctionalSet, model: ModelConfig, alpha: float, beta: float) -> list[float]:
    """Terms of dS/dlam at lam = 1 for ``V = gamma |phi|^p`` (``gamma Vtilde2 = V2``)."""
    pot = model.potential
    if pot.family is not Family.POWER_LAW:
        raise DomainError("the power-law identity needs a PowerLaw potential")
    w = model.omega2 - model.m2
    return [
        -(2 * alpha - 1) * f.Pi1,
        (2 * beta - 1) * f.Pi2,
        (2 * alpha - 3) * w * f.V1,
        -(2 * alpha + beta - 3) * f.I1,
        (2 * alpha + 2 * beta - 3) * f.I2,
        -(pot.p * alpha - 3) * f.V2,
    ]


def ds4_terms(f: FunctionalSet, model: ModelConfig, alpha: float) -> list[float]:
    """General-potential identity with ``beta = 3 - 2 alpha`` (the I1 term drops out)."""
    w = model.omega2 - model.m2
    return [
        -(2 * alpha - 1) * f.Pi1,
        (5 - 4 * alpha) * f.Pi2,
        (2 * alpha - 3) * w * f.V1,
        (3 - 2 * alpha) * f.I2,
        -alpha * f.J,
        3.0 * f.V2,
    ]


def amplitude_terms(f: FunctionalSet, model: ModelConfig) -> list[float]:
    """Identity from ``phi -> lam^alpha phi``, ``A0 -> lam^(-2 alpha) A0`` without rescaling x."""
    w = model.omega2 - model.m2
    return [-2.0 * f.Pi1, -4.0 * f.Pi2, 2.0 * w * f.V1, -2.0 * f.I2, -f.J]


def action_terms(f: FunctionalSet, model: ModelConfig) -> list[float]:
    w = model.omega2 - model.m2
    return [-f.Pi1, f.Pi2, w * f.V1, -f.I1, f.I2, -f.V2]


def virial_residual_power(f: FunctionalSet, model: ModelConfig, s: ScalingParams) -> float:
    return normalized(ds2_terms(f, model, s.alpha, s.beta))


def virial_residual_general(f: FunctionalSet, model: ModelConfig, alpha: float) -> float:
    return normalized(ds4_terms(f, model, alpha))


def virial_residual_amplitude(f: FunctionalSet, model: ModelConfig) -> float:
    return normalized(amplitude_terms(f, model))


def action_value(profile: RadialProfile, decay_ratio: float = DECAY_RATIO) -> float:
    """Reduced action ``-Pi1 + Pi2 + (omega^2 - m^2) V1 - I1 + I2 - V2``."""
    f = compute_functionals(profile, decay_ratio)
    return float(np.sum(action_terms(f, profile.model)))


def power_law_action(f: FunctionalSet, model: ModelConfig, s: ScalingParams) -> float:
    """Closed-form ``S(lam)`` for a power-law potential from the lam = 1 functionals."""
    pot = model.potential
    if pot.family is not Family.POWER_LAW:
        raise DomainError("closed-form S(lambda) needs a PowerLaw potential")
    a, b, lam = s.alpha, s.beta, s.lam
    w = model.omega2 - model.m2
    return (
        -(lam ** (2 * a - 1)) * f.Pi1
        + lam ** (2 * b - 1) * f.Pi2
        + lam ** (2 * a - 3) * w * f.V1
        - lam ** (2 * a + b - 3) * f.I1
        + lam ** (2 * a + 2 * b - 3) * f.I2
        - lam ** (pot.p * a - 3) * f.V2
    )


# rescaled copies of a localized profile are localized too; for lam < 1 the
# grid edge samples phi(lam R) so the check is looser and the tail fit covers it
_RESCALED_DECAY = 1e-3


def scaling_curve(profile: RadialProfile, s_list: Iterable[ScalingParams]) -> list[tuple[float, float]]:
    """``S(lam)`` by rescaling the stored profile and re-integrating."""
    from .solver import rescale_profile

    out = []
    for s in s_list:
        if not s.lam > 0.0:
            raise DomainError("lambda must be > 0")
        if s.lam == 1.0:
            out.append((1.0, action_value(profile)))
        else:
            out.append((s.lam, action_value(rescale_profile(profile, s), _RESCALED_DECAY)))
    return out


def stationarity(profile: RadialProfile, alpha: float, beta: float, dlam: float = 0.01) -> dict[str, float]:
    """Central difference of ``S(lam)`` at 1 and the scale it is judged against."""
    f = compute_functionals(profile)
    s = ScalingParams(alpha, beta)
    (_, s_minus), (_, s_one), (_, s_plus) = scaling_curve(
        profile, [s.at(1.0 - dlam), s.at(1.0), s.at(1.0 + dlam)]
    )
    slope = (s_plus - s_minus) / (2.0 * dlam)
    scale = max(abs(s_one), float(np.sum(np.abs(action_terms(f, profile.model)))))
    return {"alpha": alpha, "beta": beta, "dS_dlambda": slope, "S": s_one, "scale": scale,
            "relative": abs(slope) / scale if scale else 0.0}


def charge(profile: RadialProfile) -> float:
    """Convenience charge ``int 2 (omega - e A0) phi^2 d^3x`` (no tail correction)."""
    m = profile.model
    dens = 2.0 * (m.omega - m.e * profile.a0) * profile.phi**2
    return float(simpson(dens * 4.0 * math.pi * profile.r**2, x=profile.r))


def identity_report(profile: RadialProfile) -> dict:
    """Residual table of every identity for one profile."""
    f = compute_functionals(profile)
    model = profile.model
    rows = []
    for a in GENERAL_ALPHAS:
        rows.append({"identity": "general", "alpha": a, "beta": 3 - 2 * a,
                     "residual": virial_residual_general(f, model, a)})
    rows.append({"identity": "amplitude", "alpha": None, "beta": None,
                 "residual": virial_residual_amplitude(f, model)})
    if model.potential.family is Family.POWER_LAW:
        for a, b in ((1.5, 0.0), (1.0, 1.0), (0.5, 0.5)):
            rows.append({"identity": "power", "alpha": a, "beta": b,
                         "residual": virial_residual_power(f, model, ScalingParams(a, b))})
    for a, b in STATIONARITY_PAIRS:
        st = stationarity(profile, a, b)
        rows.append({"identity": "stationarity", "alpha": a, "beta": b, "residual": st["relative"],
                     "dS_dlambda": st["dS_dlambda"], "S": st["S"]})
    return {"functionals": f.to_dict(), "action": float(np.sum(action_terms(f, model))), "rows": rows}
