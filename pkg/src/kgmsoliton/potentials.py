"""Scalar self-interaction potentials and the pointwise no-go expressions.

Every built-in potential is even in ``phi`` and satisfies ``V(0) = 0`` and
``V'(0) = 0``.  Derivatives are hand-coded per family; all evaluators accept
scalars or numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy import optimize

__all__ = [
    "DomainError",
    "Family",
    "Potential",
    "ModelConfig",
    "ConditionId",
    "eval_V",
    "eval_dV",
    "eval_d2V",
    "condition_expr",
    "condition_terms",
    "coleman_indicator",
    "ColemanResult",
]


class DomainError(ValueError):
    """Invalid parameter or non-finite argument."""


class Family(str, enum.Enum):
    POWER_LAW = "PowerLaw"
    QUARTIC = "Quartic"
    LOGARITHMIC = "Logarithmic"
    POLYNOMIAL = "Polynomial"


# smallest |phi| fed to logarithms; keeps log potential derivatives finite
_TINY = 1e-300


@dataclass(frozen=True)
class Potential:
    """A potential ``V(phi)`` from one of the built-in families.

    PowerLaw     ``gamma * |phi|**p`` with ``p > 1``
    Quartic      ``mu2 * phi**2 - g**2 * phi**4`` with ``g >= 0``
    Logarithmic  ``mu2 * phi**2 - g * phi**2 * ln(phi**2)``
    Polynomial   ``sum(c_k * phi**k)`` over even ``k >= 2``
    """

    family: Family
    gamma: float = 0.0
    p: float = 2.0
    mu2: float = 0.0
    g: float = 0.0
    coeffs: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        for name in ("gamma", "p", "mu2", "g"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if fam is Family.POWER_LAW and self.p <= 1.0:
            raise DomainError(f"PowerLaw requires p > 1, got p={self.p}")
        if fam in (Family.QUARTIC, Family.LOGARITHMIC) and self.mu2 < 0.0:
            raise DomainError(f"mu2 must be >= 0, got {self.mu2}")
        if fam is Family.QUARTIC and self.g < 0.0:
            raise DomainError("Quartic coupling g is stored as g >= 0 (V uses g**2)")
        if fam is Family.POLYNOMIAL:
            merged: dict[int, float] = {}
            for power, coef in self.coeffs:
                if int(power) != power or int(power) < 2 or int(power) % 2:
                    raise DomainError(f"Polynomial powers must be even and >= 2, got {power}")
                coef = float(coef)
                if not math.isfinite(coef):
                    raise DomainError("Polynomial coefficients must be finite")
                merged[int(power)] = merged.get(int(power), 0.0) + coef
            object.__setattr__(self, "coeffs", tuple(sorted(merged.items())))
        elif self.coeffs:
            raise DomainError(f"coeffs only apply to the Polynomial family, not {fam.value}")

    # -- constructors ---------------------------------------------------------
    @classmethod
    def power_law(cls, gamma: float, p: float) -> "Potential":
        return cls(Family.POWER_LAW, gamma=gamma, p=p)

    @classmethod
    def quartic(cls, mu2: float, g: float) -> "Potential":
        return cls(Family.QUARTIC, mu2=mu2, g=g)

    @classmethod
    def logarithmic(cls, mu2: float, g: float) -> "Potential":
        return cls(Family.LOGARITHMIC, mu2=mu2, g=g)

    @classmethod
    def polynomial(cls, coeffs) -> "Potential":
        if isinstance(coeffs, Mapping):
            coeffs = coeffs.items()
        return cls(Family.POLYNOMIAL, coeffs=tuple((int(k), float(c)) for k, c in coeffs))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Potential":
        """Build from the JSON record ``{"family": ..., "gamma": ..., ...}``."""
        if "family" not in data:
            raise DomainError("potential record needs a 'family' key")
        try:
            fam = Family(data["family"])
        except ValueError:
            names = ", ".join(f.value for f in Family)
            raise DomainError(f"unknown family {data['family']!r}; expected one of {names}") from None
        allowed = {
            Family.POWER_LAW: {"gamma", "p"},
            Family.QUARTIC: {"mu2", "g"},
            Family.LOGARITHMIC: {"mu2", "g"},
            Family.POLYNOMIAL: {"coeffs"},
        }[fam]
        extra = set(data) - allowed - {"family"}
        if extra:
            raise DomainError(f"keys {sorted(extra)} do not apply to family {fam.value}")
        missing = allowed - set(data)
        if missing:
            raise DomainError(f"family {fam.value} needs keys {sorted(missing)}")
        kwargs = {k: data[k] for k in allowed}
        if fam is Family.POLYNOMIAL:
            return cls.polynomial([tuple(pair) for pair in kwargs["coeffs"]])
        for key, val in kwargs.items():
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise DomainError(f"potential.{key} must be a number, got {val!r}")
        return cls(fam, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        fam = self.family
        if fam is Family.POWER_LAW:
            return {"family": fam.value, "gamma": self.gamma, "p": self.p}
        if fam in (Family.QUARTIC, Family.LOGARITHMIC):
            return {"family": fam.value, "mu2": self.mu2, "g": self.g}
        return {"family": fam.value, "coeffs": [[k, c] for k, c in self.coeffs]}

    # -- evaluation -----------------------------------------------------------
    def V(self, phi):
        return eval_V(self, phi)

    def dV(self, phi):
        return eval_dV(self, phi)

    def d2V(self, phi):
        return eval_d2V(self, phi)

    def curvature_at_zero(self) -> float:
        """``V''(0)``, possibly infinite (PowerLaw with p < 2, Logarithmic)."""
        fam = self.family
        if fam is Family.POWER_LAW:
            if self.gamma == 0.0 or self.p > 2.0:
                return 0.0
            if self.p == 2.0:
                return 2.0 * self.gamma
            return math.copysign(math.inf, self.gamma)
        if fam is Family.QUARTIC:
            return 2.0 * self.mu2
        if fam is Family.LOGARITHMIC:
            if self.g == 0.0:
                return 2.0 * self.mu2
            # -g * phi^2 ln phi^2 dominates: V'' ~ -2g ln phi^2 -> +inf for g > 0
            return math.copysign(math.inf, self.g)
        return 2.0 * dict(self.coeffs).get(2, 0.0)


def _as_array(phi):
    arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("phi must be finite")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def eval_V(potential: Potential, phi):
    """Potential value; exactly 0 at ``phi = 0``."""
    x = _as_array(phi)
    fam = potential.family
    if fam is Family.POWER_LAW:
        out = potential.gamma * np.abs(x) ** potential.p
    elif fam is Family.QUARTIC:
        x2 = x * x
        out = potential.mu2 * x2 - potential.g**2 * x2 * x2
    elif fam is Family.LOGARITHMIC:
        x2 = x * x
        ax = np.maximum(np.abs(x), _TINY)
        out = np.where(x == 0.0, 0.0, potential.mu2 * x2 - potential.g * x2 * 2.0 * np.log(ax))
    else:
        x2 = x * x
        out = np.zeros_like(x)
        for k, c in potential.coeffs:
            out = out + c * x2 ** (k // 2)
    return _ret(out, phi)


def eval_dV(potential: Potential, phi):
    """``dV/dphi``; odd in ``phi`` and 0 at the origin.

    Evaluated on ``|phi|`` with the sign reattached, so oddness is exact.
    """
    x = _as_array(phi)
    ax = np.abs(x)
    fam = potential.family
    if fam is Family.POWER_LAW:
        p = potential.p
        out = potential.gamma * p * ax ** (p - 1.0)
    elif fam is Family.QUARTIC:
        out = 2.0 * potential.mu2 * ax - 4.0 * potential.g**2 * ax**3
    elif fam is Family.LOGARITHMIC:
        g = potential.g
        safe = np.maximum(ax, _TINY)
        out = np.where(ax == 0.0, 0.0, 2.0 * ax * (potential.mu2 - g - 2.0 * g * np.log(safe)))
    else:
        out = np.zeros_like(ax)
        for k, c in potential.coeffs:
            out = out + k * c * ax ** (k - 1)
    return _ret(np.sign(x) * out, phi)


def eval_d2V(potential: Potential, phi):
    """Second derivative, used only for Newton Jacobians.

    Where ``V''`` is singular at the origin (PowerLaw with p < 2, Logarithmic)
    the value at ``phi = 0`` is replaced by the value at the smallest
    representable magnitude, so the result is always finite.
    """
    x = _as_array(phi)
    fam = potential.family
    if fam is Family.POWER_LAW:
        p = potential.p
        ax = np.abs(x)
        if p < 2.0:
            ax = np.maximum(ax, 1e-150)
        out = potential.gamma * p * (p - 1.0) * ax ** (p - 2.0)
    elif fam is Family.QUARTIC:
        out = 2.0 * potential.mu2 - 12.0 * potential.g**2 * x**2
    elif fam is Family.LOGARITHMIC:
        ax = np.maximum(np.abs(x), _TINY)
        g = potential.g
        out = 2.0 * (potential.mu2 - 3.0 * g - 2.0 * g * np.log(ax))
    else:
        out = np.zeros_like(x)
        for k, c in potential.coeffs:
            out = out + k * (k - 1) * c * x ** (k - 2)
    return _ret(out, phi)


@dataclass(frozen=True)
class ModelConfig:
    """Frequency, mass, gauge coupling and potential of the reduced action.

    ``omega`` is normalized to be nonnegative: ``omega -> -omega`` together
    with ``A0 -> -A0`` leaves the reduced action unchanged.
    """

    omega: float
    m: float
    e: float
    potential: Potential

    def __post_init__(self) -> None:
        for name in ("omega", "m", "e"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.m < 0.0:
            raise DomainError(f"m must be >= 0, got {self.m}")
        if self.e < 0.0:
            raise DomainError(f"e must be >= 0, got {self.e}")
        object.__setattr__(self, "omega", abs(self.omega))

    @property
    def omega2(self) -> float:
        return self.omega**2

    @property
    def m2(self) -> float:
        return self.m**2

    @property
    def gauged(self) -> bool:
        return self.e != 0.0

    def decay_rate(self) -> float:
        """Linearized tail rate ``sqrt(m^2 - omega^2 + V''(0)/2)``.

        Returns ``nan`` for an oscillatory tail and ``inf`` for
        super-exponential decay.
        """
        k2 = self.m2 - self.omega2 + 0.5 * self.potential.curvature_at_zero()
        if math.isnan(k2) or k2 < 0.0:
            return math.nan
        return math.sqrt(k2)

    def field_scale(self) -> float:
        """Field value where the quadratic and nonlinear terms balance (1 if none)."""
        pot = self.potential
        k2 = abs(self.m2 - self.omega2)
        if pot.family is Family.QUARTIC and pot.g > 0.0:
            return math.sqrt(max(pot.mu2 + self.m2 - self.omega2, k2, 1e-12)) / pot.g
        if pot.family is Family.POWER_LAW and pot.gamma != 0.0 and pot.p != 2.0 and k2 > 0.0:
            return (k2 / abs(pot.gamma)) ** (1.0 / (pot.p - 2.0))
        return 1.0

    def replace(self, **changes) -> "ModelConfig":
        data = {"omega": self.omega, "m": self.m, "e": self.e, "potential": self.potential}
        data.update(changes)
        return ModelConfig(**data)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        if "omega" not in data:
            raise DomainError("model record needs 'omega'")
        if "potential" not in data:
            raise DomainError("model record needs 'potential'")
        extra = set(data) - {"omega", "m", "e", "potential"}
        if extra:
            raise DomainError(f"unknown model keys {sorted(extra)}")
        nums = {}
        for key, default in (("omega", None), ("m", 0.0), ("e", 0.0)):
            val = data.get(key, default)
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise DomainError(f"model.{key} must be a number, got {val!r}")
            nums[key] = float(val)
        return cls(potential=Potential.from_dict(data["potential"]), **nums)

    def to_dict(self) -> dict[str, Any]:
        return {"omega": self.omega, "m": self.m, "e": self.e, "potential": self.potential.to_dict()}


class ConditionId(str, enum.Enum):
    """Pointwise inequalities whose sign decides non-existence.

    KGM1  ``V'phi - 2V >= 0``
    KGM2  ``4(m^2 - omega^2) phi^2 - (V'phi - 6V) >= 0`` (needs omega != 0)
    KGM3  ``V - (omega^2 - m^2) phi^2 >= 0``
    AMP   ``V'phi - 2(omega^2 - m^2) phi^2 >= 0``
    QB2   ``4 omega^2 phi^2 + V'phi - 6V`` strictly one-signed (ungauged only)
    """

    KGM1 = "KGM1"
    KGM2 = "KGM2"
    KGM3 = "KGM3"
    AMP = "AMP"
    QB2 = "QB2"


def condition_terms(model: ModelConfig, condition, phi):
    """Return ``(expr, scale)`` where ``scale`` is the sum of absolute terms.

    ``QB2`` uses ``4(omega^2 - m^2) phi^2``, i.e. the mass absorbed into the
    potential; with ``m = 0`` this is the plain ungauged expression.
    """
    try:
        cond = ConditionId(condition)
    except ValueError:
        raise DomainError(f"unknown condition id {condition!r}") from None
    # every expression is even in phi; evaluate on |phi| so that holds exactly
    x = np.abs(_as_array(phi))
    pot = model.potential
    V = np.asarray(eval_V(pot, x))
    Vp = np.asarray(eval_dV(pot, x)) * x
    x2 = x * x
    w = model.omega2 - model.m2
    if cond is ConditionId.KGM1:
        expr, scale = Vp - 2.0 * V, np.abs(Vp) + 2.0 * np.abs(V)
    elif cond is ConditionId.KGM2:
        expr = -4.0 * w * x2 - (Vp - 6.0 * V)
        scale = 4.0 * abs(w) * x2 + np.abs(Vp) + 6.0 * np.abs(V)
    elif cond is ConditionId.KGM3:
        expr, scale = V - w * x2, np.abs(V) + abs(w) * x2
    elif cond is ConditionId.AMP:
        expr, scale = Vp - 2.0 * w * x2, np.abs(Vp) + 2.0 * abs(w) * x2
    else:
        expr = 4.0 * w * x2 + Vp - 6.0 * V
        scale = 4.0 * abs(w) * x2 + np.abs(Vp) + 6.0 * np.abs(V)
    return _ret(expr, phi), _ret(scale, phi)


def condition_expr(model: ModelConfig, condition, phi):
    """Left-hand side of a no-go inequality; exactly 0 at ``phi = 0``."""
    return condition_terms(model, condition, phi)[0]


@dataclass(frozen=True)
class ColemanResult:
    min_location: float
    min_value: float
    attained_interior: bool


def coleman_indicator(potential: Potential, phi_range, n: int = 256) -> ColemanResult:
    """Locate the minimum of ``V(phi)/phi^2`` on ``[phi_lo, phi_hi]``.

    A coarse log-spaced scan picks the best sample; if it is not an endpoint
    the minimum is refined by golden-section search between its neighbours.
    """
    lo, hi = (float(v) for v in phi_range)
    if not (0.0 < lo < hi) or not math.isfinite(hi):
        raise DomainError(f"phi_range must satisfy 0 < lo < hi, got {phi_range}")
    if n < 3:
        raise DomainError("coleman_indicator needs n >= 3")

    def ratio(x):
        return eval_V(potential, x) / (x * x)

    xs = np.geomspace(lo, hi, n)
    vals = ratio(xs)
    i = int(np.argmin(vals))
    if i == 0 or i == n - 1:
        return ColemanResult(float(xs[i]), float(vals[i]), False)
    res = optimize.minimize_scalar(
        ratio, bracket=(xs[i - 1], xs[i], xs[i + 1]), method="golden", tol=1e-10
    )
    x_min = float(res.x)
    if not (xs[i - 1] <= x_min <= xs[i + 1]) or res.fun > vals[i]:
        x_min, f_min = float(xs[i]), float(vals[i])
    else:
        f_min = float(res.fun)
    return ColemanResult(x_min, f_min, lo < x_min < hi)
