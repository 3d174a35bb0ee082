"""Non-existence certification for standing-wave solitons.

Two routes are provided.  :func:`classify_power_law` is the closed-form case
table for ``V = gamma |phi|^p``.  :func:`check_condition` and
:func:`classify_general` test the pointwise inequalities on a sampled field
range and return a three-valued verdict; ``NotExcluded`` never claims that a
soliton exists.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy import optimize

from .potentials import (
    ConditionId,
    DomainError,
    ModelConfig,
    condition_terms,
)

__all__ = [
    "Status",
    "NoGoVerdict",
    "GeneralClassification",
    "PreconditionError",
    "POWER_LAW_CASES",
    "classify_power_law",
    "check_condition",
    "classify_general",
    "applicable_conditions",
    "sample_grid",
    "default_phi_range",
    "DEFAULT_PHI_MAX",
    "DEFAULT_N",
    "DEFAULT_TOL",
]

DEFAULT_PHI_MAX = 1e3
DEFAULT_N = 512
DEFAULT_TOL = 1e-10

# with the range starting at zero the log grid reaches down to
# min(phi_max * 10^-_LOG_DECADES, _LOG_FLOOR * min(1, field scale))
_LOG_DECADES = 9
_LOG_FLOOR = 1e-6


class PreconditionError(DomainError):
    """A condition was requested outside the regime where it is valid."""


class Status(str, enum.Enum):
    EXCLUDED = "Excluded"
    NOT_EXCLUDED = "NotExcluded"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class NoGoVerdict:
    status: Status
    condition: str
    witness: Optional[float] = None
    margin: Optional[float] = None
    roots: tuple[float, ...] = ()

    @property
    def excluded(self) -> bool:
        return self.status is Status.EXCLUDED

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "condition": self.condition,
            "witness": self.witness,
            "margin": self.margin,
            "roots": list(self.roots),
        }


@dataclass(frozen=True)
class GeneralClassification:
    per_condition: tuple[NoGoVerdict, ...]
    aggregate: NoGoVerdict

    def to_dict(self) -> dict[str, Any]:
        return {
            "aggregate": self.aggregate.to_dict(),
            "per_condition": [v.to_dict() for v in self.per_condition],
        }


POWER_LAW_CASES = (
    "γ=0",
    "γ>0, p≥2",
    "γ>0, 1<p<2, m²≥ω²",
    "γ<0, 1<p≤2",
    "γ<0, p≥6, m²≥ω²>0",
)


def classify_power_law(gamma: float, p: float, m2: float, omega2: float) -> NoGoVerdict:
    """Closed-form exclusion table for ``V = gamma |phi|^p`` in the gauged system.

    The ``p = 6, m^2 = omega^2 > 0`` edge is included in the last case; there
    the Gauss law forces ``phi = 0`` once ``A0 = 0``.
    """
    if not p > 1.0:
        raise DomainError(f"PowerLaw requires p > 1, got p={p}")
    label = None
    if gamma == 0.0:
        label = POWER_LAW_CASES[0]
    elif gamma > 0.0:
        if p >= 2.0:
            label = POWER_LAW_CASES[1]
        elif m2 >= omega2:
            label = POWER_LAW_CASES[2]
    else:
        if p <= 2.0:
            label = POWER_LAW_CASES[3]
        elif p >= 6.0 and m2 >= omega2 > 0.0:
            label = POWER_LAW_CASES[4]
    if label is None:
        return NoGoVerdict(Status.NOT_EXCLUDED, "power_law_table")
    return NoGoVerdict(Status.EXCLUDED, label)


def default_phi_range(model: ModelConfig) -> tuple[float, float]:
    """``(0, DEFAULT_PHI_MAX * max(1, s))`` with ``s`` the model's field scale."""
    return (0.0, DEFAULT_PHI_MAX * max(1.0, model.field_scale()))


def sample_grid(phi_range: Sequence[float], n: int, scale: float = 1.0) -> np.ndarray:
    """Union of a linear and a logarithmic grid on the range, zero excluded."""
    lo, hi = (float(v) for v in phi_range)
    n_lin = n // 2
    lin = np.linspace(lo, hi, n_lin + 1)
    log_lo = lo if lo > 0.0 else min(hi * 10.0**-_LOG_DECADES, _LOG_FLOOR * min(1.0, scale))
    log = np.geomspace(log_lo, hi, n - n_lin)
    grid = np.unique(np.concatenate([lin, log]))
    return grid[grid > 0.0]


def _validate(model: ModelConfig, cond: ConditionId, phi_range, n: int, tol: float) -> None:
    if len(phi_range) != 2:
        raise DomainError("phi_range must be a pair (lo, hi)")
    lo, hi = (float(v) for v in phi_range)
    if not (0.0 <= lo < hi) or not math.isfinite(hi):
        raise DomainError(f"phi_range must satisfy 0 <= lo < hi, got {phi_range}")
    if n < 16:
        raise DomainError("n must be >= 16")
    if not tol > 0.0:
        raise DomainError("tol must be > 0")
    if cond is ConditionId.KGM2 and model.omega == 0.0:
        raise PreconditionError("KGM2 needs omega != 0")
    if cond is ConditionId.QB2 and (model.e != 0.0 or model.m != 0.0):
        raise PreconditionError("QB2 applies to the ungauged model with m = 0")


def check_condition(
    model: ModelConfig,
    condition,
    phi_range: Optional[Sequence[float]] = None,
    n: int = DEFAULT_N,
    tol: float = DEFAULT_TOL,
) -> NoGoVerdict:
    """Test one inequality on ``n`` sampled field values.

    Values are compared relative to the sum of absolute terms, so ``tol`` is
    scale free.  The non-strict conditions exclude when the relative value
    never drops below ``-tol``; ``QB2`` excludes only when every sample is
    beyond ``tol`` with a single sign.

    A verdict speaks only for field values inside ``phi_range``; the default
    range extends three decades past the model's field scale.
    """
    cond = ConditionId(condition)
    if phi_range is None:
        phi_range = default_phi_range(model)
    _validate(model, cond, phi_range, n, tol)
    return _check(model, cond, phi_range, n, tol)


def _check(model: ModelConfig, cond: ConditionId, phi_range, n: int, tol: float) -> NoGoVerdict:
    xs = sample_grid(phi_range, n, model.field_scale())
    with np.errstate(over="ignore", invalid="ignore"):
        expr, scale = condition_terms(model, cond, xs)
        rel = np.where(scale > 0.0, expr / np.where(scale > 0.0, scale, 1.0), 0.0)
    if not np.all(np.isfinite(rel)):
        bad = xs[~np.isfinite(rel)][0]
        return NoGoVerdict(Status.INCONCLUSIVE, cond.value, margin=math.nan, roots=(float(bad),))

    roots = _sign_changes(model, cond, xs, expr, rel, tol)
    if cond is ConditionId.QB2:
        pos, neg = rel > tol, rel < -tol
        if pos.all() or neg.all():
            return NoGoVerdict(Status.EXCLUDED, cond.value, margin=float(np.min(np.abs(rel))), roots=roots)
        if pos.any() and neg.any():
            minority = neg if pos.sum() >= neg.sum() else pos
            idx = np.flatnonzero(minority)
            k = idx[np.argmax(np.abs(rel[idx]))]
            return NoGoVerdict(
                Status.NOT_EXCLUDED, cond.value, witness=float(xs[k]),
                margin=float(rel[k]), roots=roots,
            )
        return NoGoVerdict(Status.INCONCLUSIVE, cond.value, margin=float(np.min(np.abs(rel))), roots=roots)

    k = int(np.argmin(rel))
    if rel[k] >= -tol:
        return NoGoVerdict(Status.EXCLUDED, cond.value, margin=float(rel[k]), roots=roots)
    return NoGoVerdict(Status.NOT_EXCLUDED, cond.value, witness=float(xs[k]), margin=float(rel[k]), roots=roots)


def _sign_changes(model, cond, xs, expr, rel, tol) -> tuple[float, ...]:
    """Bracket sign changes beyond the tolerance band and bisect each one."""
    sign = np.where(rel > tol, 1, np.where(rel < -tol, -1, 0))
    nz = np.flatnonzero(sign)
    roots = []

    def f(x):
        return condition_terms(model, cond, x)[0]

    for a, b in zip(nz[:-1], nz[1:]):
        if sign[a] != sign[b]:
            try:
                roots.append(float(optimize.brentq(f, xs[a], xs[b], xtol=1e-14, rtol=1e-14)))
            except ValueError:
                # band samples in between; report the midpoint of the bracket
                roots.append(float(0.5 * (xs[a] + xs[b])))
    return tuple(roots)


def applicable_conditions(model: ModelConfig) -> tuple[ConditionId, ...]:
    """Conditions valid for the model: KGM set when gauged, Q-ball set otherwise."""
    if model.gauged:
        conds = [ConditionId.KGM1]
        if model.omega != 0.0:
            conds.append(ConditionId.KGM2)
        conds += [ConditionId.KGM3, ConditionId.AMP]
        return tuple(conds)
    return (ConditionId.KGM1, ConditionId.QB2, ConditionId.KGM3, ConditionId.AMP)


def classify_general(
    model: ModelConfig,
    phi_range: Optional[Sequence[float]] = None,
    n: int = DEFAULT_N,
    tol: float = DEFAULT_TOL,
) -> GeneralClassification:
    """Run every applicable condition and aggregate.

    In the ungauged sector a nonzero ``m`` is absorbed into the potential, so
    ``QB2`` is evaluated with ``omega^2 - m^2`` in place of ``omega^2``.
    """
    if phi_range is None:
        phi_range = default_phi_range(model)
    conds = applicable_conditions(model)
    for cond in conds:
        if cond is ConditionId.QB2:
            _validate(model.replace(m=0.0), cond, phi_range, n, tol)
        else:
            _validate(model, cond, phi_range, n, tol)
    verdicts = tuple(_check(model, c, phi_range, n, tol) for c in conds)

    for v in verdicts:
        if v.excluded:
            return GeneralClassification(verdicts, v)
    inconclusive = [v for v in verdicts if v.status is Status.INCONCLUSIVE]
    if inconclusive:
        margin = min(abs(v.margin) if v.margin is not None else math.inf for v in inconclusive)
        agg = NoGoVerdict(Status.INCONCLUSIVE, "+".join(v.condition for v in inconclusive), margin=margin)
    else:
        first = verdicts[0]
        agg = NoGoVerdict(
            Status.NOT_EXCLUDED, "+".join(v.condition for v in verdicts),
            witness=first.witness, margin=first.margin,
        )
    return GeneralClassification(verdicts, agg)
