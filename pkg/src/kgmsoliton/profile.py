"""Radial profile container, tail models and file round-trips."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .potentials import ModelConfig

__all__ = [
    "RadialProfile",
    "model_hash",
    "radial_gradient",
    "uniform_step",
    "DECAY_RATIO",
    "ScalingParams",
]

# |phi(R_max)| must fall below this fraction of |phi(0)|
DECAY_RATIO = 1e-6


@dataclass(frozen=True)
class ScalingParams:
    """Derrick-type scaling ``phi -> lam^alpha phi(lam x)``, ``A0 -> lam^beta A0(lam x)``."""

    alpha: float
    beta: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    def at(self, lam: float) -> "ScalingParams":
        return ScalingParams(self.alpha, self.beta, lam)

    def to_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "lambda": self.lam}


def model_hash(model: ModelConfig) -> str:
    text = json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def uniform_step(r: np.ndarray) -> float:
    h = (r[-1] - r[0]) / (len(r) - 1)
    if not np.allclose(np.diff(r), h, rtol=1e-9, atol=0.0):
        raise ValueError("radial grid must be uniform")
    return float(h)


def radial_gradient(f: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order central differences for an even function of ``r`` on ``r_i = i h``.

    The mirror image ``f(-r) = f(r)`` supplies the ghost values at the origin;
    the last three points fall back to the one-sided fourth-order stencil.
    """
    n = len(f)
    if n < 7:
        raise ValueError("need at least 7 grid points")
    ext = np.concatenate([f[3:0:-1], f])
    m = n - 3
    d = np.empty(n)
    d[:m] = (
        -ext[0:m] + 9.0 * ext[1 : m + 1] - 45.0 * ext[2 : m + 2]
        + 45.0 * ext[4 : m + 4] - 9.0 * ext[5 : m + 5] + ext[6 : m + 6]
    ) / (60.0 * h)
    for i in range(m, n):
        d[i] = (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / (12.0 * h)
    d[0] = 0.0
    return d


@dataclass(eq=False)
class RadialProfile:
    """Fields ``phi(r)`` and ``A0(r)`` on a uniform grid starting at ``r = 0``.

    Beyond ``R_max`` the scalar field is continued by an exponential tail
    ``C exp(-kappa r) / r`` fitted to the last decade of the data and the
    gauge field by the Coulomb tail ``c / r``.
    """

    r: np.ndarray
    phi: np.ndarray
    a0: np.ndarray
    model: ModelConfig
    ode_residual: float = math.nan
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.a0 = np.asarray(self.a0, dtype=float)
        if not (self.r.shape == self.phi.shape == self.a0.shape) or self.r.ndim != 1:
            raise ValueError("r, phi, a0 must be 1-D arrays of equal length")
        if len(self.r) < 3:
            raise ValueError("profile needs at least 3 grid points")
        if self.r[0] != 0.0 or np.any(np.diff(self.r) <= 0.0):
            raise ValueError("grid must start at r = 0 and increase strictly")

    # -- basic properties ----------------------------------------------------
    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def h(self) -> float:
        return uniform_step(self.r)

    @property
    def phi0(self) -> float:
        return float(self.phi[0])

    def is_zero(self) -> bool:
        return not np.any(self.phi) and not np.any(self.a0)

    def node_count(self) -> int:
        s = np.sign(self.phi[self.phi != 0.0])
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def decays(self, ratio: float = DECAY_RATIO) -> bool:
        """Scalar-field localization at ``R_max``; the zero profile qualifies."""
        scale = abs(self.phi[0]) or float(np.max(np.abs(self.phi)))
        if scale == 0.0:
            return True
        return abs(self.phi[-1]) < ratio * scale

    def coulomb_tail(self, frac: float = 0.1) -> dict[str, float]:
        """``r A0`` over the outer ``frac`` of the grid: mean and relative spread."""
        k = max(3, int(len(self.r) * frac))
        ra = self.r[-k:] * self.a0[-k:]
        c = float(np.mean(ra))
        spread = float((ra.max() - ra.min()) / abs(c)) if c != 0.0 else 0.0
        return {"coulomb_constant": float(self.r[-1] * self.a0[-1]), "mean_rA0": c, "rel_spread": spread}

    # -- tails ---------------------------------------------------------------
    def phi_tail(self) -> tuple[float, float, float]:
        """Fit ``ln|r phi| = ln C - kappa r`` on the last decade of nonzero data.

        Returns ``(r_ref, phi_ref, kappa)``.  ``kappa`` is ``inf`` when the
        field vanishes identically near ``R_max`` and ``nan`` when the data do
        not decay.
        """
        nz = np.flatnonzero(self.phi)
        if len(nz) == 0:
            return self.r_max, 0.0, math.inf
        last = nz[-1]
        if last < len(self.r) - 2 or last < 4:
            # field is exactly zero over the outer grid
            return float(self.r[last]), float(self.phi[last]), math.inf
        ref = abs(self.phi[last])
        i = last
        while i > 1 and abs(self.phi[i - 1]) <= 10.0 * ref and self.phi[i - 1] != 0.0:
            i -= 1
        i = min(i, last - 3)
        rs = self.r[i : last + 1]
        y = np.log(np.abs(self.phi[i : last + 1]) * rs)
        slope = np.polyfit(rs - rs[-1], y, 1)[0]
        kappa = -float(slope)
        if not kappa > 0.0:
            return float(self.r[last]), float(self.phi[last]), math.nan
        return float(self.r[last]), float(self.phi[last]), kappa

    def eval_phi(self, rr) -> np.ndarray:
        """Cubic-spline interpolation inside the grid, exponential tail outside."""
        rr = np.asarray(rr, dtype=float)
        out = np.empty_like(rr)
        inside = rr <= self.r_max
        spline = CubicSpline(self.r, self.phi, bc_type=((1, 0.0), "not-a-knot"))
        out[inside] = spline(rr[inside])
        if np.any(~inside):
            r_ref, phi_ref, kappa = self.phi_tail()
            ro = rr[~inside]
            if phi_ref == 0.0 or math.isinf(kappa):
                out[~inside] = 0.0
            elif math.isnan(kappa):
                raise ValueError("scalar field does not decay; cannot extrapolate beyond R_max")
            else:
                out[~inside] = phi_ref * (r_ref / ro) * np.exp(-kappa * (ro - r_ref))
        return out

    def eval_a0(self, rr) -> np.ndarray:
        """Cubic-spline interpolation inside the grid, Coulomb tail outside."""
        rr = np.asarray(rr, dtype=float)
        out = np.empty_like(rr)
        inside = rr <= self.r_max
        if not np.any(self.a0):
            return np.zeros_like(rr)
        spline = CubicSpline(self.r, self.a0, bc_type=((1, 0.0), "not-a-knot"))
        out[inside] = spline(rr[inside])
        out[~inside] = self.r_max * self.a0[-1] / rr[~inside]
        return out

    def with_fields(self, phi, a0, **kwargs) -> "RadialProfile":
        return RadialProfile(self.r.copy(), phi, a0, kwargs.pop("model", self.model), **kwargs)

    # -- serialization -------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("r,phi,a0\n")
        for row in zip(self.r, self.phi, self.a0):
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "model_hash": model_hash(self.model),
            "ode_residual": _num(self.ode_residual),
            "meta": self.meta,
            "r": [_num(v) for v in self.r],
            "phi": [_num(v) for v in self.phi],
            "a0": [_num(v) for v in self.a0],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_json_dict(), indent=1, default=_json_default)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "RadialProfile":
        text = _read(text_or_path)
        data = json.loads(text)
        model = ModelConfig.from_dict(data["model"])
        if "model_hash" in data and data["model_hash"] != model_hash(model):
            raise ValueError("model_hash does not match the embedded model")
        return cls(
            np.array(data["r"], dtype=float),
            np.array(data["phi"], dtype=float),
            np.array(data["a0"], dtype=float),
            model,
            ode_residual=_unnum(data.get("ode_residual")),
            meta=data.get("meta", {}),
        )

    @classmethod
    def from_csv(cls, text_or_path, model: ModelConfig, **kwargs) -> "RadialProfile":
        text = _read(text_or_path)
        rows = list(csv.DictReader(io.StringIO(text)))
        cols = {k: np.array([float(row[k]) for row in rows]) for k in ("r", "phi", "a0")}
        return cls(cols["r"], cols["phi"], cols["a0"], model, **kwargs)


def _read(text_or_path) -> str:
    if isinstance(text_or_path, Path):
        return text_or_path.read_text()
    s = str(text_or_path)
    if "\n" in s or s.lstrip().startswith("{"):
        return s
    return Path(s).read_text()


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _unnum(v):
    return math.nan if v is None else float(v)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
