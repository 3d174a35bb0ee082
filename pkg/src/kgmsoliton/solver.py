"""Radial standing-wave profiles.

Equations of motion of the reduced action in the spherically symmetric
sector::

    phi'' + (2/r) phi' = (m^2 - (omega - e A0)^2) phi + V'(phi) / 2
    A0''  + (2/r) A0'  = -2 e phi^2 (omega - e A0)

with ``phi'(0) = A0'(0) = 0`` and both fields vanishing at infinity.

The ungauged equation is solved by overshoot/undershoot shooting on
``phi(0)``; the gauged system by damped Newton iteration on a uniform
finite-difference grid, continued in ``e`` from the ungauged profile.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from scipy import sparse
from scipy.integrate import DOP853, OdeSolution
from scipy.sparse.linalg import spsolve

from .potentials import DomainError, Family, ModelConfig, Potential, eval_d2V, eval_dV
from .profile import RadialProfile, ScalingParams, uniform_step

__all__ = [
    "SolverError",
    "NoSolution",
    "NoConvergence",
    "ContinuationBreakdown",
    "QBallOptions",
    "GaugedOptions",
    "eom_residual",
    "ode_residual",
    "solve_qball",
    "solve_gauged",
    "rescale_profile",
    "zero_profile",
    "field_scale",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Base class for solver failures; ``trace`` holds the diagnostics."""

    def __init__(self, message: str, trace: Optional[list] = None):
        super().__init__(message)
        self.trace = trace or []


class NoSolution(SolverError):
    """No localized profile in the bracket (or the shots all behave alike)."""


class NoConvergence(SolverError):
    """Newton iteration stalled."""


class ContinuationBreakdown(NoConvergence):
    """Continuation in the gauge coupling could not reach the target."""


@dataclass(frozen=True)
class QBallOptions:
    R_max: Optional[float] = None
    grid_size: int = 4096
    nodes: int = 0
    bracket: Optional[tuple[float, float]] = None
    tol: float = 1e-2
    ode_rtol: float = 1e-13
    # relative separation of the bracketing shots that marks the tail cut
    cut_separation: float = 1e-4


@dataclass(frozen=True)
class GaugedOptions:
    R_max: Optional[float] = None
    grid_size: int = 4096
    tol: float = 1e-10
    damping: float = 1.0
    max_newton: int = 40
    min_step: float = 1e-6
    initial_step: Optional[float] = None
    qball: QBallOptions = field(default_factory=QBallOptions)


# -- equations of motion --------------------------------------------------

def _forces(model: ModelConfig, phi: np.ndarray, a0: np.ndarray):
    w = model.omega - model.e * a0
    f_phi = (model.m2 - w * w) * phi + 0.5 * np.asarray(eval_dV(model.potential, phi))
    f_a0 = -2.0 * model.e * phi * phi * w
    return f_phi, f_a0


def _laplacian(f: np.ndarray, r: np.ndarray, h: float, robin: bool) -> np.ndarray:
    """Second-order radial Laplacian; ``3 f''(0)`` at the origin.

    The last point uses the Coulomb condition ``f' = -f/r`` when ``robin``,
    otherwise it is left at zero (Dirichlet row handled by the caller).
    """
    n = len(f)
    lap = np.zeros(n)
    lap[0] = 6.0 * (f[1] - f[0]) / h**2
    ri = r[1:-1]
    lap[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2 + (f[2:] - f[:-2]) / (ri * h)
    if robin:
        R = r[-1]
        lap[-1] = 2.0 * f[-2] / h**2 - f[-1] * (2.0 / h**2 + 2.0 / (R * h) + 2.0 / R**2)
    return lap


def _residuals(r, h, phi, a0, model):
    f_phi, f_a0 = _forces(model, phi, a0)
    lap_phi = _laplacian(phi, r, h, robin=False)
    lap_a0 = _laplacian(a0, r, h, robin=True)
    res_phi = lap_phi - f_phi
    res_phi[-1] = phi[-1]
    res_a0 = lap_a0 - f_a0
    scale_phi = np.abs(lap_phi) + np.abs(f_phi)
    scale_a0 = np.abs(lap_a0) + np.abs(f_a0)
    scale_phi[-1] = abs(phi[-1])
    return res_phi, res_a0, scale_phi, scale_a0


def eom_residual(profile: RadialProfile) -> dict[str, np.ndarray]:
    """Pointwise finite-difference residuals of both field equations.

    The scalar row at ``R_max`` is the Dirichlet value ``phi(R_max)``; the
    gauge row there is the Coulomb-condition stencil.
    """
    if len(profile.r) < 3:
        raise DomainError("grid too small")
    h = uniform_step(profile.r)
    res_phi, res_a0, _, _ = _residuals(profile.r, h, profile.phi, profile.a0, profile.model)
    return {"phi_residual": res_phi, "a0_residual": res_a0}


def ode_residual(profile: RadialProfile) -> float:
    """Max-norm of the residuals relative to the largest term magnitude."""
    h = uniform_step(profile.r)
    res_phi, res_a0, s_phi, s_a0 = _residuals(profile.r, h, profile.phi, profile.a0, profile.model)
    out = 0.0
    for res, sc in ((res_phi, s_phi), (res_a0, s_a0)):
        top = float(np.max(sc))
        if top > 0.0:
            out = max(out, float(np.max(np.abs(res))) / top)
    return out


def zero_profile(model: ModelConfig, R_max: float, grid_size: int) -> RadialProfile:
    r = np.linspace(0.0, R_max, grid_size)
    return RadialProfile(r, np.zeros_like(r), np.zeros_like(r), model, ode_residual=0.0, meta={"trivial": True})


def field_scale(model: ModelConfig) -> float:
    """Field value where the quadratic and nonlinear terms balance (1 if none)."""
    return model.field_scale()


# -- shooting -------------------------------------------------------------

def _scalar_force(model: ModelConfig):
    """Fast scalar ``(m^2 - omega^2) phi + V'(phi)/2`` for the ODE right-hand side."""
    pot: Potential = model.potential
    k2 = model.m2 - model.omega2
    fam = pot.family
    if fam is Family.POWER_LAW:
        c, q = 0.5 * pot.gamma * pot.p, pot.p - 1.0
        return lambda x: k2 * x + c * math.copysign(abs(x) ** q, x)
    if fam is Family.QUARTIC:
        a, b = pot.mu2, 2.0 * pot.g**2
        return lambda x: (k2 + a) * x - b * x**3
    if fam is Family.LOGARITHMIC:
        a, g = pot.mu2 - pot.g, pot.g
        return lambda x: (k2 + a - 2.0 * g * math.log(abs(x))) * x if x != 0.0 else 0.0
    coeffs = [(k, 0.5 * k * c) for k, c in pot.coeffs]
    return lambda x: k2 * x + sum(c * x ** (k - 1) for k, c in coeffs)


@dataclass
class _Shot:
    phi0: float
    outcome: str  # "over" | "under"
    nodes: int
    r_stop: float
    solution: OdeSolution

    def record(self) -> dict[str, Any]:
        return {"phi0": self.phi0, "outcome": self.outcome, "nodes": self.nodes, "r_stop": self.r_stop}


def _shoot(force, phi0: float, k: int, r_end: float, rtol: float) -> _Shot:
    """Integrate from the origin until the shot over- or undershoots.

    Overshoot: a (k+1)-th node.  Undershoot: ``|phi|`` turns back up without
    crossing zero, or the integration reaches ``r_end``.
    """

    def rhs(r, y):
        fx = force(y[0])
        if r == 0.0:
            return np.array([y[1], fx / 3.0])
        return np.array([y[1], fx - 2.0 * y[1] / r])

    atol = abs(phi0) * 1e-20 + 1e-300
    solver = DOP853(rhs, 0.0, np.array([phi0, 0.0]), r_end, rtol=rtol, atol=atol)
    ts, interps = [0.0], []
    nodes, falling = 0, True
    outcome = "under"
    prev = phi0
    limit = 1e3 * abs(phi0)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            log.debug("shot phi0=%r failed: %s", phi0, msg)
            outcome = "over" if nodes > 0 or not falling else "under"
            break
        ts.append(solver.t)
        interps.append(solver.dense_output())
        x, dx = solver.y
        if x == 0.0 or (x > 0.0) != (prev > 0.0):
            nodes += 1
            if nodes > k:
                outcome = "over"
                break
            falling = False
        elif falling and x * dx > 0.0:
            outcome = "under"
            break
        elif not falling and x * dx < 0.0:
            falling = True
        if abs(x) > limit:
            outcome = "over" if not falling else "under"
            break
        prev = x if x != 0.0 else prev
    sol = OdeSolution(ts, interps) if interps else None
    return _Shot(phi0, outcome, nodes, float(solver.t), sol)


def _default_r_end(model: ModelConfig, R_max: Optional[float]) -> float:
    kappa = model.decay_rate()
    if R_max is not None:
        return 4.0 * R_max
    if math.isfinite(kappa) and kappa > 0.0:
        return 200.0 / kappa
    return 1e3


def solve_qball(model: ModelConfig, opts: Optional[QBallOptions] = None) -> RadialProfile:
    """Ungauged profile with ``opts.nodes`` nodes by bisection on ``phi(0)``.

    Raises
    ------
    NoSolution
        The bracket does not separate undershooting from overshooting shots,
        the shots violate node-count monotonicity, or the resulting profile
        fails the localization checks.
    """
    opts = opts or QBallOptions()
    if model.e != 0.0:
        raise DomainError("solve_qball needs e = 0; use solve_gauged")
    if opts.nodes < 0 or opts.grid_size < 8:
        raise DomainError("nodes must be >= 0 and grid_size >= 8")
    kappa = model.decay_rate()
    if math.isnan(kappa):
        raise NoSolution(
            "linearized tail is oscillatory (m^2 - omega^2 + V''(0)/2 < 0): no finite-norm profile"
        )
    if kappa == 0.0 and opts.R_max is None:
        raise DomainError("marginal decay (kappa = 0): supply R_max explicitly")

    force = _scalar_force(model)
    s = field_scale(model)
    lo, hi = opts.bracket if opts.bracket is not None else (1e-3 * s, 1e3 * s)
    if not 0.0 < lo < hi:
        raise DomainError(f"bracket must satisfy 0 < lo < hi, got {(lo, hi)}")
    r_end = _default_r_end(model, opts.R_max)

    def shoot(x):
        shot = _shoot(force, x, opts.nodes, r_end, opts.ode_rtol)
        trace.append(shot.record())
        return shot

    trace: list[dict[str, Any]] = []
    s_lo, s_hi = shoot(lo), shoot(hi)
    if s_lo.outcome == "over" and s_hi.outcome == "under":
        raise NoSolution("node count decreases with phi(0) across the bracket", trace)
    if s_lo.outcome == s_hi.outcome:
        raise NoSolution(f"bracket exhausted: every shot {s_lo.outcome}shoots", trace)

    while True:
        mid = math.sqrt(lo * hi) if hi > 1.01 * lo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        shot = shoot(mid)
        if shot.outcome == "over":
            hi, s_hi = mid, shot
        else:
            lo, s_lo = mid, shot

    r_cut = _cut_radius(s_lo, s_hi, opts.nodes, opts.cut_separation)
    sol = s_lo.solution
    width = _half_width(sol, s_lo.phi0, r_cut)
    if opts.R_max is not None:
        R = float(opts.R_max)
    else:
        R = 30.0 * width
        if math.isfinite(kappa):
            R = max(R, 30.0 / kappa)
    r = np.linspace(0.0, R, opts.grid_size)
    phi = _assemble(sol, r, r_cut)
    profile = RadialProfile(
        r, phi, np.zeros_like(r), model,
        meta={"phi0": float(phi[0]), "r_cut": r_cut, "bisection_steps": len(trace), "nodes": opts.nodes},
    )
    profile.ode_residual = ode_residual(profile)
    _check_profile(profile, opts.nodes, opts.tol, trace)
    return profile


def _cut_radius(s_lo: _Shot, s_hi: _Shot, k: int, sep: float) -> float:
    """Radius where the bracketing shots separate; beyond it the tail model takes over."""
    r_stop = min(s_lo.r_stop, s_hi.r_stop)
    rr = np.linspace(0.0, r_stop, 4001)
    a = s_lo.solution(rr)[0]
    b = s_hi.solution(rr)[0]
    sign = np.sign(a)
    crossings = np.flatnonzero(sign[1:] * sign[:-1] < 0)
    start = crossings[k - 1] + 2 if k > 0 and len(crossings) >= k else 1
    bad = np.flatnonzero(np.abs(a[start:] - b[start:]) > sep * np.abs(a[start:]))
    i = start + bad[0] - 1 if len(bad) else len(rr) - 1
    return float(rr[max(i, start)])


def _half_width(sol: OdeSolution, phi0: float, r_cut: float) -> float:
    rr = np.linspace(0.0, r_cut, 2001)
    vals = np.abs(sol(rr)[0])
    below = np.flatnonzero(vals < 0.5 * abs(phi0))
    return float(rr[below[0]]) if len(below) else r_cut


def _assemble(sol: OdeSolution, r: np.ndarray, r_cut: float) -> np.ndarray:
    """Shot values up to ``r_cut``, then ``C exp(-kappa r)/r`` matched to the shot."""
    phi = np.empty_like(r)
    inner = r <= r_cut
    phi[inner] = sol(r[inner])[0]
    if np.any(~inner):
        w = max(0.05 * r_cut, 1e-3)
        rw = np.linspace(r_cut - w, r_cut, 41)
        vals = sol(rw)[0]
        if np.any(vals == 0.0) or np.any(np.sign(vals) != np.sign(vals[-1])):
            phi[~inner] = 0.0
        else:
            slope = np.polyfit(rw - r_cut, np.log(np.abs(vals) * rw), 1)[0]
            kappa = -slope
            ro = r[~inner]
            if kappa > 0.0:
                phi[~inner] = vals[-1] * (r_cut / ro) * np.exp(-kappa * (ro - r_cut))
            else:
                phi[~inner] = vals[-1]
    return phi


def _check_profile(profile: RadialProfile, nodes: int, tol: float, trace) -> None:
    if not np.all(np.isfinite(profile.phi)):
        raise NoSolution("profile contains non-finite values", trace)
    if not profile.decays():
        raise NoSolution(
            f"profile does not decay: |phi(R_max)| = {abs(profile.phi[-1]):.3e}, phi(0) = {profile.phi0:.6g}",
            trace,
        )
    if profile.node_count() != nodes:
        raise NoSolution(f"profile has {profile.node_count()} nodes, wanted {nodes}", trace)
    if profile.ode_residual > tol:
        raise NoSolution(f"ode residual {profile.ode_residual:.3e} exceeds tol {tol:.1e}", trace)


# -- gauged relaxation ------------------------------------------------------

def _lap_matrix(r: np.ndarray, h: float, robin: bool) -> sparse.csr_matrix:
    n = len(r)
    main = np.full(n, -2.0 / h**2)
    upper = np.empty(n - 1)
    lower = np.empty(n - 1)
    ri = r[1:-1]
    upper[1:] = 1.0 / h**2 + 1.0 / (ri * h)
    lower[:-1] = 1.0 / h**2 - 1.0 / (ri * h)
    main[0] = -6.0 / h**2
    upper[0] = 6.0 / h**2
    R = r[-1]
    if robin:
        lower[-1] = 2.0 / h**2
        main[-1] = -(2.0 / h**2 + 2.0 / (R * h) + 2.0 / R**2)
    else:
        lower[-1] = 0.0
        main[-1] = 1.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr")


class _Newton:
    """Damped Newton solver for the discretized coupled system at fixed model."""

    def __init__(self, r: np.ndarray, opts: GaugedOptions):
        self.r = r
        self.h = uniform_step(r)
        self.n = len(r)
        self.opts = opts
        self.L_phi = _lap_matrix(r, self.h, robin=False)
        self.L_a0 = _lap_matrix(r, self.h, robin=True)

    def residual(self, model, phi, a0):
        res_phi, res_a0, s_phi, s_a0 = _residuals(self.r, self.h, phi, a0, model)
        return np.concatenate([res_phi, res_a0]), _rel(res_phi, s_phi, res_a0, s_a0)

    def jacobian(self, model, phi, a0):
        e = model.e
        w = model.omega - e * a0
        d_phi = model.m2 - w * w + 0.5 * np.asarray(eval_d2V(model.potential, phi))
        d_phi[-1] = 0.0
        c_pa = -2.0 * e * w * phi
        c_pa[-1] = 0.0
        c_ap = 4.0 * e * w * phi
        d_a = 2.0 * e * e * phi * phi
        J11 = self.L_phi - sparse.diags(d_phi)
        J12 = sparse.diags(c_pa)
        J21 = sparse.diags(c_ap)
        J22 = self.L_a0 - sparse.diags(d_a)
        return sparse.bmat([[J11, J12], [J21, J22]], format="csc")

    def solve(self, model, phi, a0):
        n = self.n
        trace = []
        res, rel = self.residual(model, phi, a0)
        for it in range(self.opts.max_newton):
            trace.append({"iter": it, "rel_residual": rel, "e": model.e})
            if rel <= self.opts.tol:
                return phi, a0, rel, trace
            dx = spsolve(self.jacobian(model, phi, a0), -res)
            if not np.all(np.isfinite(dx)):
                break
            t = self.opts.damping
            norm0 = np.max(np.abs(res))
            while t > 1e-4:
                phi_t = phi + t * dx[:n]
                a0_t = a0 + t * dx[n:]
                res_t, rel_t = self.residual(model, phi_t, a0_t)
                if np.all(np.isfinite(res_t)) and np.max(np.abs(res_t)) < (1.0 - 1e-4 * t) * norm0:
                    break
                t *= 0.5
            else:
                break
            phi, a0, res, rel = phi_t, a0_t, res_t, rel_t
            if np.max(np.abs(t * dx)) <= 1e-15 * max(np.max(np.abs(phi)), np.max(np.abs(a0)), 1e-300):
                trace.append({"iter": it + 1, "rel_residual": rel, "e": model.e, "stalled": True})
                break
        if rel <= self.opts.tol:
            return phi, a0, rel, trace
        raise NoConvergence(f"Newton stalled at relative residual {rel:.3e} (e={model.e})", trace)


def _rel(res_phi, s_phi, res_a0, s_a0) -> float:
    out = 0.0
    for res, sc in ((res_phi, s_phi), (res_a0, s_a0)):
        top = float(np.max(sc))
        if top > 0.0:
            out = max(out, float(np.max(np.abs(res))) / top)
    return out


def solve_gauged(
    model: ModelConfig,
    opts: Optional[GaugedOptions] = None,
    seed: Optional[RadialProfile] = None,
) -> RadialProfile:
    """Gauged profile by continuation in ``e`` from an ungauged seed.

    Each continuation stage is a damped Newton solve of the discretized
    system with ``phi'(0) = A0'(0) = 0``, ``phi(R_max) = 0`` and the Coulomb
    condition ``A0' = -A0/r`` at ``R_max``.  The step in ``e`` doubles after
    a success and halves after a failure.

    Raises
    ------
    NoSolution
        No ungauged seed exists.
    NoConvergence, ContinuationBreakdown
        Newton stalls at the target coupling, or the step shrinks below
        ``opts.min_step``.
    """
    opts = opts or GaugedOptions()
    if seed is None:
        qopts = replace(opts.qball, R_max=opts.R_max, grid_size=opts.grid_size)
        seed = solve_qball(model.replace(e=0.0), qopts)
    r = seed.r
    newton = _Newton(r, opts)
    phi, a0 = seed.phi.copy(), seed.a0.copy()
    trace: list[dict[str, Any]] = []

    if not np.any(phi):
        phi, a0, rel, tr = newton.solve(model, phi, np.zeros_like(a0))
        return _finish(seed, model, phi, a0, rel, tr)

    target = model.e
    e_cur = seed.model.e
    phi, a0, rel, tr = newton.solve(model.replace(e=e_cur), phi, a0)
    trace += tr
    step = opts.initial_step or max(target - e_cur, 0.0) / 4.0 or target
    while e_cur < target:
        e_try = min(target, e_cur + step)
        try:
            phi_n, a0_n, rel, tr = newton.solve(model.replace(e=e_try), phi, a0)
            trace += tr
        except NoConvergence as exc:
            trace += exc.trace
            step *= 0.5
            if step < opts.min_step:
                raise ContinuationBreakdown(
                    f"continuation step fell below {opts.min_step:g} at e={e_cur:.6g}", trace
                ) from None
            continue
        phi, a0, e_cur = phi_n, a0_n, e_try
        step *= 2.0
    return _finish(seed, model, phi, a0, rel, trace)


def _finish(seed, model, phi, a0, rel, trace) -> RadialProfile:
    seed_scale = float(np.max(np.abs(seed.phi)))
    if seed_scale == 0.0 or np.max(np.abs(phi)) < 1e-10 * seed_scale:
        return zero_profile(model, seed.r_max, len(seed.r))
    prof = RadialProfile(seed.r.copy(), phi, a0, model, meta={"phi0": float(phi[0]), "newton_steps": len(trace)})
    prof.ode_residual = ode_residual(prof)
    if not prof.decays():
        raise NoSolution("gauged profile does not decay within R_max", trace)
    if model.e != 0.0:
        tail = prof.coulomb_tail()
        charge = _charge(prof)
        prof.meta["coulomb_tail"] = tail
        prof.meta["charge"] = charge
        prof.meta["gauss_law_constant"] = model.e * charge / (4.0 * math.pi)
    return prof


def _charge(profile: RadialProfile) -> float:
    from .virial import charge

    return charge(profile)


def rescale_profile(profile: RadialProfile, scaling: ScalingParams) -> RadialProfile:
    """``phi -> lam^alpha phi(lam r)``, ``A0 -> lam^beta A0(lam r)`` on the same grid."""
    lam = scaling.lam
    if not lam > 0.0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if lam == 1.0:
        return profile.with_fields(profile.phi.copy(), profile.a0.copy(), ode_residual=profile.ode_residual)
    rr = lam * profile.r
    phi = lam**scaling.alpha * profile.eval_phi(rr)
    a0 = lam**scaling.beta * profile.eval_a0(rr)
    return profile.with_fields(phi, a0, meta={"rescaled": scaling.to_dict()})
