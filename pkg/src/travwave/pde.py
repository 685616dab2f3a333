"""Method-of-lines evolution of the parabolic systems for cross-validation.

Explicit finite differences with a second-order Laplacian and zero-flux
boundaries (reflected ghosts, which conserve mass exactly for pure
diffusion).  The comoving frame z = x - c t adds a transport term c u_z,
discretized by first-order upwinding; its numerical diffusion |c| dz / 2
is part of the drift tolerance budget of the stationarity checks.

A traveling profile evolved in its own comoving frame with the matching
control must stay put; evolved in the lab frame it must translate at its
design speed, measured by `front_speed` from the u = 1/2 level set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, DomainExceededError, FrontNotFoundError,
                     InstabilityError)
from .model import Model2Params, ModelSpec
from .model2 import check_drate
from .profile import SpatialProfile

__all__ = ["GridState", "EvolutionRecord", "FrontFit", "evolve_scalar",
           "front_speed", "evolve_model1", "evolve_model2"]

CFL_LIMIT = 0.4
BLOWUP_LO, BLOWUP_HI = -0.01, 1.01


@dataclass
class GridState:
    """Fields on a uniform grid at one instant."""

    x: np.ndarray
    u: np.ndarray
    t: float
    frame: str                  # 'lab' or 'comoving'
    c: float | None = None
    v: np.ndarray | None = None
    theta: np.ndarray | None = None


@dataclass
class EvolutionRecord:
    x: np.ndarray
    times: np.ndarray
    u_snapshots: list[np.ndarray]
    dx: float
    dt: float
    frame: str
    c: float | None
    v_snapshots: list[np.ndarray] | None = None
    theta_snapshots: list[np.ndarray] | None = None
    summary: dict = field(default_factory=dict)

    def drift_sup(self) -> float:
        u0 = self.u_snapshots[0]
        return max(float(np.max(np.abs(u - u0))) for u in self.u_snapshots)

    def state_at(self, k: int) -> GridState:
        return GridState(
            self.x, self.u_snapshots[k], float(self.times[k]), self.frame,
            self.c,
            self.v_snapshots[k] if self.v_snapshots is not None else None,
            self.theta_snapshots[k] if self.theta_snapshots is not None
            else None)

    def to_csv(self, path) -> None:
        cols = "t,x,u"
        if self.v_snapshots is not None:
            cols += ",v"
        if self.theta_snapshots is not None:
            cols += ",theta"
        with open(path, "w") as fh:
            fh.write(cols + "\n")
            for k, t in enumerate(self.times):
                for i, x in enumerate(self.x):
                    row = f"{t:.17g},{x:.17g},{self.u_snapshots[k][i]:.17g}"
                    if self.v_snapshots is not None:
                        row += f",{self.v_snapshots[k][i]:.17g}"
                    if self.theta_snapshots is not None:
                        row += f",{self.theta_snapshots[k][i]:.17g}"
                    fh.write(row + "\n")


def _laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    ue = np.concatenate(([u[1]], u, [u[-2]]))  # reflected ghosts, zero flux
    return (ue[:-2] - 2.0 * u + ue[2:]) / dx**2


def _upwind(u: np.ndarray, dx: float, c: float) -> np.ndarray:
    """First-order upwind discretization of u_z for the term c * u_z."""
    g = np.empty_like(u)
    if c < 0.0:
        g[1:] = (u[1:] - u[:-1]) / dx
        g[0] = 0.0
    else:
        g[:-1] = (u[1:] - u[:-1]) / dx
        g[-1] = 0.0
    return g


def _setup(x_span, dx, dt, c):
    n = int(round((x_span[1] - x_span[0]) / dx)) + 1
    x = np.linspace(x_span[0], x_span[1], n)
    dx = float(x[1] - x[0])
    dt_max = CFL_LIMIT * dx * dx
    if c is not None and c != 0.0:
        dt_max = min(dt_max, 0.5 * dx / abs(c))
    if dt is None:
        dt = dt_max
    elif dt > CFL_LIMIT * dx * dx + 1e-15:
        raise ConfigError(f"dt={dt:g} violates the CFL bound "
                          f"{CFL_LIMIT:g}*dx^2={CFL_LIMIT * dx * dx:g}")
    return x, dx, float(dt)


def _field_on_grid(initial, x) -> np.ndarray:
    if isinstance(initial, SpatialProfile):
        return np.clip(np.asarray(initial.u_at(x), dtype=float), 0.0, 1.0)
    if callable(initial):
        return np.clip(np.asarray([float(initial(xx)) for xx in x]), 0.0, 1.0)
    arr = np.asarray(initial, dtype=float)
    if arr.shape != x.shape:
        raise ConfigError(f"initial field shape {arr.shape} != grid {x.shape}")
    return np.clip(arr, 0.0, 1.0)


def _alpha_table(alpha_of_x, x_span, pad=80.0, n=20001):
    if alpha_of_x is None:
        return None
    zs = np.linspace(x_span[0] - pad, x_span[1] + pad, n)
    vals = np.asarray([float(alpha_of_x(z)) for z in zs])
    return zs, np.nan_to_num(vals, nan=0.0)


def _guard(u: np.ndarray, t: float) -> None:
    lo, hi = float(np.min(u)), float(np.max(u))
    if lo < BLOWUP_LO or hi > BLOWUP_HI:
        raise InstabilityError(f"field left [{BLOWUP_LO}, {BLOWUP_HI}] at "
                               f"t={t:.3f} (min={lo:.3g}, max={hi:.3g})")


def evolve_scalar(spec: ModelSpec, initial, alpha_of_x=None,
                  c_frame: float | None = None, T: float = 50.0,
                  x_span=(-60.0, 60.0), dx: float = 0.05,
                  dt: float | None = None, snapshot_dt: float = 1.0,
                  control_speed: float | None = None) -> EvolutionRecord:
    """Explicit evolution of u_t = u_xx + f(u) - beta(u, alpha).

    `c_frame` switches to the comoving frame (transport term + static
    control field); in the lab frame a moving control is produced by
    `control_speed`, translating alpha_of_x at that speed.
    """
    frame = "lab" if c_frame is None else "comoving"
    x, dx, dt = _setup(x_span, dx, dt, c_frame)
    u = _field_on_grid(initial, x)
    table = _alpha_table(alpha_of_x, x_span)
    n_steps = int(round(T / dt))
    snap_every = max(1, int(round(snapshot_dt / dt)))

    times = [0.0]
    snaps = [u.copy()]
    max_exc = 0.0
    has_beta = table is not None and spec.beta_from_alpha is not None
    if table is not None and spec.beta_from_alpha is None:
        raise ConfigError(f"{spec.label} has no control channel "
                          "(beta_from_alpha missing)")
    alpha_static = None
    if has_beta and (frame == "comoving" or control_speed in (None, 0.0)):
        alpha_static = np.interp(x, table[0], table[1])

    t = 0.0
    for k in range(1, n_steps + 1):
        rhs = _laplacian(u, dx) + np.asarray(spec.f(u), dtype=float)
        if has_beta:
            if alpha_static is not None:
                al = alpha_static
            else:
                al = np.interp(x - control_speed * t, table[0], table[1])
            rhs = rhs - np.asarray(spec.beta_from_alpha(u, al), dtype=float)
        if frame == "comoving":
            rhs = rhs + c_frame * _upwind(u, dx, c_frame)
        u = u + dt * rhs
        t = k * dt
        if k % 50 == 0:
            _guard(u, t)
        if k % snap_every == 0 or k == n_steps:
            _guard(u, t)
            max_exc = max(max_exc, float(np.max(u)) - 1.0, -float(np.min(u)))
            times.append(t)
            snaps.append(u.copy())

    rec = EvolutionRecord(x, np.asarray(times), snaps, dx, dt, frame, c_frame)
    rec.summary = {"max_drift": rec.drift_sup(), "max_excursion": max_exc,
                   "T": T, "n_steps": n_steps}
    return rec


@dataclass
class FrontFit:
    speed: float
    stderr: float
    times: np.ndarray
    positions: np.ndarray


def front_speed(record: EvolutionRecord, level: float = 0.5,
                discard_fraction: float = 0.2,
                boundary_margin: float = 10.0) -> FrontFit:
    """Least-squares speed of the u = level crossing across snapshots.

    The first `discard_fraction` of the record is treated as transient;
    a front closer than `boundary_margin` to either edge aborts the fit.
    """
    x = record.x
    positions = []
    for u in record.u_snapshots:
        above = u >= level
        if np.all(above) or not np.any(above):
            raise FrontNotFoundError(
                f"no u={level:g} crossing in a snapshot (field is "
                f"{'all above' if np.all(above) else 'all below'})")
        i = int(np.argmax(above))
        if i == 0:
            raise FrontNotFoundError("front touches the left boundary")
        x0, x1 = x[i - 1], x[i]
        u0, u1 = u[i - 1], u[i]
        positions.append(x0 + (level - u0) * (x1 - x0) / (u1 - u0))
    positions = np.asarray(positions)
    if np.any(positions < x[0] + boundary_margin) or \
            np.any(positions > x[-1] - boundary_margin):
        raise DomainExceededError(
            f"front within {boundary_margin:g} of the domain boundary")

    k0 = int(np.floor(discard_fraction * len(positions)))
    tt = record.times[k0:]
    pp = positions[k0:]
    A = np.column_stack([tt, np.ones_like(tt)])
    coef, res, *_ = np.linalg.lstsq(A, pp, rcond=None)
    n = len(tt)
    if n > 2 and len(res):
        sigma2 = float(res[0]) / (n - 2)
        stderr = float(np.sqrt(sigma2 / np.sum((tt - tt.mean()) ** 2)))
    else:
        stderr = float("nan")
    return FrontFit(float(coef[0]), stderr, tt, pp)


def evolve_model1(spec: ModelSpec, initial_u, initial_theta,
                  alpha_of_moving_frame=None, kappa1: float = 1.0,
                  T: float = 50.0, c_frame: float | None = None,
                  x_span=(-60.0, 60.0), dx: float = 0.05,
                  dt: float | None = None, snapshot_dt: float = 1.0,
                  control_speed: float | None = None) -> EvolutionRecord:
    """Scalar front plus pointwise tree infection theta_t = kappa1 u (1-theta).

    In the lab frame theta is advanced by its exact exponential update
    (monotone and bounded); the comoving frame adds upwinded transport.
    The running cost integral of control plus infected trees is
    accumulated per step into summary['cost_integral'].
    """
    frame = "lab" if c_frame is None else "comoving"
    x, dx, dt = _setup(x_span, dx, dt, c_frame)
    u = _field_on_grid(initial_u, x)
    th = _field_on_grid(initial_theta, x)
    table = _alpha_table(alpha_of_moving_frame, x_span)
    has_beta = table is not None and spec.beta_from_alpha is not None
    alpha_static = None
    if has_beta and (frame == "comoving" or control_speed in (None, 0.0)):
        alpha_static = np.interp(x, table[0], table[1])

    n_steps = int(round(T / dt))
    snap_every = max(1, int(round(snapshot_dt / dt)))
    times = [0.0]
    snaps = [u.copy()]
    th_snaps = [th.copy()]
    cost = 0.0
    theta_monotone = True

    t = 0.0
    for k in range(1, n_steps + 1):
        al = None
        if has_beta:
            al = alpha_static if alpha_static is not None else \
                np.interp(x - control_speed * t, table[0], table[1])
        rhs = _laplacian(u, dx) + np.asarray(spec.f(u), dtype=float)
        if al is not None:
            rhs = rhs - np.asarray(spec.beta_from_alpha(u, al), dtype=float)
        if frame == "comoving":
            rhs = rhs + c_frame * _upwind(u, dx, c_frame)
            th_new = th + dt * (c_frame * _upwind(th, dx, c_frame)
                                + kappa1 * u * (1.0 - th))
        else:
            th_new = 1.0 - (1.0 - th) * np.exp(-kappa1 * u * dt)
            if np.any(th_new < th - 1e-12):
                theta_monotone = False
        cost += dt * dx * float(np.sum((al if al is not None else 0.0) + th))
        u = u + dt * rhs
        th = np.clip(th_new, 0.0, 1.0)
        t = k * dt
        if k % 50 == 0:
            _guard(u, t)
        if k % snap_every == 0 or k == n_steps:
            _guard(u, t)
            times.append(t)
            snaps.append(u.copy())
            th_snaps.append(th.copy())

    rec = EvolutionRecord(x, np.asarray(times), snaps, dx, dt, frame, c_frame,
                          theta_snapshots=th_snaps)
    th_drift = max(float(np.max(np.abs(s - th_snaps[0]))) for s in th_snaps)
    rec.summary = {"max_drift": rec.drift_sup(), "theta_drift": th_drift,
                   "joint_drift": max(rec.drift_sup(), th_drift),
                   "cost_integral": cost, "theta_monotone_in_t": theta_monotone,
                   "T": T, "n_steps": n_steps}
    return rec


def evolve_model2(spec: ModelSpec, initial_u, initial_v, initial_theta,
                  alpha_of_x=None, params: Model2Params | None = None,
                  T: float = 50.0, c_frame: float | None = None,
                  x_span=(-60.0, 60.0), dx: float = 0.05,
                  dt: float | None = None, snapshot_dt: float = 1.0) -> EvolutionRecord:
    """Insect/tree system with multiplicative control (removal of insects).

    The invariant set {0 <= v <= u <= 1, theta in [0,1]} is monitored per
    snapshot; the worst violation is reported in summary['d_invariance'].
    """
    if params is None:
        params = Model2Params(1.0, 1.0, 1.0)
    check_drate(spec.f, params.d)
    x, dx, dt = _setup(x_span, dx, dt, c_frame)
    frame = "lab" if c_frame is None else "comoving"
    u = _field_on_grid(initial_u, x)
    v = _field_on_grid(initial_v, x)
    th = _field_on_grid(initial_theta, x)
    if np.any(v > u + 1e-9):
        raise ConfigError("initial data violates v <= u")
    table = _alpha_table(alpha_of_x, x_span)
    al = np.interp(x, table[0], table[1]) if table is not None else \
        np.zeros_like(x)
    k1, k2, d = params.kappa1, params.kappa2, params.d

    n_steps = int(round(T / dt))
    snap_every = max(1, int(round(snapshot_dt / dt)))
    times = [0.0]
    snaps, v_snaps, th_snaps = [u.copy()], [v.copy()], [th.copy()]
    d_inv = 0.0

    t = 0.0
    for k in range(1, n_steps + 1):
        rhs_u = _laplacian(u, dx) + np.asarray(spec.f(u), dtype=float) - al * u
        rhs_v = _laplacian(v, dx) + k2 * (u - v) * th - (al + d) * v
        rhs_th = k1 * v * (1.0 - th)
        if frame == "comoving":
            rhs_u = rhs_u + c_frame * _upwind(u, dx, c_frame)
            rhs_v = rhs_v + c_frame * _upwind(v, dx, c_frame)
            rhs_th = rhs_th + c_frame * _upwind(th, dx, c_frame)
        u = u + dt * rhs_u
        v = v + dt * rhs_v
        th = th + dt * rhs_th
        t = k * dt
        if k % 50 == 0:
            _guard(u, t)
            _guard(v, t)
        if k % snap_every == 0 or k == n_steps:
            _guard(u, t)
            _guard(v, t)
            _guard(th, t)
            d_inv = max(d_inv, float(np.max(v - u)),
                        -float(np.min(v)), -float(np.min(th)),
                        float(np.max(th)) - 1.0, float(np.max(u)) - 1.0,
                        -float(np.min(u)))
            times.append(t)
            snaps.append(u.copy())
            v_snaps.append(v.copy())
            th_snaps.append(th.copy())

    rec = EvolutionRecord(x, np.asarray(times), snaps, dx, dt, frame, c_frame,
                          v_snapshots=v_snaps, theta_snapshots=th_snaps)
    drift = rec.drift_sup()
    v_drift = max(float(np.max(np.abs(s - v_snaps[0]))) for s in v_snaps)
    th_drift = max(float(np.max(np.abs(s - th_snaps[0]))) for s in th_snaps)
    rec.summary = {"max_drift": drift, "v_drift": v_drift,
                   "theta_drift": th_drift,
                   "joint_drift": max(drift, v_drift, th_drift),
                   "d_invariance": d_inv, "T": T, "n_steps": n_steps}
    return rec
