"""Phase-plane integration for traveling-wave profiles.

A monotone front U(x) with speed c solves U'' + c U' + f(U) - beta = 0;
writing P = U' > 0 and using U as the independent variable gives the chart
equation

    dP/dU = -c + (beta(U) - f(U)) / P.

Both equilibria (0,0) and (1,0) are saddles of the underlying planar system
whenever f'(0), f'(1) < 0, with eigenvalues

    lambda_pm = ( -c +- sqrt(c^2 - 4 f'(u_eq)) ) / 2.

`unstable_manifold` follows the branch leaving (0,0) along the unstable
eigendirection (P_flat), `stable_manifold` the branch entering (1,0)
(P_sharp).  The 1/P singularity at the equilibria is handled by seeding a
small distance eps_seed along the eigenvector, where the linearization is
exact; trajectories are sampled densely from the integrator's dense output
so they feed quadrature and interpolation downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import InvalidParameterError, NotASaddleError, SingularityError
from .model import ModelSpec

__all__ = [
    "PhaseTrajectory",
    "saddle_eigenvalues",
    "unstable_manifold",
    "stable_manifold",
    "integrate_pu",
    "slope_bound",
]

EPS_SEED = 1e-8
P_FLOOR = 1e-11
RTOL = 1e-10
ATOL = 1e-12


@dataclass
class PhaseTrajectory:
    """Sampled curve U -> P(U) with optional control/adjoint samples.

    terminated_by is one of 'u_stop', 'p_zero', 'event'; for early
    termination `termination_u` records where the run ended.
    """

    u_nodes: np.ndarray
    p_values: np.ndarray
    c: float
    kind: str
    beta_values: np.ndarray | None = None
    y_values: np.ndarray | None = None
    terminated_by: str = "u_stop"
    termination_u: float | None = None
    seed_offset: float | None = None
    seed_slope: float | None = None
    meta: dict = field(default_factory=dict)

    def interp_p(self) -> PchipInterpolator:
        return PchipInterpolator(self.u_nodes, self.p_values, extrapolate=True)

    def interp_beta(self) -> PchipInterpolator:
        beta = self.beta_values if self.beta_values is not None \
            else np.zeros_like(self.u_nodes)
        return PchipInterpolator(self.u_nodes, beta, extrapolate=False)

    @property
    def u_span(self) -> tuple[float, float]:
        return float(self.u_nodes[0]), float(self.u_nodes[-1])

    def to_csv(self, path) -> None:
        beta = self.beta_values if self.beta_values is not None \
            else np.zeros_like(self.u_nodes)
        with open(path, "w") as fh:
            fh.write("u,p,beta\n")
            for u, p, b in zip(self.u_nodes, self.p_values, beta):
                fh.write(f"{u:.17g},{p:.17g},{b:.17g}\n")


def saddle_eigenvalues(spec: ModelSpec, c: float, u_eq: float) -> tuple[float, float]:
    """(lambda_plus, lambda_minus) of the planar linearization at (u_eq, 0)."""
    dfe = float(spec.df(u_eq))
    if not dfe < 0.0:
        raise NotASaddleError(
            f"(u,P)=({u_eq:g},0) is not a saddle: df({u_eq:g})={dfe:g} >= 0")
    disc = np.sqrt(c * c - 4.0 * dfe)
    return (-c + disc) / 2.0, (-c - disc) / 2.0


def _beta_or_zero(beta) -> Callable[[float], float]:
    if beta is None:
        return lambda u: 0.0
    if np.isscalar(beta):
        b = float(beta)
        return lambda u: b
    return lambda u: float(beta(u))


def _integrate_chart(spec: ModelSpec, c: float, beta, u0: float, p0: float,
                     u1: float, stop_when=None, direction: int = 0,
                     rtol: float = RTOL, atol: float = ATOL,
                     n_nodes: int | None = None):
    """Integrate dP/dU = -c + (beta - f)/P from (u0, p0) toward u1.

    Returns (u, p, terminated_by, u_end).  Terminal events: P reaching
    P_FLOOR ('p_zero') and an optional user event g(u, p) ('event').
    """
    bfun = _beta_or_zero(beta)
    p_floor = min(P_FLOOR, 0.25 * p0)

    def rhs(u, y):
        return [-c + (bfun(u) - float(spec.f(u))) / y[0]]

    def ev_floor(u, y):
        return y[0] - p_floor
    ev_floor.terminal = True
    ev_floor.direction = -1

    events = [ev_floor]
    if stop_when is not None:
        def ev_user(u, y):
            return stop_when(u, y[0])
        ev_user.terminal = True
        ev_user.direction = direction
        events.append(ev_user)

    sol = solve_ivp(rhs, (u0, u1), [p0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=events)

    u_end = float(sol.t[-1])
    terminated_by = "u_stop"
    if sol.status == -1:
        # Step underflow happens exactly where P collapses: either the
        # trajectory crashes into the U-axis or it enters a saddle corner.
        # Both are legitimate 'P reached zero' terminations; anything else
        # is a genuine failure.
        if float(sol.y[0, -1]) <= 1e-5:
            terminated_by = "p_zero"
        else:
            raise SingularityError(f"integrator failed near U={u_end:.8f}: "
                                   f"{sol.message}", location=u_end)
    elif sol.status == 1:
        if len(sol.t_events[0]):
            terminated_by = "p_zero"
        else:
            terminated_by = "event"

    span = abs(u_end - u0)
    if n_nodes is None:
        n_nodes = max(400, int(span * 1600)) + 1
    u = np.linspace(u0, u_end, n_nodes)
    if span > 0.0:
        # geometric clusters toward both ends: x(U) ~ ln U / lambda near an
        # equilibrium, so uniform-in-U sampling cannot resolve the tails
        offs = np.geomspace(span * 1e-9, span * 0.25, 160)
        u = np.concatenate((u, u0 + np.sign(u_end - u0) * offs,
                            u_end - np.sign(u_end - u0) * offs))
        lo, hi = min(u0, u_end), max(u0, u_end)
        u = np.clip(u, lo, hi)
        u = np.unique(u)
        if u_end < u0:
            u = u[::-1]
    p = sol.sol(u)[0]
    return u, p, terminated_by, u_end


def unstable_manifold(spec: ModelSpec, c: float, beta=None, u_stop: float = 1.0,
                      eps_seed: float = EPS_SEED, rtol: float = RTOL,
                      atol: float = ATOL) -> PhaseTrajectory:
    """Branch P_flat leaving (0,0) along the unstable eigendirection.

    Integrated until U = u_stop or P falls to the floor (early termination,
    flagged, not an error).  The node set starts with the exact corner
    (0,0) followed by the seed point, so the seeded slope can be audited.
    """
    if not (0.0 < u_stop <= 1.0):
        raise InvalidParameterError(f"u_stop must lie in (0, 1], got {u_stop}")
    lam_p, _ = saddle_eigenvalues(spec, c, 0.0)
    u0, p0 = eps_seed, lam_p * eps_seed
    u, p, terminated_by, u_end = _integrate_chart(
        spec, c, beta, u0, p0, u_stop, rtol=rtol, atol=atol)

    u = np.concatenate(([0.0], u))
    p = np.concatenate(([0.0], p))
    if terminated_by == "p_zero" and abs(u_end - 1.0) < 1e-5:
        u = np.concatenate((u, [1.0]))
        p = np.concatenate((p, [0.0]))
    bfun = _beta_or_zero(beta)
    return PhaseTrajectory(
        u, p, c, "unstable_manifold",
        beta_values=np.array([bfun(x) for x in u]),
        terminated_by=terminated_by,
        termination_u=None if terminated_by == "u_stop" else u_end,
        seed_offset=eps_seed, seed_slope=lam_p)


def stable_manifold(spec: ModelSpec, c: float, u_stop: float = 0.0,
                    eps_seed: float = EPS_SEED, rtol: float = RTOL,
                    atol: float = ATOL) -> PhaseTrajectory:
    """Branch P_sharp entering (1,0), integrated in decreasing U to u_stop."""
    if not (0.0 <= u_stop <= 1.0):
        raise InvalidParameterError(f"u_stop must lie in [0, 1], got {u_stop}")
    _, lam_m = saddle_eigenvalues(spec, c, 1.0)
    if u_stop == 1.0:
        return PhaseTrajectory(np.array([1.0]), np.array([0.0]), c,
                               "stable_manifold", beta_values=np.array([0.0]),
                               seed_offset=eps_seed, seed_slope=lam_m)
    u0, p0 = 1.0 - eps_seed, -lam_m * eps_seed
    u, p, terminated_by, u_end = _integrate_chart(
        spec, c, None, u0, p0, u_stop, rtol=rtol, atol=atol)

    u = np.concatenate((u[::-1], [1.0]))
    p = np.concatenate((p[::-1], [0.0]))
    if terminated_by == "p_zero" and abs(u_end - u_stop) < 1e-5:
        u = np.concatenate(([u_stop], u))
        p = np.concatenate(([0.0], p))
    return PhaseTrajectory(
        u, p, c, "stable_manifold", beta_values=np.zeros_like(u),
        terminated_by=terminated_by,
        termination_u=None if terminated_by == "u_stop" else u_end,
        seed_offset=eps_seed, seed_slope=lam_m)


def integrate_pu(spec: ModelSpec, c: float, beta, u_from: float, p_from: float,
                 u_to: float, stop_when=None, direction: int = 0,
                 rtol: float = RTOL, atol: float = ATOL) -> PhaseTrajectory:
    """General chart integration from (u_from, p_from) toward u_to.

    `stop_when(u, p)` is an optional terminal event function (sign change,
    located by the integrator's dense output); `direction` restricts the
    crossing direction as in scipy events.
    """
    if not p_from > 0.0:
        raise InvalidParameterError(f"p_from must be positive, got {p_from}")
    u, p, terminated_by, u_end = _integrate_chart(
        spec, c, beta, u_from, p_from, u_to, stop_when=stop_when,
        direction=direction, rtol=rtol, atol=atol)
    increasing = u_to >= u_from
    if not increasing:
        u, p = u[::-1], p[::-1]
    bfun = _beta_or_zero(beta)
    return PhaseTrajectory(
        u, p, c, "controlled",
        beta_values=np.array([bfun(x) for x in u]),
        terminated_by=terminated_by,
        termination_u=None if terminated_by == "u_stop" else u_end)


def slope_bound(spec: ModelSpec, c: float) -> float:
    """A-priori bound on max P over any admissible trajectory.

    With M = max f, integrating the slope inequality P' >= -cP - M over a
    unit x-interval gives P <= c/(1-e^-c) + M (1/(1-e^-c) - 1/c) for c != 0
    and P <= 1 + M/2 for c = 0.
    """
    M = spec.max_f()
    if abs(c) < 1e-12:
        return 1.0 + M / 2.0
    q = 1.0 - np.exp(-c)
    return c / q + M * (1.0 / q - 1.0 / c)
