"""Spatial profiles: chart inversion, tree infection, and tail decay.

A phase trajectory U -> P(U) is converted to a wave profile by quadrature
of dx = dU / P, anchored so that U(0) = u*.  Beyond the sampled range the
profile is extended by the saddle asymptotics U ~ e^{lambda_plus x} on the
left and 1 - U ~ e^{lambda_minus x} on the right.  The physical control is
recovered as alpha(x) = L(U(x), beta(U(x))).

For the insect/tree model the infected-tree fraction along a wave of speed
c < 0 has the closed form

    Theta(x) = 1 - exp( (kappa1 / c) * int_{-inf}^x U(y) dy ),

which tends to 0 / 1 at -inf / +inf exactly when c < 0 and the left tail
of U is integrable; for c >= 0 no profile exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (IntegrabilityError, InvalidTrajectoryError,
                     NonexistenceError)
from .model import ModelSpec
from .phaseplane import PhaseTrajectory, saddle_eigenvalues

__all__ = ["SpatialProfile", "reconstruct_x", "theta_model1", "decay_check",
           "DecayReport", "alpha_multiplicative"]

TAIL_FACTOR = 10.0


@dataclass
class SpatialProfile:
    """Wave profile sampled on an increasing x grid, anchored at U(0) = u*."""

    x_nodes: np.ndarray
    u_values: np.ndarray
    p_values: np.ndarray
    alpha_values: np.ndarray
    c: float
    theta_values: np.ndarray | None = None
    beta_values: np.ndarray | None = None
    f_values: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def interp_u(self):
        from scipy.interpolate import PchipInterpolator
        return PchipInterpolator(self.x_nodes, self.u_values, extrapolate=False)

    def u_at(self, x) -> np.ndarray:
        """U on arbitrary points, exponential tails beyond the grid."""
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x_nodes, self.u_values)
        lam_l = self.meta.get("lambda_left")
        lam_r = self.meta.get("lambda_right")
        left = x < self.x_nodes[0]
        right = x > self.x_nodes[-1]
        if lam_l is not None and np.any(left):
            out = np.where(left, self.u_values[0]
                           * np.exp(lam_l * (x - self.x_nodes[0])), out)
        if lam_r is not None and np.any(right):
            out = np.where(right, 1.0 - (1.0 - self.u_values[-1])
                           * np.exp(lam_r * (x - self.x_nodes[-1])), out)
        return out[()]

    def alpha_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.x_nodes, self.alpha_values,
                         left=0.0, right=0.0)[()]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,u,p,alpha,theta\n")
            theta = self.theta_values
            for i, x in enumerate(self.x_nodes):
                th = f"{theta[i]:.17g}" if theta is not None else ""
                fh.write(f"{x:.17g},{self.u_values[i]:.17g},"
                         f"{self.p_values[i]:.17g},"
                         f"{self.alpha_values[i]:.17g},{th}\n")


def reconstruct_x(traj: PhaseTrajectory, spec: ModelSpec,
                  p_clip: float = 1e-9) -> SpatialProfile:
    """Invert the chart: x(U) = int_{u*}^U dV / P(V), plus asymptotic tails.

    Interior nodes must have P > 0.  The control in physical space is
    alpha(x) = L(U(x), beta(U(x))); profiles of bang type may carry
    alpha = +inf where the control exceeds the cost barrier.
    """
    u = np.asarray(traj.u_nodes, dtype=float)
    p = np.asarray(traj.p_values, dtype=float)
    b = np.asarray(traj.beta_values, dtype=float) if traj.beta_values is not None \
        else np.zeros_like(u)
    interior = (u > 0.0) & (u < 1.0)
    if np.any(interior & (p <= 0.0)):
        i = int(np.argmax(interior & (p <= 0.0)))
        raise InvalidTrajectoryError(
            f"P({u[i]:.6f}) = {p[i]:.3g} is not positive on an interior node")

    keep = p > p_clip
    u, p, b = u[keep], p[keep], b[keep]
    us = spec.u_star
    if not (u[0] < us < u[-1]):
        raise InvalidTrajectoryError(
            f"trajectory [{u[0]:.4f}, {u[-1]:.4f}] does not straddle u*={us:.4f}")

    # insert an exact anchor node at u*
    if not np.any(np.isclose(u, us, rtol=0, atol=1e-14)):
        k = int(np.searchsorted(u, us))
        from scipy.interpolate import PchipInterpolator
        p_us = float(PchipInterpolator(u, p)(us))
        b_us = float(PchipInterpolator(u, b)(us))
        u = np.insert(u, k, us)
        p = np.insert(p, k, p_us)
        b = np.insert(b, k, b_us)
    k_anchor = int(np.argmin(np.abs(u - us)))

    x = cumulative_trapezoid(1.0 / p, u, initial=0.0)
    x -= x[k_anchor]

    lam_left = lam_right = None
    if u[0] < 1e-3:
        lam_left, _ = saddle_eigenvalues(spec, traj.c, 0.0)
        n_pad = 120
        pad = np.linspace(x[0] - TAIL_FACTOR / lam_left, x[0], n_pad,
                          endpoint=False)
        u_pad = u[0] * np.exp(lam_left * (pad - x[0]))
        p_pad = lam_left * u_pad
        x = np.concatenate((pad, x))
        u = np.concatenate((u_pad, u))
        p = np.concatenate((p_pad, p))
        b = np.concatenate((np.zeros(n_pad), b))
    if u[-1] > 1.0 - 1e-3:
        _, lam_right = saddle_eigenvalues(spec, traj.c, 1.0)
        n_pad = 120
        pad = np.linspace(x[-1], x[-1] - TAIL_FACTOR / lam_right, n_pad + 1)[1:]
        u_pad = 1.0 - (1.0 - u[-1]) * np.exp(lam_right * (pad - x[-1]))
        p_pad = -lam_right * (1.0 - u_pad)
        x = np.concatenate((x, pad))
        u = np.concatenate((u, u_pad))
        p = np.concatenate((p, p_pad))
        b = np.concatenate((b, np.zeros(n_pad)))

    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.asarray(spec.L(u, b), dtype=float)
    alpha = np.where(b == 0.0, 0.0, alpha)
    f_vals = np.asarray(spec.f(u), dtype=float)
    return SpatialProfile(x, u, p, alpha, traj.c, beta_values=b,
                          f_values=f_vals,
                          meta={"lambda_left": lam_left,
                                "lambda_right": lam_right,
                                "anchor_index": k_anchor + (120 if lam_left is not None else 0)})


def theta_model1(profile: SpatialProfile, kappa1: float, c: float,
                 end_tol: float = 1e-4) -> SpatialProfile:
    """Infected-tree fraction Theta along a leftward wave (c < 0).

    The left tail integral is closed in exact form from the exponential
    asymptotics; the grid is extended to the right until Theta is within
    end_tol of 1.  For c >= 0 the profile cannot exist.
    """
    if c >= 0.0:
        raise NonexistenceError(
            f"infected-tree profile requires c < 0 (invading front); got c={c:g}")
    rep = decay_check(profile, None)
    if not rep.integrable:
        raise IntegrabilityError(
            f"left tail of U not integrable (decay constant {rep.C:.3g})")

    x = profile.x_nodes.copy()
    u = profile.u_values.copy()
    p = profile.p_values.copy()
    alpha = profile.alpha_values.copy()
    b = profile.beta_values.copy() if profile.beta_values is not None else None
    fv = profile.f_values.copy() if profile.f_values is not None else None

    lam_l = profile.meta.get("lambda_left")
    if lam_l is None:
        lam_l = max(rep.lambda_fit, 1e-6)
    tail_integral = u[0] / lam_l

    ratio = kappa1 / c  # negative
    integral = tail_integral + cumulative_trapezoid(u, x, initial=0.0)
    theta = 1.0 - np.exp(ratio * integral)

    # extend rightward analytically (U ~ 1 there) until Theta reaches 1
    if theta[-1] < 1.0 - end_tol:
        if u[-1] < 0.99:
            raise IntegrabilityError(
                "profile does not reach the populated state; cannot extend "
                f"(U(right end) = {u[-1]:.4f})")
        need = (np.log(1.0 - theta[-1]) - np.log(end_tol / 10.0)) / (-ratio * u[-1])
        n_ext = 200
        ext = np.linspace(x[-1], x[-1] + need, n_ext + 1)[1:]
        lam_r = profile.meta.get("lambda_right")
        u_ext = 1.0 - (1.0 - u[-1]) * (np.exp(lam_r * (ext - x[-1]))
                                       if lam_r is not None else 0.0)
        th_ext = 1.0 - (1.0 - theta[-1]) * np.exp(
            ratio * cumulative_trapezoid(u_ext, ext, initial=0.0)
            + ratio * 0.5 * (u[-1] + u_ext[0]) * (ext[0] - x[-1]))
        x = np.concatenate((x, ext))
        u = np.concatenate((u, u_ext))
        p = np.concatenate((p, (-lam_r if lam_r else 0.0) * (1.0 - u_ext)))
        alpha = np.concatenate((alpha, np.zeros(n_ext)))
        theta = np.concatenate((theta, th_ext))
        if b is not None:
            b = np.concatenate((b, np.zeros(n_ext)))
        if fv is not None:
            fv = np.concatenate((fv, np.zeros(n_ext)))

    out = SpatialProfile(x, u, p, alpha, c, theta_values=theta,
                         beta_values=b, f_values=fv, meta=dict(profile.meta))
    out.meta["kappa1"] = kappa1
    out.meta["theta_left_end"] = float(theta[0])
    out.meta["theta_right_end"] = float(out.theta_values[-1])
    return out


def alpha_multiplicative(profile: SpatialProfile):
    """Controls enter the insect/tree system as -alpha u: convert the
    removal rate beta(x) of a scalar profile to that multiplicative alpha.

    Returns a scalar callable alpha(x) = beta(x) / U(x), zero outside the
    control support and where U is negligible.
    """
    if profile.beta_values is None:
        raise InvalidTrajectoryError("profile carries no removal-rate samples")
    x = profile.x_nodes
    vals = np.where(profile.u_values > 1e-12,
                    profile.beta_values / np.maximum(profile.u_values, 1e-12),
                    0.0)

    def alpha(xx: float) -> float:
        return float(np.interp(xx, x, vals, left=0.0, right=0.0))
    return alpha


@dataclass
class DecayReport:
    """Verified decay constant, tail-rate fit and integrability verdict.

    C is the sampled infimum of P/U on {U <= u*}: integrating U' >= C U
    gives the guaranteed envelope U(x) <= u* e^{-C (x*-x)}.  lambda_fit is
    the log-slope of the far tail and should match the saddle rate
    lambda_plus.
    """

    C: float
    lambda_fit: float
    lambda_plus: float | None
    envelope_ok: bool
    integral_to_zero: float
    integrable: bool
    violations: list[str] = field(default_factory=list)


def decay_check(profile: SpatialProfile, spec: ModelSpec | None,
                u_star: float | None = None) -> DecayReport:
    """Exponential-decay audit of the left tail of a profile.

    Uses the anchor U(x*) = u* (x* located on the grid).  A zero decay
    constant (e.g. a constant synthetic profile) is reported as a
    violation and the tail integral as divergent.
    """
    x = profile.x_nodes
    u = profile.u_values
    p = profile.p_values
    if u_star is None:
        u_star = spec.u_star if spec is not None else None
    if u_star is None or not np.isfinite(u_star):
        u_star = min(0.5, float(u[-1]) * 0.99)
    violations: list[str] = []

    k_star = int(np.argmin(np.abs(u - u_star)))
    x_star = float(x[k_star])
    mask = (x <= x_star) & (u > 0.0)
    if not np.any(mask):
        return DecayReport(0.0, 0.0, None, False, float("inf"), False,
                           ["no left-tail samples below u*"])

    ratios = p[mask] / u[mask]
    C = float(np.min(ratios))
    if C <= 1e-8:
        violations.append(f"decay constant not positive (min P/U = {C:.3g})")

    tail = mask & (u <= max(0.05 * u_star, float(u[mask][0]) * 2.0)) & (u > 0.0)
    if np.sum(tail) >= 3:
        slope = np.polyfit(x[tail], np.log(u[tail]), 1)[0]
        lambda_fit = float(slope)
    else:
        lambda_fit = C
    lam_plus = None
    if spec is not None:
        try:
            lam_plus = saddle_eigenvalues(spec, profile.c, 0.0)[0]
        except Exception:
            lam_plus = None

    envelope = u_star * np.exp(-C * (x_star - x[mask]))
    envelope_ok = bool(np.all(u[mask] <= envelope * (1.0 + 1e-8) + 1e-14))
    if not envelope_ok:
        violations.append("sampled envelope U <= u* exp(-C (x*-x)) fails")

    m0 = x <= 0.0
    integral = float(np.trapezoid(u[m0], x[m0])) if np.sum(m0) >= 2 else 0.0
    if C > 1e-8:
        integral += float(u[0]) / C
        integrable = True
    else:
        integral = float("inf")
        integrable = False
        violations.append("left tail integral divergent at the fitted rate")

    return DecayReport(C, lambda_fit, lam_plus, envelope_ok, integral,
                       integrable, violations)
