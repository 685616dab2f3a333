"""Insect/tree system: spectrum, threshold speed, sandwich and obstruction.

Traveling profiles (U, V, Theta) of

    U'' + c U' + f(U) - alpha(x) U              = 0
    V'' + c V' + kappa2 (U - V) Theta - (d + alpha(x)) V = 0
    c Theta' + kappa1 V (1 - Theta)             = 0

are analyzed through the linearization at (U, V, W, Theta) = (1, 0, 0, 0),
whose characteristic polynomial is

    p(lambda) = lambda^3 + c lambda^2 - d lambda - kappa1 kappa2 / c.

For c < 0, p(0) > 0 and p has two positive real roots iff p(lambda_min) <= 0
at the positive critical point lambda_min = (-c + sqrt(c^2 + 3 d)) / 3.
Equality defines the threshold speed c_sharp; for c_sharp < c < 0 the
spectrum is one negative root plus a complex pair with positive real part,
which rules out monotone entry into the healthy state (the orbit spirals).

`supersolution` / `subsolution` build the ordered barriers of the
comparison argument, `solve_vtheta` squeezes the exact (V, Theta) between
them by a lagged, damped monotone iteration, and `case2_demo` integrates
the linearized spiral backward to exhibit the sign violation that forbids
buffer-zone profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.linalg import solve_banded

from .errors import (ConstructionFailureError, InvalidParameterError,
                     NonconvergenceError, OrderingError, RegimeError)
from .model import Model2Params
from .profile import SpatialProfile

__all__ = [
    "Model2Spectrum", "TriplePath", "char_poly", "lambda_min", "p_at_lambda_min",
    "c_sharp", "spectrum", "check_drate", "supersolution", "subsolution",
    "solve_vtheta", "quasimonotone_check", "case2_demo", "QuasimonotoneReport",
    "Case2Report",
]


@dataclass
class Model2Spectrum:
    """Roots and eigenvectors of the healthy-state linearization."""

    c: float
    params: Model2Params
    lambda1: float
    a: float
    b: float
    lambda_min: float
    c_sharp: float
    classification: str       # lemma71_regime | repeated_real | three_real
    eigvec1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    roots: np.ndarray = field(default=None)


@dataclass
class TriplePath:
    """Sampled (U, V, Theta) path with V' and residual bookkeeping."""

    x_nodes: np.ndarray
    u_values: np.ndarray
    v_values: np.ndarray
    theta_values: np.ndarray
    w_values: np.ndarray
    kind: str                 # supersolution | subsolution | solution
    residuals: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,u,v,theta\n")
            for i, x in enumerate(self.x_nodes):
                fh.write(f"{x:.17g},{self.u_values[i]:.17g},"
                         f"{self.v_values[i]:.17g},{self.theta_values[i]:.17g}\n")


def char_poly(c: float, params: Model2Params) -> np.ndarray:
    """Coefficients (1, c, -d, -kappa1 kappa2 / c) of the linearization cubic."""
    if c == 0.0:
        raise ZeroDivisionError("characteristic polynomial undefined at c = 0")
    return np.array([1.0, c, -params.d, -params.kappa1 * params.kappa2 / c])


def lambda_min(c: float, params: Model2Params) -> float:
    """Positive critical point of the cubic: (-c + sqrt(c^2 + 3 d)) / 3."""
    return (-c + np.sqrt(c * c + 3.0 * params.d)) / 3.0


def p_at_lambda_min(c: float, params: Model2Params) -> float:
    """Value of the cubic at its positive critical point (<= 0 iff two
    positive real roots)."""
    k12 = params.kappa1 * params.kappa2
    d = params.d
    return (-k12 / c + c * d / 3.0 + (2.0 / 27.0) * c**3
            - (2.0 / 27.0) * (c * c + 3.0 * d) ** 1.5)


def c_sharp(params: Model2Params) -> float:
    """Threshold speed: the unique c < 0 where the critical value vanishes."""
    d, k12 = params.d, params.kappa1 * params.kappa2
    num = -2.0 * d**3 - 9.0 * k12 * d + 2.0 * (d * d + 3.0 * k12) ** 1.5
    den = d * d + 4.0 * k12
    cs = -np.sqrt(max(num, 0.0) / den)
    resid = p_at_lambda_min(cs, params)
    if abs(resid) > 1e-9 * max(1.0, abs(k12 / cs)):
        raise ConstructionFailureError(
            f"threshold formula inconsistent: p(lambda_min; c_sharp) = {resid:.3g}")
    return float(cs)


def _jacobian(c: float, params: Model2Params) -> np.ndarray:
    return np.array([
        [0.0, 1.0, 0.0],
        [params.d, -c, -params.kappa2],
        [-params.kappa1 / c, 0.0, 0.0],
    ])


def spectrum(c: float, params: Model2Params,
             pair_tol: float = 1e-6) -> Model2Spectrum:
    """Classified roots and eigenvectors of the healthy-state linearization.

    Roots come from the companion-matrix eigensolve with one Newton polish
    each; a conjugate pair with |Im| <= pair_tol is classified as the
    repeated-real boundary case.
    """
    if c == 0.0:
        raise ZeroDivisionError("linearization undefined at c = 0")
    if c > 0.0:
        raise InvalidParameterError(f"spectrum is analyzed for c < 0, got {c:g}")
    coeffs = char_poly(c, params)
    roots = np.roots(coeffs)
    dp = np.polyder(coeffs)
    for _ in range(2):
        pv = np.polyval(coeffs, roots)
        dv = np.polyval(dp, roots)
        roots = roots - np.where(np.abs(dv) > 0, pv / dv, 0.0)

    imag = np.abs(roots.imag)
    k1 = params.kappa1
    if np.max(imag) > pair_tol:
        i_real = int(np.argmin(imag))
        lam1 = float(roots[i_real].real)
        pair = np.delete(roots, i_real)
        a = float(pair[0].real)
        b = float(abs(pair[0].imag))
        classification = "lemma71_regime" if (lam1 < 0.0 < a and b > 0.0) \
            else "complex_other"
    else:
        rr = np.sort(roots.real)
        lam1 = float(rr[0])
        a = float(0.5 * (rr[1] + rr[2]))
        b = 0.0
        classification = "repeated_real" if abs(rr[2] - rr[1]) <= 1e-5 * max(
            1.0, abs(rr[2])) else "three_real"

    v1 = np.array([1.0, lam1, -k1 / (c * lam1)])
    s = a * a + b * b
    w2 = np.array([1.0, a, -k1 * a / (c * s)])
    w3 = np.array([0.0, b, k1 * b / (c * s)])
    return Model2Spectrum(c, params, lam1, a, b,
                          lambda_min(c, params), c_sharp(params),
                          classification, v1, w2, w3, roots=roots)


def check_drate(f, d: float, n: int = 2001, tol: float = 1e-12) -> None:
    """Verify f(u) >= -d u on [0,1] (sampled); required by the comparison
    structure of the insect/tree system."""
    u = np.linspace(0.0, 1.0, n)
    fv = np.asarray(f(u), dtype=float)
    bad = fv < -d * u - tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidParameterError(
            f"death-rate condition fails: f({u[i]:.4f})={fv[i]:.6g} < "
            f"{-d * u[i]:.6g}")


# ---------------------------------------------------------------------------
# comparison barriers
# ---------------------------------------------------------------------------


def _theta_bar(x: np.ndarray, u: np.ndarray, c: float, kappa1: float,
               decay_rate: float) -> np.ndarray:
    """1 - exp((kappa1/c) int_{-inf}^x U) with the left tail closed in
    exponential form."""
    tail = u[0] / decay_rate
    integral = tail + cumulative_trapezoid(u, x, initial=0.0)
    return 1.0 - np.exp((kappa1 / c) * integral)


def _left_decay_rate(profile: SpatialProfile) -> float:
    lam = profile.meta.get("lambda_left")
    if lam:
        return float(lam)
    x, u = profile.x_nodes, profile.u_values
    tail = u <= max(1e-6, u[0] * 10.0)
    if np.sum(tail) >= 3:
        return float(np.polyfit(x[tail], np.log(np.maximum(u[tail], 1e-300)), 1)[0])
    raise ConstructionFailureError("cannot estimate the left decay rate of U")


def supersolution(u_profile: SpatialProfile, params: Model2Params,
                  c: float) -> TriplePath:
    """Upper barrier (U, min{U, V*}, Theta_bar) for the last two equations.

    Residual signs are verified semi-analytically: the third equation gives
    kappa1 (1 - Theta_bar)(v+ - U) <= 0 by construction, and the second is
    -f(U) - d U where v+ = U (needs f sampled on the profile) and
    kappa2 (U - V*) Theta_bar - d V* where v+ = V*; the alpha term only
    makes both more negative.
    """
    if c >= 0.0:
        raise RegimeError(f"supersolution requires c < 0, got {c:g}")
    if u_profile.f_values is None:
        raise InvalidParameterError(
            "u_profile must carry f samples (build it with reconstruct_x)")
    x = u_profile.x_nodes
    u = u_profile.u_values
    vstar = params.v_star
    vplus = np.minimum(u, vstar)
    theta_bar = _theta_bar(x, u, c, params.kappa1, _left_decay_rate(u_profile))

    r3 = params.kappa1 * (1.0 - theta_bar) * (vplus - u)
    on_u = u <= vstar
    r2 = np.where(on_u,
                  -u_profile.f_values - params.d * u,
                  params.kappa2 * (u - vstar) * theta_bar - params.d * vstar)

    w = np.gradient(vplus, x)
    path = TriplePath(x, u, vplus, theta_bar, w, "supersolution",
                      residuals={"second": r2, "third": r3,
                                 "first": np.zeros_like(x)},
                      meta={"v_star": vstar, "kink_mask": np.abs(u - vstar) < 1e-3})
    tol = 1e-6
    ok = np.all(r2 <= tol) and np.all(r3 <= tol)
    if not ok:
        raise ConstructionFailureError(
            f"supersolution residual sign violated (max r2={np.max(r2):.3g}, "
            f"max r3={np.max(r3):.3g})")
    return path


def _ode8_rhs(c: float, params: Model2Params, u_of_x, alpha_of_x):
    k1, k2, d = params.kappa1, params.kappa2, params.d

    def rhs(x, y):
        V, W, Th = y
        U = float(u_of_x(x))
        al = float(alpha_of_x(x)) if alpha_of_x is not None else 0.0
        return [W,
                -c * W - k2 * (U - V) * Th + (al + d) * V,
                -(k1 / c) * V * (1.0 - Th)]
    return rhs


def _alpha_support_right_edge(profile: SpatialProfile) -> float:
    x, al = profile.x_nodes, profile.alpha_values
    pos = np.isfinite(al) & (al > 1e-12)
    if not np.any(pos):
        return float(x[0])
    return float(x[np.nonzero(pos)[0][-1]])


def _solve_linear_v(x: np.ndarray, c: float, coeff: np.ndarray,
                    source: np.ndarray, v_left: float, v_right: float) -> np.ndarray:
    """Tridiagonal solve of v'' + c v' - coeff(x) v = -source(x) with
    Dirichlet data on a uniform grid."""
    h = x[1] - x[0]
    n = len(x)
    lower = np.full(n - 1, 1.0 / h**2 - c / (2.0 * h))
    upper = np.full(n - 1, 1.0 / h**2 + c / (2.0 * h))
    diag = -2.0 / h**2 - coeff
    rhs = -source.copy()
    rhs[1] -= lower[0] * v_left
    rhs[-2] -= upper[-1] * v_right
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = upper[1:-1]
    ab[1, :] = diag[1:-1]
    ab[2, :-1] = lower[1:-1]
    inner = solve_banded((1, 1), ab, rhs[1:-1])
    v = np.empty(n)
    v[0], v[-1] = v_left, v_right
    v[1:-1] = inner
    return v


def subsolution(u_profile: SpatialProfile, alpha, params: Model2Params,
                c: float, eps: float = 1e-3, eps0: float = 1e-3,
                max_halvings: int = 10, grid_h: float = 0.01) -> TriplePath:
    """Lower barrier built from the spiral of the healthy-state linearization.

    A small-amplitude arc of the rotating solution is launched at x0 (where
    the control has died out and U >= 1 - eps0), cut at its first descending
    V-zero x1, and continued on [x1, inf) by the explicit exponential
    relaxation toward V* with the matching Theta integral.  The launch
    amplitude eps is halved (up to max_halvings) until the window
    conditions and the domain bounds 0 <= v <= min(U, V*), theta <= 1 hold.
    """
    cs = c_sharp(params)
    if not (cs < c < 0.0):
        raise RegimeError(f"subsolution requires c_sharp < c < 0 "
                          f"(c_sharp={cs:.6g}, c={c:g})")
    spec2 = spectrum(c, params)
    if spec2.classification != "lemma71_regime":
        raise RegimeError(f"spectral classification is {spec2.classification}, "
                          "need the complex-pair regime")
    a, b = spec2.a, spec2.b
    k1, k2, d = params.kappa1, params.kappa2, params.d

    x_ctrl = _alpha_support_right_edge(u_profile) if alpha is None else None
    if alpha is not None:
        xs = u_profile.x_nodes
        av = np.asarray([float(alpha(xx)) for xx in xs])
        pos = av > 1e-12
        x_ctrl = float(xs[np.nonzero(pos)[0][-1]]) if np.any(pos) else float(xs[0])
    xs = u_profile.x_nodes
    iu = np.nonzero(u_profile.u_values >= 1.0 - eps0)[0]
    if len(iu) == 0:
        raise ConstructionFailureError(
            f"profile never reaches U >= 1 - eps0 = {1.0 - eps0:g}")
    x_u = float(xs[iu[0]])
    x0 = max(x_ctrl, x_u) + 1.0

    # seed along the rotating particular solution: V=0, W=eps*b,
    # Theta = eps * kappa1 b / (c (a^2+b^2)) < 0
    theta_hat0 = k1 * b / (c * (a * a + b * b))
    u_of_x = u_profile.u_at
    rhs = _ode8_rhs(c, params, u_of_x, None)

    def ev_vzero(x, y):
        return y[0]
    ev_vzero.terminal = True
    ev_vzero.direction = -1

    # amplitude guards: a failed (too large) launch blows up nonlinearly,
    # so cut the arc as soon as it leaves the admissible box and retry
    u_floor = float(np.min(u_of_x(np.linspace(x0, x0 + 4.2 * np.pi / b, 64))))
    v_cap = 0.98 * min(params.v_star, u_floor)

    def ev_vcap(x, y):
        return y[0] - v_cap
    ev_vcap.terminal = True
    ev_vcap.direction = 1

    def ev_thcap(x, y):
        return y[2] - 0.98
    ev_thcap.terminal = True
    ev_thcap.direction = 1

    window = 4.0 * np.pi / b
    attempt = eps
    last_reason = ""
    for _ in range(max_halvings + 1):
        sol = solve_ivp(rhs, (x0, x0 + window * 1.05),
                        [0.0, attempt * b, attempt * theta_hat0],
                        method="DOP853", rtol=1e-11, atol=1e-13,
                        dense_output=True, events=[ev_vzero, ev_vcap, ev_thcap])
        if sol.status != 1 or len(sol.t_events[0]) == 0:
            last_reason = ("arc left the admissible box before its V-zero"
                           if sol.status == 1 else
                           "no descending V-zero inside the window")
            attempt *= 0.5
            continue
        x1 = float(sol.t_events[0][0])
        V1, W1, Th1 = sol.sol(x1)
        xs_arc = np.linspace(x0, x1, max(400, int((x1 - x0) / grid_h) + 1))
        Varc, Warc, Tharc = sol.sol(xs_arc)
        ok = (Th1 > 0.0 and W1 < 0.0 and x1 - x0 <= window
              and np.all(Varc >= -1e-12)
              and np.max(Varc) < 0.98 * min(params.v_star,
                                            float(np.min(u_of_x(xs_arc))))
              and np.max(Tharc) < 0.98)
        if ok:
            break
        last_reason = (f"window checks failed at eps={attempt:g} "
                       f"(Theta(x1)={Th1:.3g}, W(x1)={W1:.3g}, "
                       f"maxV={np.max(Varc):.3g}, maxTheta={np.max(Tharc):.3g})")
        attempt *= 0.5
    else:
        raise ConstructionFailureError(
            f"subsolution window not found after {max_halvings} halvings: "
            + last_reason)

    theta_tilde = float(Th1)
    v_dagger = k2 * (1.0 - eps0) * theta_tilde / (k2 * theta_tilde + d)
    lam0 = (-c - np.sqrt(c * c + 4.0 * (k2 * theta_tilde + d))) / 2.0

    # right piece grid: extend well past the relaxation scales
    span_r = max(40.0, 25.0 / min(abs(lam0), abs(spec2.lambda1), a))
    n_r = int(span_r / grid_h) + 1
    xr = np.linspace(x1, x1 + span_r, n_r)
    v_tilde = v_dagger * (1.0 - np.exp(lam0 * (xr - x1)))
    # theta^- from the explicit integral of theta' = -(k1/c) v_tilde (1-theta)
    int_vt = v_dagger * ((xr - x1) - (np.exp(lam0 * (xr - x1)) - 1.0) / lam0)
    theta_right = 1.0 - (1.0 - theta_tilde) * np.exp((k1 / c) * int_vt)

    u_right = np.asarray(u_of_x(xr), dtype=float)
    coeff = k2 * theta_right + d
    source = k2 * u_right * theta_right
    v_right = _solve_linear_v(xr, c, coeff, source, 0.0, params.v_star)
    if np.any(v_right < v_tilde - 1e-8):
        raise ConstructionFailureError(
            "comparison failure: v^- dropped below its exponential minorant")

    # assemble on (-inf, x1] U [x1, inf): zeros left of x0, arc, right piece
    n_l = 200
    xl = np.linspace(x0 - 30.0, x0, n_l, endpoint=False)
    x_all = np.concatenate((xl, xs_arc, xr[1:]))
    v_all = np.concatenate((np.zeros(n_l), np.maximum(Varc, 0.0), v_right[1:]))
    th_all = np.concatenate((np.zeros(n_l), np.maximum(Tharc, 0.0),
                             theta_right[1:]))
    u_all = np.asarray(u_of_x(x_all), dtype=float)
    w_all = np.gradient(v_all, x_all)

    # residual audit, piecewise semi-analytic (see module docstring)
    res = _subsolution_residuals(x_all, xs_arc, xr, sol, v_right, theta_right,
                                 v_tilde, u_right, params, c, n_l)
    path = TriplePath(x_all, u_all, v_all, th_all, w_all, "subsolution",
                      residuals=res,
                      meta={"x0": x0, "x1": x1, "eps": attempt, "eps0": eps0,
                            "v_dagger": v_dagger, "lambda0": lam0,
                            "theta_tilde": theta_tilde,
                            "dv_left": float(W1), "dv_right": float(
                                (v_right[1] - v_right[0]) / (xr[1] - xr[0])),
                            "alpha_support_edge": x_ctrl})
    return path


def _subsolution_residuals(x_all, xs_arc, xr, sol, v_right, theta_right,
                           v_tilde, u_right, params, c, n_l):
    """Operator signs for the lower barrier, evaluated piece by piece.

    Left piece (v, theta) = (0, 0): both operators vanish identically.
    Arc piece: exact ODE solution, residual at integrator tolerance.
    Right piece: the v-equation is solved with its own stencil (residual is
    the banded-solve defect) and the theta-equation residual is
    kappa1 (1 - theta)(v^- - v_tilde) >= 0 by the comparison bound.
    """
    k1, k2, d = params.kappa1, params.kappa2, params.d
    r2 = np.zeros_like(x_all)
    r3 = np.zeros_like(x_all)
    n_arc = len(xs_arc)
    # third equation on the arc where theta^- = max(Theta_eps, 0) != Theta_eps:
    # residual = kappa1 v (1 - 0) >= 0; where equal, residual = 0.
    Varc, _, Tharc = sol.sol(xs_arc)
    clipped = Tharc < 0.0
    r3[n_l:n_l + n_arc] = np.where(clipped, k1 * np.maximum(Varc, 0.0), 0.0)
    # right piece residuals
    h = xr[1] - xr[0]
    v = v_right
    lap = np.zeros_like(v)
    lap[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    grad = np.zeros_like(v)
    grad[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    r2_right = lap + c * grad + k2 * (u_right - v) * theta_right - d * v
    r2_right[0] = r2_right[-1] = 0.0
    r2[n_l + n_arc - 1:] = r2_right[:len(x_all) - (n_l + n_arc - 1)]
    r3_right = k1 * (1.0 - theta_right) * (v - v_tilde)
    r3[n_l + n_arc - 1:] = r3_right[:len(x_all) - (n_l + n_arc - 1)]
    return {"second": r2, "third": r3, "first": np.zeros_like(x_all)}


def solve_vtheta(u_profile: SpatialProfile, alpha, params: Model2Params,
                 c: float, domain_halfwidth: float | None = None,
                 h: float = 0.02, tol: float = 1e-6, max_iter: int = 400,
                 sub: TriplePath | None = None,
                 sup: TriplePath | None = None) -> TriplePath:
    """Exact (V, Theta) by damped monotone iteration from the subsolution.

    The Theta coupling is lagged: given Theta_k the V-equation is a linear
    two-point problem (banded solve); given V the Theta-equation is
    integrated exactly by its integrating factor.  Iterates are damped by
    0.5 and must stay inside the barrier sandwich; convergence is declared
    when the discrete defect of the V-equation falls below tol.
    """
    if sub is None:
        sub = subsolution(u_profile, alpha, params, c)
    if sup is None:
        sup = supersolution(u_profile, params, c)
    spec2 = spectrum(c, params)
    if domain_halfwidth is None:
        domain_halfwidth = max(20.0 / min(abs(spec2.lambda1), spec2.a),
                               abs(sub.meta["x1"]) + 20.0, 35.0)
    # snap the halfwidth to the mesh so the realized spacing is exactly h
    L = h * np.ceil(float(domain_halfwidth) / h)
    n = int(round(2.0 * L / h)) + 1
    x = np.linspace(-L, L, n)
    h = float(x[1] - x[0])
    k1, k2, d = params.kappa1, params.kappa2, params.d
    vstar = params.v_star

    u = np.asarray(u_profile.u_at(x), dtype=float)
    al = np.zeros_like(x) if alpha is None else \
        np.asarray([float(alpha(xx)) for xx in x])
    v_lo = np.interp(x, sub.x_nodes, sub.v_values, left=0.0, right=vstar)
    th_lo = np.interp(x, sub.x_nodes, sub.theta_values, left=0.0, right=1.0)
    v_hi = np.minimum(u, vstar)
    th_hi = np.interp(x, sup.x_nodes, sup.theta_values, left=0.0, right=1.0)

    ordered = np.all(v_lo <= v_hi + 1e-9) and np.all(th_lo <= th_hi + 1e-9)
    if not ordered:
        raise OrderingError("barriers are not ordered on the working grid")

    history: list[float] = []

    def theta_of(Vc: np.ndarray) -> np.ndarray:
        integral = np.clip(cumulative_trapezoid(Vc, x, initial=0.0), 0.0, None)
        return 1.0 - np.exp((k1 / c) * integral)

    def v_residual(Vc: np.ndarray, Thc: np.ndarray) -> np.ndarray:
        lap = (Vc[2:] - 2.0 * Vc[1:-1] + Vc[:-2]) / h**2
        grad = (Vc[2:] - Vc[:-2]) / (2.0 * h)
        return lap + c * grad + k2 * (u[1:-1] - Vc[1:-1]) * Thc[1:-1] \
            - (d + al[1:-1]) * Vc[1:-1]

    # Stage 1: lagged iteration from the subsolution, damped (0.5) first,
    # then undamped sweeps.  On its own this creeps: the (V, Theta) front
    # lives where U = 1 to ~1e-7, so a near-neutral translation mode
    # dominates; the undamped sweeps cover most of the travel and leave
    # the Newton corrector inside its quadratic basin.
    V, Th = v_lo.copy(), th_lo.copy()
    converged = False
    warmup = min(250, max_iter)
    for sweep in range(warmup):
        omega = 0.5 if sweep < 50 else 1.0
        V_new = _solve_linear_v(x, c, k2 * Th + d + al, k2 * u * Th, 0.0, vstar)
        V = (1.0 - omega) * V + omega * V_new
        Th = (1.0 - omega) * Th + omega * theta_of(V)
        defect = float(np.max(np.abs(v_residual(V, Th))))
        history.append(defect)
        if defect <= tol:
            Th = theta_of(V)
            if float(np.max(np.abs(v_residual(V, Th)))) <= tol:
                converged = True
                break

    # Stage 2: line-searched Newton on the reduced system (Theta
    # eliminated through its integrating factor).  The Jacobian carries
    # the dense lower-triangular sensitivity of Theta to upstream V, which
    # is what moves the front along the weakly pinned direction.
    newton_iters = 0
    if not converged:
        Th = theta_of(V)
        N = n - 2
        idx = np.arange(N)
        weights = np.tril(np.ones((N, N)), -1) * h + np.eye(N) * (h / 2.0)
        F = v_residual(V, Th)
        nrm = float(np.max(np.abs(F)))
        budget = max(0, max_iter - len(history))
        for _ in range(min(40, budget)):
            if nrm <= tol:
                converged = True
                break
            J = np.zeros((N, N))
            J[idx, idx] = -2.0 / h**2 - (k2 * Th[1:-1] + d + al[1:-1])
            J[idx[:-1], idx[:-1] + 1] = 1.0 / h**2 + c / (2.0 * h)
            J[idx[1:], idx[1:] - 1] = 1.0 / h**2 - c / (2.0 * h)
            fac = k2 * (u[1:-1] - V[1:-1]) * (1.0 - Th[1:-1]) * (-k1 / c)
            J += fac[:, None] * weights
            dv = np.linalg.solve(J, -F)
            step = 1.0
            improved = False
            for _ in range(40):
                V_try = V.copy()
                V_try[1:-1] += step * dv
                Th_try = theta_of(V_try)
                F_try = v_residual(V_try, Th_try)
                if float(np.max(np.abs(F_try))) < nrm:
                    V, Th, F = V_try, Th_try, F_try
                    nrm = float(np.max(np.abs(F)))
                    improved = True
                    break
                step *= 0.5
            newton_iters += 1
            history.append(nrm)
            if not improved:
                break
        if nrm <= tol:
            converged = True
    if not converged:
        raise NonconvergenceError(
            f"fixed point not reached (damped sweep + {newton_iters} Newton "
            f"steps, last defect {history[-1]:.3g})", history=history)

    slack = 1e-6
    if np.any(V < v_lo - slack) or np.any(V > v_hi + slack) \
            or np.any(Th < th_lo - slack) or np.any(Th > th_hi + slack):
        raise OrderingError("solution escaped the barrier sandwich")

    W = np.gradient(V, x)
    lapV = np.zeros_like(V)
    lapV[1:-1] = (V[2:] - 2.0 * V[1:-1] + V[:-2]) / h**2
    gradV = np.zeros_like(V)
    gradV[1:-1] = (V[2:] - V[:-2]) / (2.0 * h)
    r2 = lapV + c * gradV + k2 * (u - V) * Th - (d + al) * V
    r2[0] = r2[-1] = 0.0
    # Theta residual in the scheme's own (integrating-factor/trapezoid)
    # discretization: c D[ln(1-Theta)] = kappa1 V at cell midpoints,
    # multiplied back by (1-Theta); exact where Theta has saturated.
    one_m = 1.0 - Th
    r3 = np.zeros_like(Th)
    ok_cell = (one_m[:-1] > 1e-300) & (one_m[1:] > 1e-300)
    dlog = np.zeros(n - 1)
    dlog[ok_cell] = (np.log(one_m[1:][ok_cell])
                     - np.log(one_m[:-1][ok_cell])) / h
    mid_v = 0.5 * (V[:-1] + V[1:])
    mid_om = 0.5 * (one_m[:-1] + one_m[1:])
    r3[:-1] = np.where(ok_cell, mid_om * (k1 * mid_v - c * dlog), 0.0)
    r3_central = c * np.gradient(Th, x) + k1 * V * (1.0 - Th)

    path = TriplePath(x, u, V, Th, W, "solution",
                      residuals={"second": r2, "third": r3,
                                 "third_central": r3_central},
                      meta={"iterations": len(history), "defect": history[-1],
                            "newton_iterations": newton_iters,
                            "history": history, "halfwidth": L, "h": h,
                            "v_right_end": float(V[-1]),
                            "theta_right_end": float(Th[-1])})
    return path


@dataclass
class QuasimonotoneReport:
    violations: list[str]
    n_samples: int

    @property
    def passed(self) -> bool:
        return not self.violations


def quasimonotone_check(params: Model2Params, alpha_value: float = 0.0,
                        samples=None) -> QuasimonotoneReport:
    """Off-diagonal Jacobian signs of the reaction map on the invariant set.

    F = (f(u) - alpha u, kappa2 (u-v) theta - (alpha+d) v, kappa1 (1-theta) v);
    the off-diagonal partials are kappa2 theta, kappa2 (u-v), kappa1 (1-theta)
    and zeros, all nonnegative on {0 <= v <= u <= 1, 0 <= theta <= 1}.
    """
    if alpha_value < 0.0:
        raise InvalidParameterError("alpha_value must be nonnegative")
    if samples is None:
        g = np.linspace(0.0, 1.0, 6)
        samples = [(uu, vv, th) for uu in g for vv in g if vv <= uu for th in g]
    violations: list[str] = []
    for (uu, vv, th) in samples:
        if not (0.0 <= vv <= uu <= 1.0 and 0.0 <= th <= 1.0):
            raise InvalidParameterError(
                f"sample (u,v,theta)=({uu:g},{vv:g},{th:g}) outside the "
                "invariant domain")
        partials = {
            "dF1/dv": 0.0, "dF1/dtheta": 0.0,
            "dF2/du": params.kappa2 * th,
            "dF2/dtheta": params.kappa2 * (uu - vv),
            "dF3/du": 0.0,
            "dF3/dv": params.kappa1 * (1.0 - th),
        }
        for name, val in partials.items():
            if val < -1e-12:
                violations.append(f"{name} = {val:.3g} at ({uu:g},{vv:g},{th:g})")
    return QuasimonotoneReport(violations, len(samples))


@dataclass
class Case2Report:
    """Outcome of the backward spiral integration (buffer-zone obstruction)."""

    x_violation: float
    component: str
    winding: float
    rotation_rate: float
    b: float
    periods_to_violation: float
    within_three_periods: bool
    seed_amplitude: float


def case2_demo(params: Model2Params, c: float, seed_amplitude: float = 1e-3,
               seed_direction: np.ndarray | None = None) -> Case2Report:
    """Backward integration exhibiting the spiral sign obstruction.

    With U = 1 and alpha = 0, a small state near the rotating plane of the
    linearization is integrated backward in x.  The angular coordinate on
    that plane advances at rate ~ b, so V or Theta must change sign within
    a fraction of a rotation; the report records where, and the winding
    accumulated up to the violation.
    """
    spec2 = spectrum(c, params)
    if spec2.classification != "lemma71_regime":
        raise RegimeError(f"demonstration requires the complex-pair regime, "
                          f"got {spec2.classification}")
    a, b = spec2.a, spec2.b
    y0 = seed_amplitude * (spec2.w2 if seed_direction is None
                           else np.asarray(seed_direction, dtype=float))
    if y0[0] < 0.0 or y0[2] < 0.0:
        return Case2Report(0.0, "V" if y0[0] < 0 else "Theta", 0.0,
                           float("nan"), b, 0.0, True, seed_amplitude)

    rhs = _ode8_rhs(c, params, lambda x: 1.0, None)
    period = 2.0 * np.pi / b
    x_span = (0.0, -3.5 * period)

    def ev_v(x, y):
        return y[0]
    ev_v.terminal = True

    def ev_th(x, y):
        return y[2]
    ev_th.terminal = True

    sol = solve_ivp(rhs, x_span, y0, method="DOP853", rtol=1e-11, atol=1e-14,
                    dense_output=True, events=[ev_v, ev_th])
    hit_v = len(sol.t_events[0]) > 0
    hit_th = len(sol.t_events[1]) > 0
    if not (hit_v or hit_th):
        raise ConstructionFailureError(
            "no sign change of V or Theta within 3.5 rotation periods")
    x_v = sol.t_events[0][0] if hit_v else -np.inf
    x_t = sol.t_events[1][0] if hit_th else -np.inf
    x_violation = float(max(x_v, x_t))
    component = "V" if x_v >= x_t else "Theta"

    # winding of the (w2, w3)-plane coordinates up to the violation
    basis = np.column_stack([spec2.eigvec1, spec2.w2, spec2.w3])
    xs = np.linspace(0.0, x_violation, 400)
    ys = sol.sol(xs)
    coords = np.linalg.solve(basis, ys)
    ang = np.unwrap(np.arctan2(coords[2], coords[1]))
    winding = float(abs(ang[-1] - ang[0]) / (2.0 * np.pi))
    rate = float(abs(np.polyfit(xs, ang, 1)[0])) if len(xs) > 2 else float("nan")
    periods = abs(x_violation) / period
    return Case2Report(x_violation, component, winding, rate, b, periods,
                       periods <= 3.0, seed_amplitude)
