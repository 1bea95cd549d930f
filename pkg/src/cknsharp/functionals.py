"""Weighted norms, the Rayleigh quotient, and the reduced variational energy.

For a radial profile g the three one-dimensional reductions are

    target:  ( S int |g|^r rho^{N-1-s}   drho )^{1/r}
    grad:    ( S int |g'|^p rho^{N-1-mu} drho )^{1/p}
    interp:  ( S int |g|^q rho^{N-1-th}  drho )^{1/q}

with S = N omega_N (or N kappa_N for a gauge ball).  The quotient is
target / (grad^a interp^{1-a}); it is exactly invariant under dilations and
amplitude changes when ``a`` satisfies the balance identity.

``energy`` works in the transformed picture (gradient weight removed): it
evaluates I(u) = (1/p) int |grad u|^p + (1/q) int |u|^q |x|^{-theta'} and the
closed-form optimal dilation lam0 = (nB/(mA))^{1/(m+n)} that kills the
scaling degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentIntegral, NonFiniteValue
from .params import CknParams, gn_weights, scaling_exponents
from .profiles import GridProfile, RadialProfile, hermite_eval
from .quadrature import IntegralResult, RadialIntegral, integrate_radial, sphere_area

DEFAULT_TOL = 1e-10

# Gauss-Legendre nodes for the per-knot-interval rule used on grid profiles
_GL_LO = np.polynomial.legendre.leggauss(8)
_GL_HI = np.polynomial.legendre.leggauss(16)


@dataclass
class QuotientReport:
    """The three weighted norms, their quotient, and error estimates.

    A term whose exponent vanishes (interp when a = 1, gradient when a = 0)
    is not evaluated and reported as None: it carries weight zero in the
    quotient and need not converge at the extremals.
    """

    target_norm: float
    grad_norm: float | None
    interp_norm: float | None
    quotient: float
    target_error: float
    grad_error: float | None
    interp_error: float | None
    quotient_error: float

    def as_dict(self) -> dict:
        return {
            "target_norm": self.target_norm,
            "grad_norm": self.grad_norm,
            "interp_norm": self.interp_norm,
            "quotient": self.quotient,
            "errors": {
                "target": self.target_error,
                "grad": self.grad_error,
                "interp": self.interp_error,
                "quotient": self.quotient_error,
            },
        }


@dataclass
class EnergyParts:
    """Gradient and interpolation halves of the energy with its scaling optimum."""

    A_part: float
    B_part: float
    I: float
    lambda0: float
    I_min: float
    m: float
    n: float

    def as_dict(self) -> dict:
        return {"A_part": self.A_part, "B_part": self.B_part, "I": self.I,
                "lambda0": self.lambda0, "I_min": self.I_min,
                "m": self.m, "n": self.n}


def _order_times(order: float | None, k: float) -> float | None:
    return None if order is None else order * k


def _power_tail_integral(amplitude: float, anchor: float, order: float,
                         power: float, origin_side: bool) -> float:
    """Exact ``int (amplitude (rho/anchor)^order)^1 rho^power drho`` over a tail.

    origin side: (0, anchor]; far side: [anchor, inf).  The caller passes the
    already-exponentiated amplitude and combined order.  Divergence raises.
    """
    if amplitude == 0.0:
        return 0.0
    expo = power + order + 1.0
    if origin_side:
        if expo <= 0.0:
            raise DivergentIntegral("grid extension diverges at the origin",
                                    endpoint="origin", exponent=expo - 1.0)
        return amplitude * anchor ** (power + 1.0) / expo
    if expo >= 0.0:
        raise DivergentIntegral("grid extension diverges at infinity",
                                endpoint="infinity", exponent=expo - 1.0)
    return -amplitude * anchor ** (power + 1.0) / expo


def _grid_integral(profile: GridProfile, k: float, power: float,
                   use_deriv: bool) -> IntegralResult:
    """``int |g or g'|^k rho^power drho`` for a grid profile, piecewise.

    Per knot interval the integrand is smooth (a cubic, or its derivative,
    against the log-space measure), so a fixed Gauss rule is essentially
    exact; the error estimate is the 8-vs-16 point difference.  The
    power-law extensions integrate in closed form.
    """
    tau = profile._tau
    a, b = tau[:-1], tau[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def piece_sum(rule):
        x, w = rule
        # (n_intervals, n_nodes) query points in log rho
        tq = mid[:, None] + half[:, None] * x[None, :]
        flat = tq.ravel()
        if use_deriv:
            # g'(rho) = H'(tau)/rho; measure rho^power drho = e^{(power+1)tau} dtau
            vals = hermite_eval(tau, profile.values, profile._slopes, flat,
                                der=1)
            integ = np.abs(vals) ** k * np.exp((power + 1.0 - k) * flat)
        else:
            vals = hermite_eval(tau, profile.values, profile._slopes, flat)
            integ = np.abs(vals) ** k * np.exp((power + 1.0) * flat)
        return float(np.sum(integ.reshape(tq.shape) * (w[None, :] * half[:, None])))

    coarse = piece_sum(_GL_LO)
    fine = piece_sum(_GL_HI)

    o0, o1 = profile.origin_order, profile.tail_order
    v0, v1 = profile.values[0], profile.values[-1]
    n0, n1 = profile.nodes[0], profile.nodes[-1]
    if use_deriv:
        amp0 = (v0 * abs(o0) / n0) ** k if o0 != 0.0 else 0.0
        amp1 = (v1 * abs(o1) / n1) ** k if o1 != 0.0 else 0.0
        ord0, ord1 = (o0 - 1.0) * k, (o1 - 1.0) * k
    else:
        amp0, amp1 = v0 ** k, v1 ** k
        ord0, ord1 = o0 * k, o1 * k
    head = _power_tail_integral(amp0, n0, ord0, power, origin_side=True)
    tail = _power_tail_integral(amp1, n1, ord1, power, origin_side=False)

    value = fine + head + tail
    err = abs(fine - coarse) + 4.0 * abs(value) * np.finfo(float).eps
    if not math.isfinite(value):
        raise DivergentIntegral("non-finite grid integral", power=power)
    return IntegralResult(value=value, error=err)


def value_integral(profile: RadialProfile, k: float, t: float, N: float,
                   tol: float = DEFAULT_TOL) -> IntegralResult:
    """``int_0^support |g|^k rho^{N-1-t} drho`` with error estimate."""
    if isinstance(profile, GridProfile):
        return _grid_integral(profile, k, N - 1.0 - t, use_deriv=False)
    job = RadialIntegral(
        integrand=lambda rho: np.abs(profile.eval(rho)) ** k,
        power=N - 1.0 - t,
        r_edge=profile.r_edge,
        tolerance=tol,
        origin_order=_order_times(profile.origin_order, k),
        tail_order=(None if profile.r_edge is not None
                    else _order_times(profile.tail_order, k)))
    return integrate_radial(job)


def gradient_integral(profile: RadialProfile, p: float, mu: float, N: float,
                      tol: float = DEFAULT_TOL) -> IntegralResult:
    """``int_0^support |g'|^p rho^{N-1-mu} drho`` with error estimate."""
    if isinstance(profile, GridProfile):
        return _grid_integral(profile, p, N - 1.0 - mu, use_deriv=True)
    job = RadialIntegral(
        integrand=lambda rho: np.abs(profile.deriv(rho)) ** p,
        power=N - 1.0 - mu,
        r_edge=profile.r_edge,
        tolerance=tol,
        origin_order=_order_times(profile.deriv_origin_order, p),
        tail_order=(None if profile.r_edge is not None
                    else _order_times(profile.deriv_tail_order, p)))
    return integrate_radial(job)


def weighted_norm(profile: RadialProfile, k: float, t: float, N: float,
                  tol: float = DEFAULT_TOL, sphere: float | None = None) -> float:
    """(S int |g|^k rho^{N-1-t} drho)^{1/k}; S defaults to N omega_N."""
    if k < 1:
        raise ValueError("norm exponent k must be >= 1")
    S = sphere_area(N) if sphere is None else sphere
    res = value_integral(profile, k, t, N, tol)
    out = (S * res.value) ** (1.0 / k)
    if not math.isfinite(out):
        raise NonFiniteValue("weighted norm is not finite", k=k, t=t)
    return out


def gradient_norm(profile: RadialProfile, p: float, mu: float, N: float,
                  tol: float = DEFAULT_TOL, sphere: float | None = None) -> float:
    """(S int |g'|^p rho^{N-1-mu} drho)^{1/p}; valid for radial functions."""
    S = sphere_area(N) if sphere is None else sphere
    res = gradient_integral(profile, p, mu, N, tol)
    out = (S * res.value) ** (1.0 / p)
    if not math.isfinite(out):
        raise NonFiniteValue("gradient norm is not finite", p=p, mu=mu)
    return out


def quotient_with_weights(params: CknParams, profile: RadialProfile,
                          weights: tuple[float, float, float],
                          tol: float = DEFAULT_TOL,
                          sphere: float | None = None) -> QuotientReport:
    """Quotient report for explicit weight powers (s', mu', theta').

    The exponents (r, p, q, a) always come from ``params``; the weight
    triple is free so the transformed (gradient-weight-free) functional and
    gauge variants share this code path.
    """
    N, p, q, r, a = params.N, params.p, params.q, params.r, params.a
    s_w, mu_w, th_w = weights
    S = sphere_area(N) if sphere is None else sphere

    tgt = value_integral(profile, r, s_w, N, tol)
    target_norm = (S * tgt.value) ** (1.0 / r)
    rel_t = tgt.error / tgt.value if tgt.value else 0.0

    grad_norm_v = grad_err = rel_g = None
    if a > 0.0:
        grd = gradient_integral(profile, p, mu_w, N, tol)
        grad_norm_v = (S * grd.value) ** (1.0 / p)
        rel_g = grd.error / grd.value if grd.value else 0.0
        grad_err = grad_norm_v * rel_g / p

    interp_norm = interp_err = rel_i = None
    if a < 1.0:
        itp = value_integral(profile, q, th_w, N, tol)
        interp_norm = (S * itp.value) ** (1.0 / q)
        rel_i = itp.error / itp.value if itp.value else 0.0
        interp_err = interp_norm * rel_i / q

    denom = ((grad_norm_v ** a if a > 0.0 else 1.0)
             * (interp_norm ** (1.0 - a) if a < 1.0 else 1.0))
    quotient = target_norm / denom
    if not math.isfinite(quotient) or quotient <= 0:
        raise NonFiniteValue("quotient is not finite and positive",
                             target=target_norm, grad=grad_norm_v,
                             interp=interp_norm)

    rel_q = (rel_t / r + (a / p * rel_g if rel_g is not None else 0.0)
             + ((1.0 - a) / q * rel_i if rel_i is not None else 0.0))
    return QuotientReport(
        target_norm=target_norm,
        grad_norm=grad_norm_v,
        interp_norm=interp_norm,
        quotient=quotient,
        target_error=target_norm * rel_t / r,
        grad_error=grad_err,
        interp_error=interp_err,
        quotient_error=quotient * rel_q)


def ckn_quotient(params: CknParams, profile: RadialProfile,
                 tol: float = DEFAULT_TOL,
                 sphere: float | None = None) -> QuotientReport:
    """The weighted quotient with the tuple's own weights (s, mu, theta)."""
    return quotient_with_weights(params, profile,
                                 (params.s, params.mu, params.theta),
                                 tol=tol, sphere=sphere)


def gn_quotient(params: CknParams, profile: RadialProfile,
                tol: float = DEFAULT_TOL,
                sphere: float | None = None) -> QuotientReport:
    """The quotient after the weight-removing substitution (gradient weight 0)."""
    return quotient_with_weights(params, profile, gn_weights(params),
                                 tol=tol, sphere=sphere)


def energy(profile: RadialProfile, params: CknParams,
           tol: float = DEFAULT_TOL) -> EnergyParts:
    """Reduced variational energy of a transformed-picture profile.

    A_part = (1/p) int |grad u|^p dx, B_part = (1/q) int |u|^q |x|^{-theta'} dx
    with theta' = N + theta*d - N*d.  Rescaling u_lam(x) = lam^{(Nd-sd)/r}
    u(lam x) turns I into lam^m A + lam^{-n} B; the closed minimum sits at
    lam0 = (nB/(mA))^{1/(m+n)} with value
    ((m+n)/m) (n/m)^{-n/(m+n)} A^{n/(m+n)} B^{m/(m+n)}.
    """
    if params.regime != "C1":
        raise NonFiniteValue("energy reduction requires regime C1",
                             regime=params.regime)
    N, p, q = params.N, params.p, params.q
    d, m, n, _ = scaling_exponents(params)
    if m <= 0 or n <= 0:
        raise NonFiniteValue("scaling exponents must be positive", m=m, n=n)
    theta_w = N + params.theta * d - N * d
    S = sphere_area(N)
    A_part = S * gradient_integral(profile, p, 0.0, N, tol).value / p
    B_part = S * value_integral(profile, q, theta_w, N, tol).value / q
    lam0 = (n * B_part / (m * A_part)) ** (1.0 / (m + n))
    I_min = ((m + n) / m * (n / m) ** (-n / (m + n))
             * A_part ** (n / (m + n)) * B_part ** (m / (m + n)))
    return EnergyParts(A_part=A_part, B_part=B_part, I=A_part + B_part,
                       lambda0=lam0, I_min=I_min, m=m, n=n)
