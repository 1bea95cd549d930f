"""Radial profiles: analytic optimizer families and grid interpolants.

Every explicit optimizer in this problem family has the shape

    g(rho) = A (1 + B rho^beta)^{-gamma}          (decaying, full support)
    g(rho) = A (1 - B rho^beta)_+^{+gamma}        (compactly supported)

for some amplitude A, scale B > 0 and positive exponents, so a single
``AnalyticProfile`` class covers all of them and is closed under the radial
power substitution and under dilation.  Free profiles for the variational
search are ``GridProfile``: a shape-preserving (monotone) cubic interpolant
of the values against log(rho), extended by power laws beyond both end
nodes.  ``CallableProfile`` wraps ad-hoc differentiable radial functions
(Gaussians in the identity checks, bump-perturbed profiles in the
stationarity test).

All profiles expose eval/deriv (and second derivative where available) plus
power-order metadata at the origin and at infinity or the support edge; the
quadrature layer relies on the metadata for divergence checks and windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (BadGrid, BadScale, DivergentMoment, FamilyRegimeMismatch)
from .params import CknParams, transform_power

FAMILIES = ("T5", "T6", "A1", "T11", "HSE", "GN_DPD", "GN_DPD_compact")


# ---------------------------------------------------------------------------
# monotone piecewise-cubic kernel (Fritsch-Carlson), batched over value rows
# ---------------------------------------------------------------------------

def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Shape-preserving derivative estimates at the knots.

    x: (n,) strictly increasing.  y: (..., n).  Interior slopes are the
    weighted harmonic mean of adjacent secants (zero across sign changes),
    endpoints use the one-sided three-point formula with the usual clamps.
    """
    h = np.diff(x)
    m = np.diff(y, axis=-1) / h
    d = np.zeros_like(y, dtype=float)
    if x.shape[0] == 2:
        d[..., 0] = m[..., 0]
        d[..., 1] = m[..., 0]
        return d
    hk, hkm = h[1:], h[:-1]
    w1 = 2.0 * hk + hkm
    w2 = hk + 2.0 * hkm
    mk, mkm = m[..., 1:], m[..., :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (w1 + w2) / (w1 / mkm + w2 / mk)
    monotone = (np.sign(mkm) * np.sign(mk)) > 0
    d[..., 1:-1] = np.where(monotone & np.isfinite(interior), interior, 0.0)

    def edge(h0, h1, m0, m1):
        e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
        e = np.where(np.sign(e) != np.sign(m0), 0.0, e)
        cap = (np.sign(m0) != np.sign(m1)) & (np.abs(e) > 3.0 * np.abs(m0))
        return np.where(cap, 3.0 * m0, e)

    d[..., 0] = edge(h[0], h[1], m[..., 0], m[..., 1])
    d[..., -1] = edge(h[-1], h[-2], m[..., -1], m[..., -2])
    return d


def hermite_eval(x: np.ndarray, y: np.ndarray, d: np.ndarray,
                 xq: np.ndarray, der: int = 0) -> np.ndarray:
    """Evaluate the cubic Hermite interpolant (or a derivative) at xq.

    y, d: (..., n) knot values/slopes; xq: (m,).  Queries outside [x0, xn]
    are clamped to the boundary cubic (callers handle extensions).
    """
    idx = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.shape[0] - 2)
    h = x[idx + 1] - x[idx]
    t = (xq - x[idx]) / h
    y0, y1 = y[..., idx], y[..., idx + 1]
    d0, d1 = d[..., idx] * h, d[..., idx + 1] * h
    if der == 0:
        return ((2 * t ** 3 - 3 * t ** 2 + 1) * y0 + (t ** 3 - 2 * t ** 2 + t) * d0
                + (-2 * t ** 3 + 3 * t ** 2) * y1 + (t ** 3 - t ** 2) * d1)
    if der == 1:
        return (6 * t * (t - 1) * (y0 - y1) + (3 * t - 1) * (t - 1) * d0
                + t * (3 * t - 2) * d1) / h
    if der == 2:
        return ((12 * t - 6) * (y0 - y1) + (6 * t - 4) * d0 + (6 * t - 2) * d1) / h ** 2
    raise ValueError("der must be 0, 1 or 2")


# ---------------------------------------------------------------------------
# profile classes
# ---------------------------------------------------------------------------

class RadialProfile:
    """Common interface: eval/deriv/deriv2 plus power-order metadata.

    origin_order / tail_order describe g itself; deriv_* describe g'.  For
    compact support, tail_order is the exponent in (R - rho)^order at the
    support edge ``r_edge``. ``None`` deriv orders mean the derivative
    vanishes identically beyond the matching end.
    """

    origin_order: float = 0.0
    tail_order: float = 0.0
    deriv_origin_order: float | None = None
    deriv_tail_order: float | None = None
    r_edge: float | None = None

    def eval(self, rho):
        raise NotImplementedError

    def deriv(self, rho):
        raise NotImplementedError

    def deriv2(self, rho):
        raise NotImplementedError(f"{type(self).__name__} has no second derivative")

    def __call__(self, rho):
        return self.eval(rho)


@dataclass(frozen=True)
class AnalyticProfile(RadialProfile):
    """g(rho) = A (1 +/- B rho^beta)^{-/+gamma}; closed under the radial tools.

    compact=False: A (1 + B rho^beta)^{-gamma}, decaying like rho^{-beta gamma}.
    compact=True:  A (1 - B rho^beta)_+^{+gamma}, vanishing for rho >= B^{-1/beta}.
    """

    amplitude: float
    scale: float
    beta: float
    gamma: float
    compact: bool = False
    family: str = "custom"
    family_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise BadScale("scale B must be positive and finite", B=self.scale)
        if self.amplitude == 0 or not math.isfinite(self.amplitude):
            raise BadScale("amplitude A must be nonzero and finite", A=self.amplitude)
        if not (self.beta > 0 and self.gamma > 0):
            raise BadScale("beta and gamma must be positive",
                           beta=self.beta, gamma=self.gamma)

    # -- metadata ----------------------------------------------------------
    @property
    def origin_order(self) -> float:
        return 0.0

    @property
    def tail_order(self) -> float:
        return self.gamma if self.compact else -self.beta * self.gamma

    @property
    def deriv_origin_order(self) -> float:
        return self.beta - 1.0

    @property
    def deriv_tail_order(self) -> float:
        return self.gamma - 1.0 if self.compact else -self.beta * self.gamma - 1.0

    @property
    def r_edge(self) -> float | None:
        return self.scale ** (-1.0 / self.beta) if self.compact else None

    # -- evaluation --------------------------------------------------------
    def _core(self, rho):
        w = self.scale * np.asarray(rho, dtype=float) ** self.beta
        if self.compact:
            return np.maximum(1.0 - w, 0.0)
        return 1.0 + w

    def eval(self, rho):
        core = self._core(rho)
        sign = -self.gamma if not self.compact else self.gamma
        with np.errstate(divide="ignore"):
            out = self.amplitude * np.where(core > 0, core, np.inf) ** sign
        return np.where(core > 0, out, 0.0)

    def deriv(self, rho):
        rho = np.asarray(rho, dtype=float)
        core = self._core(rho)
        A, B, b, g = self.amplitude, self.scale, self.beta, self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.compact:
                out = -A * g * b * B * rho ** (b - 1.0) * core ** (g - 1.0)
            else:
                out = -A * g * b * B * rho ** (b - 1.0) * core ** (-g - 1.0)
        return np.where(core > 0, out, 0.0)

    def deriv2(self, rho):
        rho = np.asarray(rho, dtype=float)
        core = self._core(rho)
        A, B, b, g = self.amplitude, self.scale, self.beta, self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.compact:
                out = -A * g * b * B * ((b - 1.0) * rho ** (b - 2.0) * core ** (g - 1.0)
                                        - (g - 1.0) * b * B * rho ** (2 * b - 2.0)
                                        * core ** (g - 2.0))
            else:
                out = -A * g * b * B * ((b - 1.0) * rho ** (b - 2.0) * core ** (-g - 1.0)
                                        - (g + 1.0) * b * B * rho ** (2 * b - 2.0)
                                        * core ** (-g - 2.0))
        return np.where(core > 0, out, 0.0)

    # -- exact operations ---------------------------------------------------
    def with_amplitude(self, factor: float) -> "AnalyticProfile":
        return AnalyticProfile(self.amplitude * factor, self.scale, self.beta,
                               self.gamma, self.compact, self.family,
                               dict(self.family_params))

    def composed_power(self, d: float, amp_factor: float = 1.0) -> "AnalyticProfile":
        """Exact representation of rho -> amp_factor * g(rho^d)."""
        return AnalyticProfile(self.amplitude * amp_factor, self.scale,
                               self.beta * d, self.gamma, self.compact,
                               self.family, dict(self.family_params))

    def dilated(self, lam: float, amp_exp: float = 0.0) -> "AnalyticProfile":
        """Exact representation of rho -> lam^amp_exp * g(lam * rho)."""
        return AnalyticProfile(self.amplitude * lam ** amp_exp,
                               self.scale * lam ** self.beta, self.beta,
                               self.gamma, self.compact, self.family,
                               dict(self.family_params))


@dataclass(frozen=True, eq=False)
class GridProfile(RadialProfile):
    """Monotone cubic interpolant of (log rho, value) with power-law tails.

    Beyond the end nodes the profile continues as value * (rho/node)^order
    with the stored tail orders; a zero end value makes that side vanish.
    """

    nodes: np.ndarray
    values: np.ndarray
    origin_order: float
    tail_order: float
    _tau: np.ndarray = field(repr=False, init=False, default=None)
    _slopes: np.ndarray = field(repr=False, init=False, default=None)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape[0] < 8:
            raise BadGrid("at least 8 nodes required", count=int(nodes.size))
        if not np.all(np.diff(nodes) > 0) or nodes[0] <= 0:
            raise BadGrid("nodes must be positive and strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise BadGrid("values must be finite and nonnegative")
        if values.shape != nodes.shape:
            raise BadGrid("nodes and values must have equal length")
        tau = np.log(nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_tau", tau)
        object.__setattr__(self, "_slopes", pchip_slopes(tau, values))

    @property
    def deriv_origin_order(self) -> float | None:
        return None if self.origin_order == 0 else self.origin_order - 1.0

    @property
    def deriv_tail_order(self) -> float | None:
        return None if self.tail_order == 0 else self.tail_order - 1.0

    def _pieces(self, rho):
        scalar = np.ndim(rho) == 0
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        below = rho < self.nodes[0]
        above = rho > self.nodes[-1]
        mid = ~(below | above)
        return rho, below, mid, above, scalar

    def eval(self, rho):
        rho, below, mid, above, scalar = self._pieces(rho)
        out = np.empty_like(rho)
        out[below] = self.values[0] * (rho[below] / self.nodes[0]) ** self.origin_order
        out[above] = self.values[-1] * (rho[above] / self.nodes[-1]) ** self.tail_order
        if np.any(mid):
            out[mid] = hermite_eval(self._tau, self.values, self._slopes,
                                    np.log(rho[mid]))
        return float(out[0]) if scalar else out

    def deriv(self, rho):
        rho, below, mid, above, scalar = self._pieces(rho)
        out = np.empty_like(rho)
        o0, o1 = self.origin_order, self.tail_order
        out[below] = (self.values[0] * o0 / self.nodes[0]
                      * (rho[below] / self.nodes[0]) ** (o0 - 1.0))
        out[above] = (self.values[-1] * o1 / self.nodes[-1]
                      * (rho[above] / self.nodes[-1]) ** (o1 - 1.0))
        if np.any(mid):
            out[mid] = hermite_eval(self._tau, self.values, self._slopes,
                                    np.log(rho[mid]), der=1) / rho[mid]
        return float(out[0]) if scalar else out

    def deriv2(self, rho):
        rho, below, mid, above, scalar = self._pieces(rho)
        out = np.empty_like(rho)
        o0, o1 = self.origin_order, self.tail_order
        out[below] = (self.values[0] * o0 * (o0 - 1.0) / self.nodes[0] ** 2
                      * (rho[below] / self.nodes[0]) ** (o0 - 2.0))
        out[above] = (self.values[-1] * o1 * (o1 - 1.0) / self.nodes[-1] ** 2
                      * (rho[above] / self.nodes[-1]) ** (o1 - 2.0))
        if np.any(mid):
            tau = np.log(rho[mid])
            h1 = hermite_eval(self._tau, self.values, self._slopes, tau, der=1)
            h2 = hermite_eval(self._tau, self.values, self._slopes, tau, der=2)
            out[mid] = (h2 - h1) / rho[mid] ** 2
        return float(out[0]) if scalar else out

    def with_amplitude(self, factor: float) -> "GridProfile":
        if factor < 0:
            raise BadScale("grid profiles keep nonnegative values", factor=factor)
        return GridProfile(self.nodes, self.values * factor,
                           self.origin_order, self.tail_order)

    def composed_power(self, d: float, amp_factor: float = 1.0) -> "GridProfile":
        """Exact representation of rho -> amp_factor * g(rho^d).

        Remapping the nodes to rho^{1/d} rescales every knot spacing in
        log rho uniformly, under which the monotone-cubic slopes transform
        covariantly; the result agrees with pointwise composition everywhere,
        not just at the nodes.
        """
        return GridProfile(self.nodes ** (1.0 / d), self.values * amp_factor,
                           self.origin_order * d, self.tail_order * d)

    def to_json_dict(self) -> dict:
        return {"kind": "grid",
                "points": [[float(n), float(v)]
                           for n, v in zip(self.nodes, self.values)],
                "origin_order": self.origin_order,
                "tail_order": self.tail_order}


@dataclass(frozen=True)
class CallableProfile(RadialProfile):
    """Ad-hoc radial profile from vectorized callables plus declared orders."""

    eval_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Callable[[np.ndarray], np.ndarray]
    origin_order: float = 0.0
    tail_order: float = 0.0
    deriv_origin_order: float | None = None
    deriv_tail_order: float | None = None
    r_edge: float | None = None
    deriv2_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def eval(self, rho):
        return self.eval_fn(np.asarray(rho, dtype=float))

    def deriv(self, rho):
        return self.deriv_fn(np.asarray(rho, dtype=float))

    def deriv2(self, rho):
        if self.deriv2_fn is None:
            raise NotImplementedError("no second derivative supplied")
        return self.deriv2_fn(np.asarray(rho, dtype=float))


# ---------------------------------------------------------------------------
# generic profile operations
# ---------------------------------------------------------------------------

def dilated(profile: RadialProfile, lam: float, amp_exp: float = 0.0) -> RadialProfile:
    """The rescaled profile rho -> lam^amp_exp * g(lam rho), exactly.

    Analytic and grid profiles rescale in closed form; anything else is
    wrapped lazily.
    """
    if lam <= 0:
        raise BadScale("dilation factor must be positive", lam=lam)
    if isinstance(profile, AnalyticProfile):
        return profile.dilated(lam, amp_exp)
    if isinstance(profile, GridProfile):
        amp = lam ** amp_exp
        return GridProfile(profile.nodes / lam, profile.values * amp,
                           profile.origin_order, profile.tail_order)
    amp = lam ** amp_exp
    d2 = None
    if getattr(profile, "deriv2_fn", None) is not None or _has_deriv2(profile):
        d2 = lambda rho: amp * lam ** 2 * profile.deriv2(lam * rho)
    return CallableProfile(
        eval_fn=lambda rho: amp * profile.eval(lam * rho),
        deriv_fn=lambda rho: amp * lam * profile.deriv(lam * rho),
        origin_order=profile.origin_order,
        tail_order=profile.tail_order,
        deriv_origin_order=profile.deriv_origin_order,
        deriv_tail_order=profile.deriv_tail_order,
        r_edge=None if profile.r_edge is None else profile.r_edge / lam,
        deriv2_fn=d2)


def _has_deriv2(profile: RadialProfile) -> bool:
    try:
        profile.deriv2(np.asarray([1.0]))
        return True
    except NotImplementedError:
        return False


# ---------------------------------------------------------------------------
# optimizer families
# ---------------------------------------------------------------------------

def _require(cond: bool, message: str, **ctx):
    if not cond:
        raise FamilyRegimeMismatch(message, **ctx)


def make_optimizer(family: str, params: CknParams, A: float = 1.0,
                   B: float = 1.0, c: float | None = None,
                   lam: float | None = None) -> AnalyticProfile:
    """The explicit optimizer profile of the given family for these parameters.

    Shape parameters: (A, B) for the interpolation families, (c, lam) for the
    no-interpolation extremals.  The family must be compatible with the
    parameter regime; scale parameters must be positive.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    s, mu = params.s, params.mu
    if family not in FAMILIES:
        raise FamilyRegimeMismatch(f"unknown family {family!r}")

    if family in ("T5", "T6"):
        _require(params.regime == "C1", f"family {family} requires regime C1",
                 regime=params.regime)
        beta = (N - p - mu) / (N - p) * p / (p - 1.0)
        if family == "T5":
            _require(q > p, "decaying family requires q > p", q=q, p=p)
            return AnalyticProfile(A, B, beta, (p - 1.0) / (q - p), False,
                                   "T5")
        _require(r < p, "compact family requires r < p", r=r, p=p)
        _require(r > 2.0 - 1.0 / p, "compact family requires r > 2 - 1/p", r=r)
        return AnalyticProfile(A, B, beta, (p - 1.0) / (p - r), True, "T6")

    if family in ("GN_DPD", "GN_DPD_compact"):
        beta = p / (p - 1.0)
        if family == "GN_DPD":
            _require(q > p, "decaying family requires q > p", q=q, p=p)
            return AnalyticProfile(A, B, beta, (p - 1.0) / (q - p), False,
                                   "GN_DPD")
        _require(2.0 - 1.0 / p < r < p, "compact family requires 2 - 1/p < r < p",
                 r=r, p=p)
        return AnalyticProfile(A, B, beta, (p - 1.0) / (p - r), True,
                               "GN_DPD_compact")

    if family in ("A1", "HSE"):
        c = 1.0 if c is None else c
        lam = 1.0 if lam is None else lam
        if lam <= 0:
            raise BadScale("lambda must be positive", lam=lam)
        if family == "HSE":
            _require(mu == 0.0, "HSE is the mu = 0 extremal", mu=mu)
        _require(params.regime == "C3", f"family {family} requires regime C3",
                 regime=params.regime)
        _require(s < p + mu, "extremal undefined at the endpoint s = p + mu",
                 s=s)
        kappa = (p + mu - s) / (p - 1.0)
        nu = (N - p - mu) / (p + mu - s)
        # c (lam + rho^kappa)^{-nu}  ==  c lam^{-nu} (1 + rho^kappa / lam)^{-nu}
        return AnalyticProfile(c * lam ** (-nu), 1.0 / lam, kappa, nu, False,
                               family, {"c": c, "lam": lam})

    # T11 candidate
    _require(params.regime == "C2", "family T11 requires regime C2",
             regime=params.regime)
    _require(q > 2.0, "T11 exponent requires q > 2", q=q)
    _require(mu + 2.0 - s > 0, "T11 inner power requires s < mu + 2", s=s)
    return AnalyticProfile(A, B, mu + 2.0 - s, 1.0 / (q - 2.0), False, "T11")


def make_grid_profile(nodes: Sequence[float], values: Sequence[float],
                      tail: tuple[float, float]) -> GridProfile:
    """Grid profile from (node, value) samples and (origin, tail) orders."""
    origin_order, tail_order = float(tail[0]), float(tail[1])
    return GridProfile(np.asarray(nodes, dtype=float),
                       np.asarray(values, dtype=float),
                       origin_order, tail_order)


def analytic_moment(profile: AnalyticProfile, power: float,
                    exponent: float = 1.0) -> float:
    """Closed form for ``int_0^inf rho^{power-1} |g(rho)|^exponent drho``.

    Decaying family: the Beta integral
        |A|^k B^{-c/beta} Gamma(c/beta) Gamma(k gamma - c/beta)
            / (beta Gamma(k gamma)),
    compact family:
        |A|^k B^{-c/beta} Gamma(c/beta) Gamma(k gamma + 1)
            / (beta Gamma(c/beta + k gamma + 1)).
    This is the independent oracle the quadrature engine is tested against.
    """
    if not isinstance(profile, AnalyticProfile):
        raise DivergentMoment("closed-form moments exist only for analytic "
                              "families", kind=type(profile).__name__)
    k = float(exponent)
    A, B, beta, gamma = (abs(profile.amplitude), profile.scale,
                         profile.beta, profile.gamma)
    cp = power / beta
    if cp <= 0:
        raise DivergentMoment("Gamma argument c/beta must be positive", cp=cp)
    if profile.compact:
        log_val = (k * math.log(A) - cp * math.log(B) - math.log(beta)
                   + math.lgamma(cp) + math.lgamma(k * gamma + 1.0)
                   - math.lgamma(cp + k * gamma + 1.0))
        return math.exp(log_val)
    if k * gamma - cp <= 0:
        raise DivergentMoment("Gamma argument gamma*k - c/beta must be positive",
                              value=k * gamma - cp)
    log_val = (k * math.log(A) - cp * math.log(B) - math.log(beta)
               + math.lgamma(cp) + math.lgamma(k * gamma - cp)
               - math.lgamma(k * gamma))
    return math.exp(log_val)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def profile_to_json_dict(profile: RadialProfile) -> dict:
    if isinstance(profile, GridProfile):
        return profile.to_json_dict()
    if isinstance(profile, AnalyticProfile):
        return {"kind": "analytic", "family": profile.family,
                "A": profile.amplitude, "B": profile.scale,
                "beta": profile.beta, "gamma": profile.gamma,
                "compact": profile.compact,
                "family_params": dict(profile.family_params)}
    raise TypeError(f"{type(profile).__name__} does not serialize")


def profile_from_json_dict(obj: dict, params: CknParams | None = None
                           ) -> RadialProfile:
    """Rebuild a profile from its JSON form.

    Grid profiles are self-contained.  ``{"kind": "analytic", ...}`` carries
    explicit shape exponents; ``{"family": "T5", "A": .., "B": ..}`` (or
    c/lam) is resolved against ``params``.
    """
    kind = obj.get("kind")
    if kind == "grid":
        pts = obj["points"]
        return make_grid_profile([p[0] for p in pts], [p[1] for p in pts],
                                 (obj["origin_order"], obj["tail_order"]))
    if kind == "analytic":
        return AnalyticProfile(float(obj["A"]), float(obj["B"]),
                               float(obj["beta"]), float(obj["gamma"]),
                               bool(obj.get("compact", False)),
                               obj.get("family", "custom"),
                               dict(obj.get("family_params", {})))
    if "family" in obj:
        if params is None:
            raise ValueError("family profiles need parameter context")
        return make_optimizer(obj["family"], params,
                              A=float(obj.get("A", 1.0)),
                              B=float(obj.get("B", 1.0)),
                              c=obj.get("c"), lam=obj.get("lam"))
    raise ValueError(f"unrecognized profile JSON: keys {sorted(obj)}")
