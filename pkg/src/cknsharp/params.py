"""Parameter model for the weighted interpolation inequality.

A parameter tuple ``(N, p, q, r, s, mu, theta)`` describes the inequality

    ( int |u|^r |x|^{-s} dx )^{1/r}
        <= C ( int |grad u|^p |x|^{-mu} dx )^{a/p}
             ( int |u|^q |x|^{-theta} dx )^{(1-a)/q}

on R^N.  The interpolation coefficient ``a`` is never free: it is pinned by
dimensional balance,

    a = [(N-theta) r - (N-s) q] p / ([(N-theta) p - (N-mu-p) q] r).

``validate`` recomputes ``a``, classifies the tuple into one of the regimes
with explicit-optimizer theory (C1, C2, C3), or tags it General/Invalid.
``derive`` produces every auxiliary exponent used by the transform, energy,
and sharp-constant machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace
from typing import Mapping

from .errors import BranchMismatch, DegenerateDenominator, HardyDenominator

# Relative tolerance for equality constraints between derived quantities
# (r = p(q-1)/(p-1), s = N*mu/(N-p), user-supplied a vs recomputed a, ...).
# Strict inequalities are checked with zero slack, matching the regime
# definitions literally; non-strict ones admit exact equality.
EQ_RTOL = 1e-12

_FIELDS = ("N", "p", "q", "r", "s", "mu", "theta")


def _close(x: float, y: float, rtol: float = EQ_RTOL) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1.0)


@dataclass(frozen=True)
class CknParams:
    """A validated parameter tuple with its regime tag.

    ``regime`` is one of ``C1``, ``C2``, ``C3``, ``General``, ``Invalid``.
    ``reason`` states the violated constraint when Invalid (empty otherwise).
    """

    N: float
    p: float
    q: float
    r: float
    s: float
    mu: float
    theta: float
    a: float
    regime: str = "General"
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.regime != "Invalid"

    def as_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json_dict(obj: Mapping) -> "CknParams":
        """Build and classify from a JSON object with keys N,p,q,r,s,mu,theta[,a]."""
        kwargs = {k: float(obj[k]) for k in _FIELDS}
        a = obj.get("a")
        return validate(**kwargs, a=None if a is None else float(a))


@dataclass(frozen=True)
class DerivedExponents:
    """Auxiliary exponents attached to a parameter tuple.

    d is the radial power of the weight-removing substitution; delta the
    branch discriminant; (m, n) the two scaling exponents of the reduced
    variational energy; prefactor_exp the power of d relating the weighted
    constant to its unweighted counterpart.
    """

    d: float
    delta: float
    m: float
    n: float
    prefactor_exp: float

    def as_dict(self) -> dict:
        return asdict(self)


def interpolation_coefficient(N: float, p: float, q: float, r: float,
                              s: float, mu: float, theta: float) -> float:
    """The balance coefficient a; raises on a vanishing denominator."""
    num = ((N - theta) * r - (N - s) * q) * p
    den = ((N - theta) * p - (N - mu - p) * q) * r
    if den == 0.0:
        raise DegenerateDenominator("interpolation coefficient denominator vanished",
                                    N=N, p=p, q=q, r=r, s=s, mu=mu, theta=theta)
    return num / den


def _theorem_a_holds(N, p, q, r, s, mu, theta, a) -> str:
    """Empty string if the general admissibility constraints hold, else the reason."""
    if not (p >= 1 and q >= 1):
        return "p >= 1 and q >= 1 violated"
    if not r > 0:
        return "r > 0 violated"
    # positivity of 1/k + (weight exponent)/N for each of the three terms
    if not mu < N:
        return "mu < N violated"
    if not theta < N:
        return "theta < N violated"
    if not s < N:
        return "s < N violated"
    if a > 0:
        alpha = -mu / p
        beta = -theta / q
        gamma = -s / r
        sigma = (gamma - (1.0 - a) * beta) / a
        if alpha - sigma < 0:
            return "0 <= alpha - sigma violated"
        lhs = 1.0 / p + (alpha - 1.0) / N
        rhs = 1.0 / r + gamma / N
        if _close(lhs, rhs) and alpha - sigma > 1:
            return "alpha - sigma <= 1 violated in the critical case"
    return ""


def _c1_reason(N, p, q, r, s, mu, theta) -> str:
    """Empty string if the C1 constraints hold, else the first violated one.

    mu = 0 sits on the regime boundary (the unweighted case, d = 1) and is
    classified inside, per the boundary-inside convention.
    """
    if not 1 < p:
        return "1 < p violated"
    if not mu >= 0:
        return "mu >= 0 violated"
    if not p + mu < N:
        return "p + mu < N violated"
    pivot = N * mu / (N - p)
    if not theta <= pivot:
        return "theta <= N*mu/(N-p) violated"
    if not pivot <= s:
        return "N*mu/(N-p) <= s violated"
    if not s < N:
        return "s < N violated"
    if not 1 <= q:
        return "1 <= q violated"
    if not q < r:
        return "q < r violated"
    if not r < N * p / (N - p):
        return "r < N*p/(N-p) violated"
    return ""


def _is_c2(N, p, q, r, s, mu, theta) -> bool:
    if p != 2.0:
        return False
    if not (mu >= 0 and 2 + mu < N):
        return False
    if not _close(r, 2.0 * (q - 1.0)):
        return False
    if not (2 < r < 2 * N / (N - 2)):
        return False
    if not _close(s, theta):
        return False
    if not (N * mu / (N - 2) < s < mu + 2):
        return False
    return True


def _is_c3(N, p, q, r, s, mu, theta) -> bool:
    if not (1 < p and mu >= 0 and p + mu < N):
        return False
    # mu/p <= s/r <= mu/p + 1 in s-terms; the upper endpoint s = p + mu is
    # kept inside the regime and handled by the Hardy branch.
    if not (N * mu / (N - p) <= s or _close(s, N * mu / (N - p))):
        return False
    if not (s <= p + mu or _close(s, p + mu)):
        return False
    if not _close(r, (N - s) * p / (N - mu - p)):
        return False
    return True


def validate(N: float, p: float, q: float, r: float, s: float,
             mu: float, theta: float, a: float | None = None) -> CknParams:
    """Classify a raw tuple, recomputing ``a`` from the other seven fields.

    A user-supplied ``a`` is cross-checked against the recomputed value
    (1e-12 relative) and never trusted on its own.  Classification order:
    the no-interpolation regime C3 when a = 1, then C1, then C2, then
    General; anything else is Invalid with the violated constraint.
    """
    fields = dict(N=N, p=p, q=q, r=r, s=s, mu=mu, theta=theta)
    for name, value in fields.items():
        if not math.isfinite(value):
            return CknParams(**fields, a=math.nan, regime="Invalid",
                             reason=f"{name} is not finite")
    if N < 2:
        return CknParams(**fields, a=math.nan, regime="Invalid",
                         reason="N >= 2 violated")
    if p <= 1:
        return CknParams(**fields, a=math.nan, regime="Invalid",
                         reason="p > 1 violated")

    num = ((N - theta) * r - (N - s) * q) * p
    den = ((N - theta) * p - (N - mu - p) * q) * r
    if den == 0.0:
        # 0/0 happens on the no-interpolation branch when q hits the same
        # critical value as p; the balance holds degenerately with a = 1
        # whenever the C3 shape constraints do.
        if num == 0.0 and _is_c3(N, p, q, r, s, mu, theta):
            a_computed = 1.0
        else:
            raise DegenerateDenominator(
                "interpolation coefficient denominator vanished",
                N=N, p=p, q=q, r=r, s=s, mu=mu, theta=theta)
    else:
        a_computed = num / den
    if a is not None and not _close(a, a_computed):
        return CknParams(**fields, a=a_computed, regime="Invalid",
                         reason="supplied a does not match the balance identity")

    if not (0.0 <= a_computed <= 1.0):
        # Report the most informative violated constraint: when the ordering
        # q < r fails that is the actual cause; otherwise the a-range itself.
        if q >= r:
            reason = "q < r violated"
        else:
            reason = f"a out of [0, 1] (a = {a_computed:.6g})"
        return CknParams(**fields, a=a_computed, regime="Invalid", reason=reason)

    if _close(a_computed, 1.0) and _is_c3(N, p, q, r, s, mu, theta):
        return CknParams(**fields, a=a_computed, regime="C3")
    if a_computed < 1.0:
        if _c1_reason(N, p, q, r, s, mu, theta) == "":
            return CknParams(**fields, a=a_computed, regime="C1")
        if _is_c2(N, p, q, r, s, mu, theta):
            return CknParams(**fields, a=a_computed, regime="C2")
    general_reason = _theorem_a_holds(N, p, q, r, s, mu, theta, a_computed)
    if general_reason == "":
        return CknParams(**fields, a=a_computed, regime="General")
    return CknParams(**fields, a=a_computed, regime="Invalid", reason=general_reason)


def transform_power(params: CknParams) -> float:
    """d = (N-p)/(N-p-mu); the radial power that removes the gradient weight."""
    den = params.N - params.p - params.mu
    if den <= 0:
        raise HardyDenominator("N - p - mu must be positive", N=params.N,
                               p=params.p, mu=params.mu)
    return (params.N - params.p) / den


def scaling_exponents(params: CknParams) -> tuple[float, float, float, float]:
    """(d, m, n, prefactor_exp) without any branch constraint.

    m and n are the powers of the dilation in the reduced energy
    E(lam) = lam^m A + lam^{-n} B; prefactor_exp is the power of d in the
    weighted-to-unweighted constant identity.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    s, theta, a = params.s, params.theta, params.a
    d = transform_power(params)
    m = (N * d - s * d) / r * p + p - N
    n = N * d - theta * d - q * (N * d - s * d) / r
    prefactor_exp = (1.0 / r + (p - 1.0) / p
                     - (1.0 - a) / q - (p - 1.0) / p * (1.0 - a))
    return d, m, n, prefactor_exp


def derive(params: CknParams, branch: str = "T5") -> DerivedExponents:
    """All auxiliary exponents for a C1 or C3 tuple.

    branch "T5" uses delta = Np - q(N-p) and requires q > p; branch "T6"
    uses delta = Np - r(N-p) and requires 2 - 1/p < r < p.  The branch
    constraint is enforced in regime C1, where the two explicit-optimizer
    families live; a C3 tuple only consumes d and the prefactor exponent.
    """
    if params.regime not in ("C1", "C3"):
        raise BranchMismatch("derive requires regime C1 or C3",
                             regime=params.regime)
    N, p, q, r = params.N, params.p, params.q, params.r
    d, m, n, prefactor_exp = scaling_exponents(params)

    if branch == "T5":
        if params.regime == "C1" and not q > p:
            raise BranchMismatch("branch T5 requires q > p", q=q, p=p)
        delta = N * p - q * (N - p)
    elif branch == "T6":
        if params.regime == "C1" and not (2.0 - 1.0 / p < r < p):
            raise BranchMismatch("branch T6 requires 2 - 1/p < r < p", r=r, p=p)
        delta = N * p - r * (N - p)
    else:
        raise BranchMismatch(f"unknown branch {branch!r}")

    return DerivedExponents(d=d, delta=delta, m=m, n=n,
                            prefactor_exp=prefactor_exp)


def gn_weights(params: CknParams) -> tuple[float, float, float]:
    """Weight powers (s', mu', theta') after the weight-removing transform.

    The gradient weight becomes 0 by construction of d; the other two map to
    N + t*d - N*d.
    """
    d = transform_power(params)
    N = params.N
    return (N + params.s * d - N * d, 0.0, N + params.theta * d - N * d)
