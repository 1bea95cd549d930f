"""Closed-form sharp constants and their quadrature cross-checks.

Four branches:

* ``t5`` — r = p(q-1)/(p-1), theta = s = N mu/(N-p): an explicit product of
  rational, sqrt(pi) and Gamma factors times the weight prefactor d^E.
* ``t6`` — q = p(r-1)/(p-1), 2 - 1/p < r < p: the analogous product for the
  compactly supported optimizer family.
* ``a1`` — no interpolation term (a = 1): the constant is evaluated as the
  quotient at the explicit extremal (the literature gives the extremal, not
  a closed numeric constant); the report carries the weight prefactor and
  the implied unweighted constant.
* ``hardy`` — the endpoint s = p + mu: p/(N-p-mu), never attained.

Every closed formula is cross-checked against the quotient at its own
optimizer; a disagreement beyond DISCREPANCY_RTOL raises the
"formula-discrepancy" flag instead of silently passing either value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BranchMismatch, InvalidGammaArgument
from .functionals import ckn_quotient, gn_quotient
from .params import CknParams, derive, EQ_RTOL
from .profiles import make_optimizer
from . import transform

DISCREPANCY_RTOL = 1e-5
DEFAULT_TOL = 1e-10


@dataclass
class SharpConstantReport:
    """A sharp constant with its factor decomposition and oracle cross-check."""

    value: float
    branch: str
    attained: bool
    components: dict = field(default_factory=dict)
    oracle_value: float | None = None
    oracle_error: float | None = None
    flags: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "branch": self.branch,
                "attained": self.attained, "components": dict(self.components),
                "oracle_value": self.oracle_value,
                "oracle_error": self.oracle_error,
                "flags": list(self.flags), "extras": dict(self.extras)}


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= EQ_RTOL * max(abs(x), abs(y), 1.0)


def _check_special_weights(params: CknParams, branch: str) -> None:
    pivot = params.N * params.mu / (params.N - params.p)
    if not (_close(params.s, pivot) and _close(params.theta, pivot)):
        raise BranchMismatch(
            f"branch {branch} requires theta = s = N*mu/(N-p)",
            s=params.s, theta=params.theta, pivot=pivot)


def _gamma_factor(*args: float) -> None:
    for value in args:
        if value <= 0:
            raise InvalidGammaArgument("Gamma argument must be positive",
                                       argument=value)


def _attach_oracle(report: SharpConstantReport, params: CknParams,
                   family: str, tol: float) -> None:
    quot = ckn_quotient(params, make_optimizer(family, params), tol=tol)
    report.oracle_value = quot.quotient
    report.oracle_error = quot.quotient_error
    rel = abs(quot.quotient - report.value) / abs(report.value)
    if rel > DISCREPANCY_RTOL:
        report.flags.append("formula-discrepancy")
        report.extras["oracle_rel_gap"] = rel


def sharp_constant_t5(params: CknParams, tol: float = DEFAULT_TOL,
                      cross_check: bool = True) -> SharpConstantReport:
    """Sharp constant on the decaying-optimizer branch r = p(q-1)/(p-1)."""
    if params.regime != "C1":
        raise BranchMismatch("branch t5 requires regime C1",
                             regime=params.regime)
    N, p, q, r, a = params.N, params.p, params.q, params.r, params.a
    if not q > p:
        raise BranchMismatch("branch t5 requires q > p", q=q, p=p)
    if not _close(r, p * (q - 1.0) / (p - 1.0)):
        raise BranchMismatch("branch t5 requires r = p(q-1)/(p-1)", r=r)
    _check_special_weights(params, "t5")
    exps = derive(params, branch="T5")
    delta = exps.delta
    if delta <= 0:
        raise InvalidGammaArgument("delta = Np - q(N-p) must be positive",
                                   delta=delta)
    _gamma_factor(q * (p - 1.0) / (q - p),
                  (p - 1.0) / p * delta / (q - p),
                  N / 2.0 + 1.0, N * (p - 1.0) / p + 1.0)

    components = {
        "d_prefactor": exps.d ** exps.prefactor_exp,
        "sqrt_pi_factor": ((q - p) / (p * math.sqrt(math.pi))) ** a,
        "scale_factor": (p * q / (N * (q - p))) ** (a / p),
        "delta_factor": (delta / (p * q)) ** (1.0 / r),
        "gamma_ratio_factor": math.exp(
            (a / N) * (math.lgamma(q * (p - 1.0) / (q - p))
                       + math.lgamma(N / 2.0 + 1.0)
                       - math.lgamma((p - 1.0) / p * delta / (q - p))
                       - math.lgamma(N * (p - 1.0) / p + 1.0))),
    }
    value = math.prod(components.values())
    report = SharpConstantReport(value=value, branch="t5", attained=True,
                                 components=components)
    if cross_check:
        _attach_oracle(report, params, "T5", tol)
    return report


def sharp_constant_t6(params: CknParams, tol: float = DEFAULT_TOL,
                      cross_check: bool = True) -> SharpConstantReport:
    """Sharp constant on the compact-optimizer branch q = p(r-1)/(p-1)."""
    if params.regime != "C1":
        raise BranchMismatch("branch t6 requires regime C1",
                             regime=params.regime)
    N, p, q, r, a = params.N, params.p, params.q, params.r, params.a
    if not (2.0 - 1.0 / p < r < p):
        raise BranchMismatch("branch t6 requires 2 - 1/p < r < p", r=r, p=p)
    if not _close(q, p * (r - 1.0) / (p - 1.0)):
        raise BranchMismatch("branch t6 requires q = p(r-1)/(p-1)", q=q)
    _check_special_weights(params, "t6")
    exps = derive(params, branch="T6")
    delta = exps.delta
    if delta <= 0:
        raise InvalidGammaArgument("delta = Np - r(N-p) must be positive",
                                   delta=delta)
    _gamma_factor((p - 1.0) / p * delta / (p - r) + 1.0,
                  r * (p - 1.0) / (p - r) + 1.0,
                  N / 2.0 + 1.0, N * (p - 1.0) / p + 1.0)

    components = {
        "d_prefactor": exps.d ** exps.prefactor_exp,
        "sqrt_pi_factor": ((p - r) / (p * math.sqrt(math.pi))) ** a,
        "scale_factor": (p * r / (N * (p - r))) ** (a / p),
        "delta_factor": (p * r / delta) ** ((1.0 - a) / q),
        "gamma_ratio_factor": math.exp(
            (a / N) * (math.lgamma((p - 1.0) / p * delta / (p - r) + 1.0)
                       + math.lgamma(N / 2.0 + 1.0)
                       - math.lgamma(r * (p - 1.0) / (p - r) + 1.0)
                       - math.lgamma(N * (p - 1.0) / p + 1.0))),
    }
    value = math.prod(components.values())
    report = SharpConstantReport(value=value, branch="t6", attained=True,
                                 components=components)
    if cross_check:
        _attach_oracle(report, params, "T6", tol)
    return report


def sharp_constant_a1(params: CknParams,
                      tol: float = DEFAULT_TOL) -> SharpConstantReport:
    """No-interpolation constant, evaluated at the explicit extremal.

    The endpoint s = p + mu is routed to ``hardy_constant``.  The report
    decomposes the value into the weight prefactor d^{1/r + (p-1)/p} and the
    implied unweighted constant (sourced from quadrature at the transformed
    extremal, so both factors are independently checkable).
    """
    if params.regime != "C3":
        raise BranchMismatch("branch a1 requires regime C3",
                             regime=params.regime)
    if _close(params.s, params.p + params.mu):
        return hardy_constant(params)
    exps = derive(params, branch="T5")
    extremal = make_optimizer("A1", params)
    quot = ckn_quotient(params, extremal, tol=tol)
    prefactor = exps.d ** exps.prefactor_exp
    report = SharpConstantReport(
        value=quot.quotient, branch="a1", attained=True,
        components={"d_prefactor": prefactor,
                    "hs_constant": quot.quotient / prefactor},
        oracle_value=quot.quotient, oracle_error=quot.quotient_error)

    # independent route: the transformed extremal under the unweighted
    # functional, multiplied back by the prefactor
    spec = transform.TransformSpec(d=exps.d, p=params.p, N=params.N)
    moved = transform.forward(extremal, spec)
    hs_quot = gn_quotient(params, moved, tol=tol)
    report.extras["hs_quotient"] = hs_quot.quotient
    rel = abs(prefactor * hs_quot.quotient - quot.quotient) / quot.quotient
    if rel > DISCREPANCY_RTOL:
        report.flags.append("formula-discrepancy")
        report.extras["oracle_rel_gap"] = rel
    return report


def hardy_constant(params: CknParams) -> SharpConstantReport:
    """Endpoint constant p/(N-p-mu); finite but never attained."""
    if not _close(params.s, params.p + params.mu):
        raise BranchMismatch("branch hardy requires s = p + mu",
                             s=params.s, p=params.p, mu=params.mu)
    value = params.p / (params.N - params.p - params.mu)
    return SharpConstantReport(value=value, branch="hardy", attained=False,
                               components={"hardy_value": value})


_BRANCHES = {
    "t5": sharp_constant_t5,
    "t6": sharp_constant_t6,
    "a1": sharp_constant_a1,
    "hardy": hardy_constant,
}


def sharp_constant(params: CknParams, branch: str,
                   tol: float = DEFAULT_TOL) -> SharpConstantReport:
    """Dispatch on branch name ('t5', 't6', 'a1', 'hardy')."""
    try:
        fn = _BRANCHES[branch.lower()]
    except KeyError:
        raise BranchMismatch(f"unknown branch {branch!r}") from None
    if branch.lower() in ("t5", "t6"):
        return fn(params, tol=tol)
    if branch.lower() == "a1":
        return fn(params, tol=tol)
    return fn(params)
