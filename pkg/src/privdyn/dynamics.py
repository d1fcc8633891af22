"""Fixed-mini-batch privacy dynamics bounds.

All epsilons here are Renyi DP bounds of order alpha for the last iterate of
noisy mini-batch gradient descent when the mini-batch partition is fixed and
the record that differs between the two neighboring datasets sits in batch
``j0``. Notation used throughout:

    m    = floor(n/b)                 mini-batches per epoch
    r    = (1 - eta*lambda)^2         per-step contraction of the gradient map
    G(t) = sum_{s=0}^{t-1} r^s        geometric sum (G(t) = t when lambda = 0)
    eps1 = alpha*eta*S_g^2/(4 sigma^2 b^2)   RDP cost of one differing-batch step

The single-epoch terms are eps0(j) = eps1 * r^(j-1)/G(j) for the strongly
convex class and eps1/j for the convex class; runs over K epochs compose the
contracted first-epoch terms geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .numerics import contraction_pow, geometric_sum
from .params import (
    AccountingError,
    AccountingParams,
    BatchCountTooSmall,
    ConvexityClass,
    validate,
)

__all__ = [
    "IndexOutOfRange",
    "RegularityMismatch",
    "FixedBatchBound",
    "LsiSequence",
    "RecursionStep",
    "lsi_constant",
    "eps0_term",
    "recursion_coefficients",
    "bound_strongly_convex_fixed",
    "bound_convex_fixed",
    "bound_fixed",
    "bound_naive_baseline",
    "fixed_bound_limit",
    "naive_baseline_limit",
]


class IndexOutOfRange(AccountingError):
    """Batch index outside [1, m] (eps0 terms) or [0, m-1] (j0)."""


class RegularityMismatch(AccountingError):
    """A bound was requested for the wrong convexity class."""


@dataclass(frozen=True, slots=True)
class FixedBatchBound:
    """RDP bound for records in batch j0 under a fixed partition."""

    params: AccountingParams
    alpha: float
    j0: int
    eps: float


@dataclass(frozen=True, slots=True)
class LsiSequence:
    """Log-Sobolev constants of the parameter law, indexed by (epoch, step)."""

    params: AccountingParams
    convexity: ConvexityClass

    def at(self, k: int, j: int) -> float:
        return lsi_constant(self.params, self.convexity, k, j)


@dataclass(frozen=True, slots=True)
class RecursionStep:
    """One step of the per-iteration recursion: eps <- eps*multiplier + increment."""

    multiplier: float = 1.0
    increment: float = 0.0

    def apply(self, eps: float) -> float:
        return eps * self.multiplier + self.increment


def _check_alpha(alpha: float) -> float:
    if not alpha > 1:
        raise AccountingError(f"Renyi order alpha must be > 1, got {alpha!r}")
    return float(alpha)


def _require_strongly_convex(params: AccountingParams, what: str) -> None:
    if not params.regularity.strongly_convex:
        raise RegularityMismatch(f"{what} needs a strongly convex loss (lambda > 0)")


def _require_two_batches(params: AccountingParams, what: str) -> None:
    # The h-split composition needs floor(n/b) >= 2; the samp-wo recursion
    # and the naive baseline have no such requirement.
    if params.m < 2:
        raise BatchCountTooSmall(f"{what} needs floor(n/b) >= 2, got m = {params.m}")


def lsi_constant(
    params: AccountingParams,
    convexity: Optional[ConvexityClass],
    k: int,
    j: int,
) -> float:
    """Log-Sobolev constant of the parameter law at epoch k, step j.

    Convex: 1/(2*eta*sigma^2*t) with t = k*m + j. Strongly convex:
    1/(2*eta*sigma^2*G(t)). At t = 0 the law is a point mass and the
    constant is the +inf sentinel (math.inf, never a large finite float).
    """
    validate(params)
    if convexity is None:
        convexity = params.regularity.convexity
    if k < 0 or j < 0 or j > params.m:
        raise IndexOutOfRange(f"iteration index (k={k}, j={j}) outside the schedule")
    t = k * params.m + j
    if t == 0:
        return math.inf
    if convexity is ConvexityClass.CONVEX:
        denom = float(t)
    else:
        denom = geometric_sum(params.log_r, t)
    return 1.0 / (2.0 * params.eta * params.sigma**2 * denom)


def eps0_term(params: AccountingParams, alpha: float, j: int) -> float:
    """Single-epoch term eps0^j(alpha) for j in [1, m].

    Strongly convex: eps1 * r^(j-1) / G(j) (equivalently
    eps1 * r^(j-1) * (1-r)/(1-r^j)); convex: eps1 / j.
    """
    validate(params)
    _check_alpha(alpha)
    if j < 1 or j > params.m:
        raise IndexOutOfRange(f"j = {j} outside [1, {params.m}]")
    eps1 = params.eps1(alpha)
    if not params.regularity.strongly_convex:
        return eps1 / j
    return eps1 * contraction_pow(params.log_r, j - 1) / geometric_sum(params.log_r, j)


def recursion_coefficients(
    params: AccountingParams,
    alpha: float,
    k: int,
    j: int,
    in_batch: bool,
) -> RecursionStep:
    """Per-iteration recursion coefficients at epoch k, step j.

    The differing-batch step adds eps1; every other step multiplies by
    (1 + c*2*eta*sigma^2/L^2)^-1 where c is the LSI constant entering the
    step and L = 1 (convex) or 1 - eta*lambda (strongly convex). The t = 0
    multiplier is 0 (infinite LSI constant), which is never divided by: the
    closed form below evaluates it as G(t)*r / G(t+1).
    """
    validate(params)
    _check_alpha(alpha)
    if in_batch:
        return RecursionStep(increment=params.eps1(alpha))
    t = k * params.m + j
    if t < 0:
        raise IndexOutOfRange(f"iteration index t = {t} negative")
    if not params.regularity.strongly_convex:
        return RecursionStep(multiplier=t / (t + 1.0))
    g_t = geometric_sum(params.log_r, t)
    g_next = geometric_sum(params.log_r, t + 1)
    return RecursionStep(multiplier=params.r * g_t / g_next)


def _first_term(params: AccountingParams, alpha: float) -> float:
    """Composed multi-epoch head term of the strongly convex fixed bound.

    eps0(h) * (1 - r^((K-1)(m-h))) / (1 - r^(m-h)) with h = floor(n/(2b));
    defined as 0 for K = 1 (and K = 0).
    """
    if params.epochs <= 1:
        return 0.0
    m = params.m
    h = m // 2
    span = m - h
    num = -math.expm1((params.epochs - 1) * span * params.log_r)
    den = -math.expm1(span * params.log_r)
    return eps0_term(params, alpha, h) * num / den


def bound_strongly_convex_fixed(
    params: AccountingParams, alpha: float, j0: int
) -> FixedBatchBound:
    """Last-iterate RDP bound for records in batch j0, strongly convex loss.

    eps = eps0(h) * (1 - r^((K-1)(m-h)))/(1 - r^(m-h)) + eps0(m - j0),
    h = floor(n/(2b)); the first term is 0 at K <= 1.
    """
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "bound_strongly_convex_fixed")
    _require_two_batches(params, "bound_strongly_convex_fixed")
    if j0 < 0 or j0 >= params.m:
        raise IndexOutOfRange(f"j0 = {j0} outside [0, {params.m - 1}]")
    if params.epochs == 0:
        return FixedBatchBound(params=params, alpha=alpha, j0=j0, eps=0.0)
    eps = _first_term(params, alpha) + eps0_term(params, alpha, params.m - j0)
    return FixedBatchBound(params=params, alpha=alpha, j0=j0, eps=eps)


def bound_convex_fixed(params: AccountingParams, alpha: float, j0: int) -> FixedBatchBound:
    """Last-iterate RDP bound for records in batch j0, convex loss.

    eps = eps1 * (K-1)/m + eps1/(m - j0).
    """
    validate(params)
    _check_alpha(alpha)
    if params.regularity.strongly_convex:
        raise RegularityMismatch("bound_convex_fixed needs a convex loss (lambda = 0)")
    if j0 < 0 or j0 >= params.m:
        raise IndexOutOfRange(f"j0 = {j0} outside [0, {params.m - 1}]")
    if params.epochs == 0:
        return FixedBatchBound(params=params, alpha=alpha, j0=j0, eps=0.0)
    eps1 = params.eps1(alpha)
    eps = eps1 * (params.epochs - 1) / params.m + eps1 / (params.m - j0)
    return FixedBatchBound(params=params, alpha=alpha, j0=j0, eps=eps)


def bound_fixed(params: AccountingParams, alpha: float, j0: int) -> FixedBatchBound:
    """Dispatch to the convex or strongly convex fixed-batch bound."""
    if params.regularity.strongly_convex:
        return bound_strongly_convex_fixed(params, alpha, j0)
    return bound_convex_fixed(params, alpha, j0)


def bound_naive_baseline(params: AccountingParams, alpha: float) -> float:
    """Post-processing-free baseline: alpha*S_g^2/(lambda*sigma^2*b^2) * (1 - e^(-lambda*eta*K/2))."""
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "bound_naive_baseline")
    scale = alpha * params.s_g**2 / (params.lam * params.sigma**2 * params.b**2)
    return scale * -math.expm1(-params.lam * params.eta * params.epochs / 2.0)


def fixed_bound_limit(params: AccountingParams, alpha: float, j0: int) -> float:
    """K -> infinity limit of the strongly convex fixed bound."""
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "fixed_bound_limit")
    _require_two_batches(params, "fixed_bound_limit")
    m = params.m
    h = m // 2
    den = -math.expm1((m - h) * params.log_r)
    return eps0_term(params, alpha, h) / den + eps0_term(params, alpha, m - j0)


def naive_baseline_limit(params: AccountingParams, alpha: float) -> float:
    """K -> infinity limit of the naive baseline."""
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "naive_baseline_limit")
    return alpha * params.s_g**2 / (params.lam * params.sigma**2 * params.b**2)
