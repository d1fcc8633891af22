"""Inverse problems: solve for the noise scale or the epoch budget that
meets a target (eps, delta) under a chosen bound family."""

from __future__ import annotations

import enum
import math
from typing import Sequence, Union

from . import baselines, dynamics, sampling
from .convert import rdp_to_dp
from .params import AccountingError, AccountingParams, RdpPoint, validate, with_epochs, with_sigma

__all__ = [
    "Unsatisfiable",
    "BracketTooNarrow",
    "BoundKind",
    "MaxedOut",
    "MAXED_OUT",
    "evaluate_bound",
    "bound_limit",
    "converted_eps",
    "calibrate_noise",
    "max_epochs",
]


class Unsatisfiable(AccountingError):
    """No noise scale inside the bracket meets the target."""


class BracketTooNarrow(AccountingError):
    """Degenerate search bracket."""


class BoundKind(enum.Enum):
    SHUFFLE = "shuffle"
    SAMP_WO = "samp-wo"
    FIXED_LAST_BATCH = "fixed-last"
    SGM_COMPOSITION = "sgm"
    NAIVE = "naive"


class MaxedOut(enum.Enum):
    """Sentinel for 'the bound converges below the budget: unlimited epochs'."""

    MAXED_OUT = "maxed_out"


MAXED_OUT = MaxedOut.MAXED_OUT


def evaluate_bound(params: AccountingParams, alpha: float, kind: BoundKind) -> float:
    """RDP eps of one bound family at params.epochs."""
    validate(params)
    if params.epochs == 0:
        return 0.0
    if kind is BoundKind.SHUFFLE:
        return sampling.bound_shuffle(params, alpha).eps
    if kind is BoundKind.SAMP_WO:
        return sampling.bound_samp_wo_replacement(params, alpha)
    if kind is BoundKind.FIXED_LAST_BATCH:
        return dynamics.bound_fixed(params, alpha, params.m - 1).eps
    if kind is BoundKind.SGM_COMPOSITION:
        return baselines.sgm_eps(params, alpha)
    if kind is BoundKind.NAIVE:
        return dynamics.bound_naive_baseline(params, alpha)
    raise AccountingError(f"unknown bound kind {kind!r}")


def bound_limit(params: AccountingParams, alpha: float, kind: BoundKind) -> float:
    """K -> infinity limit of a bound family (inf for the linear baselines)."""
    validate(params)
    if kind is BoundKind.SHUFFLE:
        j0 = params.m - 1
        first = dynamics.fixed_bound_limit(params, alpha, j0) - dynamics.eps0_term(
            params, alpha, params.m - j0
        )
        return first + sampling.shuffle_avg_term(params, alpha)
    if kind is BoundKind.SAMP_WO:
        return sampling.samp_wo_limit(params, alpha)
    if kind is BoundKind.FIXED_LAST_BATCH:
        if params.regularity.strongly_convex:
            return dynamics.fixed_bound_limit(params, alpha, params.m - 1)
        return math.inf  # convex fixed bound grows linearly in K
    if kind is BoundKind.SGM_COMPOSITION:
        return math.inf
    if kind is BoundKind.NAIVE:
        return dynamics.naive_baseline_limit(params, alpha)
    raise AccountingError(f"unknown bound kind {kind!r}")


def converted_eps(
    params: AccountingParams,
    alpha_grid: Sequence[float],
    delta: float,
    kind: BoundKind,
) -> float:
    """(eps, delta)-DP eps of a bound family, minimized over the order grid."""
    points = [
        RdpPoint(alpha=a, eps=evaluate_bound(params, a, kind)) for a in alpha_grid
    ]
    return rdp_to_dp(points, delta).eps


def calibrate_noise(
    params: AccountingParams,
    alpha_grid: Sequence[float],
    target_eps: float,
    delta: float,
    kind: BoundKind,
    bracket: tuple[float, float] = (1e-6, 1e6),
    rel_tol: float = 1e-6,
    max_iter: int = 200,
) -> float:
    """Smallest sigma whose converted eps meets the target, by bisection.

    Every implemented bound is strictly decreasing in sigma. Ties break
    toward larger sigma (the bisection keeps the feasible endpoint). The
    incoming params.sigma is ignored; the bracket is searched directly.
    """
    if not target_eps > 0:
        raise AccountingError(f"target_eps must be positive, got {target_eps!r}")
    lo, hi = bracket
    if not (lo > 0 and hi > lo):
        raise BracketTooNarrow(f"bad sigma bracket {bracket!r}")

    def eps_at(sigma: float) -> float:
        return converted_eps(with_sigma(params, sigma), alpha_grid, delta, kind)

    if eps_at(lo) <= target_eps:
        return lo
    if eps_at(hi) > target_eps:
        raise Unsatisfiable(
            f"even sigma = {hi} gives eps > {target_eps} for {kind.value}"
        )
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)  # sigma spans decades; bisect in log space
        if eps_at(mid) <= target_eps:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * hi:
            break
    return hi


def max_epochs(
    params: AccountingParams,
    alpha_grid: Sequence[float],
    target_eps: float,
    delta: float,
    kind: BoundKind,
) -> Union[int, MaxedOut]:
    """Largest epoch count whose converted eps stays within the target.

    Returns 0 when even one epoch exceeds the budget, and the MAXED_OUT
    sentinel when the bound's K -> infinity limit already satisfies it
    (converging families admit unlimited epochs).
    """
    if not target_eps > 0:
        raise AccountingError(f"target_eps must be positive, got {target_eps!r}")

    def eps_at(k: int) -> float:
        return converted_eps(with_epochs(params, k), alpha_grid, delta, kind)

    if eps_at(1) > target_eps:
        return 0
    limit_points = [
        RdpPoint(alpha=a, eps=bound_limit(params, a, kind)) for a in alpha_grid
    ]
    finite = [p for p in limit_points if math.isfinite(p.eps)]
    if finite and rdp_to_dp(finite, delta).eps <= target_eps:
        return MAXED_OUT
    # Exponential search for the first failing K, then binary search.
    lo, hi = 1, 2
    while eps_at(hi) <= target_eps:
        lo = hi
        hi *= 2
        if hi > 2**40:
            raise AccountingError("epoch search exceeded 2^40 without crossing the target")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if eps_at(mid) <= target_eps:
            lo = mid
        else:
            hi = mid
    return lo
