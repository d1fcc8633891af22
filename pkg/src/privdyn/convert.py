"""RDP -> (eps, delta) conversion, neighboring-notion translation, and the
regularized-logistic-regression parameter derivations."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .params import (
    AccountingError,
    AccountingParams,
    Neighboring,
    NonPositive,
    RdpPoint,
    make_params,
    sigma_from_multiplier,
)
from .sampling import ShuffleBound, bound_shuffle

__all__ = [
    "EmptyInput",
    "InvalidDelta",
    "DpGuarantee",
    "LogisticConstants",
    "DEFAULT_ALPHA_GRID",
    "ALPHA_GRID_ENV",
    "alpha_grid_from_env",
    "rdp_to_dp",
    "translate_neighboring",
    "logistic_constants",
    "logistic_params",
    "corollary_logistic_bound",
]


class EmptyInput(AccountingError):
    """rdp_to_dp called with no RDP points."""


class InvalidDelta(AccountingError):
    """delta outside (0, 1]."""


ALPHA_GRID_ENV = "ACCOUNTANT_ALPHA_GRID"

DEFAULT_ALPHA_GRID: tuple[float, ...] = (
    1.25,
    1.5,
    *[float(a) for a in range(2, 65)],
    128.0,
    256.0,
)


def alpha_grid_from_env(default: Sequence[float] = DEFAULT_ALPHA_GRID) -> tuple[float, ...]:
    """Default order grid, overridable via the ACCOUNTANT_ALPHA_GRID env var."""
    raw = os.environ.get(ALPHA_GRID_ENV)
    if not raw:
        return tuple(default)
    try:
        grid = tuple(sorted(float(tok) for tok in raw.split(",") if tok.strip()))
    except ValueError as exc:
        raise AccountingError(f"cannot parse {ALPHA_GRID_ENV}={raw!r}") from exc
    if not grid or any(a <= 1 for a in grid):
        raise AccountingError(f"{ALPHA_GRID_ENV} must list orders > 1, got {raw!r}")
    return grid


@dataclass(frozen=True, slots=True)
class DpGuarantee:
    """(eps, delta)-DP statement plus the Renyi order that produced it."""

    eps: float
    delta: float
    neighboring: Neighboring
    alpha_star: float


@dataclass(frozen=True, slots=True)
class LogisticConstants:
    """Regularity constants of clipped, regularized logistic regression.

    For features clipped to l2-norm <= l_feat the unregularized loss is
    lip-Lipschitz with lip = sqrt(2*(l_feat^2+1)) and beta-smooth with
    beta = (l_feat^2+1)/2 (so lip^2 = 4*beta); clipping the unregularized
    gradient at s_g/2 gives the regularized update map l2-sensitivity s_g
    and makes it lambda-to-(beta+lambda) bi-Lipschitz.
    """

    l_feat: float
    lam: float
    lip: float
    beta: float
    s_g: float

    @property
    def effective_smoothness(self) -> float:
        """Smoothness of the clipped regularized gradient map (stepsize checks)."""
        return self.beta + self.lam


def rdp_to_dp(
    points: Iterable[RdpPoint],
    delta: float,
    neighboring: Neighboring = Neighboring.CHANGE_ONE,
) -> DpGuarantee:
    """Standard conversion: eps = min_alpha [eps_alpha + ln(1/delta)/(alpha-1)].

    Ties go to the smallest order.
    """
    pts = list(points)
    if not pts:
        raise EmptyInput("rdp_to_dp needs at least one (alpha, eps) point")
    if not 0.0 < delta <= 1.0:
        raise InvalidDelta(f"delta = {delta!r} outside (0, 1]")
    best_eps = math.inf
    best_alpha = math.inf
    log_term = math.log(1.0 / delta)
    for pt in pts:
        if not pt.alpha > 1:
            raise AccountingError(f"Renyi order {pt.alpha!r} must be > 1")
        if pt.eps < 0:
            raise AccountingError(f"RDP eps {pt.eps!r} must be >= 0")
        converted = pt.eps + log_term / (pt.alpha - 1.0)
        if converted < best_eps or (converted == best_eps and pt.alpha < best_alpha):
            best_eps = converted
            best_alpha = pt.alpha
    return DpGuarantee(
        eps=best_eps, delta=delta, neighboring=neighboring, alpha_star=best_alpha
    )


def translate_neighboring(
    guarantee: DpGuarantee, source: Neighboring, target: Neighboring
) -> DpGuarantee:
    """Translate a guarantee between neighboring notions at equal delta.

    remove-one -> change-one doubles eps (replacing a record is a removal
    plus an insertion); change-one -> remove-one is the identity (we never
    shrink a reported eps); same-notion is the identity.
    """
    if source is target:
        return replace(guarantee, neighboring=target)
    if source is Neighboring.REMOVE_ONE and target is Neighboring.CHANGE_ONE:
        return replace(guarantee, eps=2.0 * guarantee.eps, neighboring=target)
    return replace(guarantee, neighboring=target)


def logistic_constants(l_feat: float, lam: float, grad_clip: float) -> LogisticConstants:
    """Derive (Lipschitz, smoothness, sensitivity) from the two clip norms."""
    if l_feat < 0:
        raise NonPositive(f"feature clip norm must be >= 0, got {l_feat!r}")
    if not lam > 0:
        raise NonPositive(f"regularizer lambda must be positive, got {lam!r}")
    if not grad_clip > 0:
        raise NonPositive(f"gradient clip norm must be positive, got {grad_clip!r}")
    beta = (l_feat**2 + 1.0) / 2.0
    return LogisticConstants(
        l_feat=float(l_feat),
        lam=float(lam),
        lip=math.sqrt(2.0 * (l_feat**2 + 1.0)),
        beta=beta,
        s_g=2.0 * grad_clip,
    )


def logistic_params(
    n: int,
    b: int,
    eta: float,
    epochs: int,
    lam: float,
    l_feat: float,
    grad_clip: float,
    sigma_mul: float,
    truncate_last_batch: bool = False,
) -> AccountingParams:
    """Accounting inputs for the noisy regularized-logistic-regression run.

    The update map is lam-strongly convex and (beta+lam)-smooth, and the
    noise multiplier converts to sigma = sqrt(eta/2)*(1/b)*sigma_mul*(S_g/2),
    so the stepsize condition becomes eta < 2/((l_feat^2+1)/2 + 2*lam).
    """
    consts = logistic_constants(l_feat, lam, grad_clip)
    sigma = sigma_from_multiplier(eta, b, consts.s_g, sigma_mul)
    return make_params(
        n=n,
        b=b,
        eta=eta,
        epochs=epochs,
        sigma=sigma,
        lam=consts.lam,
        beta=consts.effective_smoothness,
        s_g=consts.s_g,
        truncate_last_batch=truncate_last_batch,
    )


def corollary_logistic_bound(
    n: int,
    b: int,
    eta: float,
    epochs: int,
    lam: float,
    l_feat: float,
    grad_clip: float,
    sigma_mul: float,
    alpha: float,
    eps_norm: float = 0.0,
    truncate_last_batch: bool = False,
) -> float:
    """Shuffle bound of the logistic run plus the feature-normalization cost.

    eps_norm is an opaque additive RDP constant supplied by the caller; the
    per-step prefactor of the underlying bound equals 2*alpha/sigma_mul^2
    exactly (the sigma_mul parameterization cancels eta, b and S_g).
    """
    if eps_norm < 0:
        raise NonPositive(f"eps_norm must be >= 0, got {eps_norm!r}")
    params = logistic_params(
        n=n, b=b, eta=eta, epochs=epochs, lam=lam,
        l_feat=l_feat, grad_clip=grad_clip, sigma_mul=sigma_mul,
        truncate_last_batch=truncate_last_batch,
    )
    bound: ShuffleBound = bound_shuffle(params, alpha)
    return eps_norm + bound.eps
