"""Composition-based comparison bounds.

The main baseline is RDP composition of the subsampled Gaussian mechanism
(SGM) at integer orders; the other two are the single-epoch mixing-and-
diffusion bounds composed across epochs. These are the curves the converging
dynamics bounds are measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import _check_alpha, _require_strongly_convex
from .numerics import contraction_pow, logsumexp
from .params import AccountingError, AccountingParams, RdpCurve, validate

__all__ = [
    "NonIntegerOrder",
    "SgmParams",
    "sgm_rdp_per_step",
    "sgm_rdp_per_step_any_order",
    "sgm_eps",
    "sgm_composition",
    "sgm_epoch_approximation",
    "mixing_diffusion_first_batch",
    "mixing_diffusion_last_batch",
]


class NonIntegerOrder(AccountingError):
    """sgm_rdp_per_step needs an integer order alpha >= 2."""


@dataclass(frozen=True, slots=True)
class SgmParams:
    """Subsampled-Gaussian view of the accounting inputs.

    q = b/n, sigma_eff = sqrt(2*eta*sigma^2)/(eta*S_g/b) (per-step noise
    std over per-step l2-sensitivity), steps = K*m.
    """

    q: float
    sigma_eff: float
    steps: int

    @classmethod
    def from_params(cls, params: AccountingParams) -> "SgmParams":
        validate(params)
        sens = params.eta * params.s_g / params.b
        sigma_eff = math.sqrt(2.0 * params.eta * params.sigma**2) / sens
        return cls(q=params.q, sigma_eff=sigma_eff, steps=params.steps)


def sgm_rdp_per_step(q: float, sigma_eff: float, alpha: int) -> float:
    """Integer-order RDP of one subsampled Gaussian step.

    (1/(a-1)) * ln sum_{k=0}^{a} C(a,k) (1-q)^(a-k) q^k exp(k(k-1)/(2 sigma^2)),
    summed in log-domain (log-gamma binomials), so it cannot overflow for
    orders up to ~1e4.
    """
    if not (isinstance(alpha, int) or float(alpha).is_integer()):
        raise NonIntegerOrder(f"alpha = {alpha!r} is not an integer order")
    a = int(alpha)
    if a < 2:
        raise NonIntegerOrder(f"alpha = {a} must be >= 2")
    if not 0.0 < q <= 1.0:
        raise AccountingError(f"sampling ratio q = {q!r} outside (0, 1]")
    if not sigma_eff > 0:
        raise AccountingError(f"sigma_eff must be positive, got {sigma_eff!r}")
    if q == 1.0:
        return a / (2.0 * sigma_eff**2)
    log_q = math.log(q)
    log_1mq = math.log1p(-q)
    lg = math.lgamma
    terms = [
        # ln C(a, k) via log-gamma keeps orders up to ~1e4 in range
        lg(a + 1) - lg(k + 1) - lg(a - k + 1)
        + (a - k) * log_1mq
        + k * log_q
        + k * (k - 1) / (2.0 * sigma_eff**2)
        for k in range(a + 1)
    ]
    # the moment sum is >= 1 analytically; clamp away logsumexp rounding
    return max(0.0, logsumexp(terms) / (a - 1))


def sgm_rdp_per_step_any_order(q: float, sigma_eff: float, alpha: float) -> tuple[float, int]:
    """Per-step SGM RDP at a possibly fractional order.

    Fractional alpha is rounded up to the next integer order; the result is a
    valid bound at the requested order since Renyi divergence is nondecreasing
    in alpha. Returns (eps, order actually evaluated).
    """
    _check_alpha(alpha)
    order = max(2, math.ceil(alpha - 1e-12))
    return sgm_rdp_per_step(q, sigma_eff, order), order


def sgm_eps(params: AccountingParams, alpha: float, epochs: int | None = None) -> float:
    """Composed SGM bound after ``epochs`` (default params.epochs) epochs."""
    sgm = SgmParams.from_params(params)
    k = params.epochs if epochs is None else int(epochs)
    if k < 0:
        raise AccountingError(f"epochs must be >= 0, got {k}")
    if k == 0:
        return 0.0
    per_step, _ = sgm_rdp_per_step_any_order(sgm.q, sgm.sigma_eff, alpha)
    return k * params.m * per_step


def sgm_composition(params: AccountingParams, alpha: float) -> RdpCurve:
    """SGM composition curve: eps(k) = k*m*per_step for k = 1..params.epochs."""
    validate(params)
    sgm = SgmParams.from_params(params)
    per_step, _ = sgm_rdp_per_step_any_order(sgm.q, sgm.sigma_eff, alpha)
    per_epoch = params.m * per_step
    points = tuple((k, k * per_epoch) for k in range(1, params.epochs + 1))
    return RdpCurve(alpha=float(alpha), points=points)


def sgm_epoch_approximation(params: AccountingParams, alpha: float) -> float:
    """Leading-term per-epoch approximation q * eps1 (documentation plots only)."""
    validate(params)
    _check_alpha(alpha)
    return params.q * params.eps1(alpha)


def _mixing_slope(params: AccountingParams, alpha: float) -> float:
    """Per-epoch first-batch increment of the mixing-and-diffusion bound.

    [alpha*eta*S_g^2 / (4*(m-1)*b^2*sigma^2)] * (1 - 2*eta*beta*lambda/(beta+lambda))^(m/2).
    """
    lam, beta = params.lam, params.beta
    decay = 1.0 - 2.0 * params.eta * beta * lam / (beta + lam)
    if decay <= 0.0:
        decay_pow = 0.0
    else:
        decay_pow = contraction_pow(math.log(decay), params.m / 2.0)
    return params.eps1(alpha) / (params.m - 1) * decay_pow


def mixing_diffusion_first_batch(params: AccountingParams, alpha: float) -> float:
    """Mixing-and-diffusion + composition bound for first-batch records: slope * K."""
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "mixing_diffusion_first_batch")
    return _mixing_slope(params, alpha) * params.epochs


def mixing_diffusion_last_batch(params: AccountingParams, alpha: float) -> float:
    """Mixing-and-diffusion + composition bound for last-batch records.

    min(2*K*eps1, slope*(K-1) + eps1): the capped branch only matters for
    the first epoch, where the additive eps1 term has not amortized yet.
    """
    validate(params)
    _check_alpha(alpha)
    _require_strongly_convex(params, "mixing_diffusion_last_batch")
    if params.epochs == 0:
        return 0.0
    eps1 = params.eps1(alpha)
    k = params.epochs
    return min(2.0 * k * eps1, _mixing_slope(params, alpha) * (k - 1) + eps1)
