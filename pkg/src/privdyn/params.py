"""Accounting inputs: validation, derived ratios, and config ingestion.

Every bound in the package reads its hyperparameters from a single frozen
:class:`AccountingParams`. The noise convention follows the update rule
``theta <- theta - eta*grad + sqrt(2*eta*sigma^2)*N(0, I)``: per-step
Gaussian noise has variance ``2*eta*sigma^2``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .numerics import contraction_log, geometric_sum

__all__ = [
    "AccountingError",
    "NonPositive",
    "StepsizeTooLarge",
    "BatchCountTooSmall",
    "NonDividingBatch",
    "ConfigError",
    "ConvexityClass",
    "Neighboring",
    "LossRegularity",
    "AccountingParams",
    "RdpPoint",
    "RdpCurve",
    "make_params",
    "validate",
    "with_epochs",
    "with_sigma",
    "sigma_from_multiplier",
    "multiplier_from_sigma",
    "load_config",
    "CONFIG_KEYS",
]


class AccountingError(ValueError):
    """Base class for all accounting input errors (CLI exit code 2)."""


class NonPositive(AccountingError):
    """A required-positive field is zero or negative."""


class StepsizeTooLarge(AccountingError):
    """eta >= 2/(lambda+beta) (strongly convex) or eta >= 2/beta (convex)."""


class BatchCountTooSmall(AccountingError):
    """Fewer than two mini-batches per epoch for a strongly convex bound."""


class NonDividingBatch(AccountingError):
    """n mod b != 0 and truncate_last_batch is off."""


class ConfigError(AccountingError):
    """Malformed or unknown key in a config file."""


class ConvexityClass(enum.Enum):
    CONVEX = "convex"
    STRONGLY_CONVEX = "strongly_convex"


class Neighboring(enum.Enum):
    CHANGE_ONE = "change_one"
    REMOVE_ONE = "remove_one"


@dataclass(frozen=True, slots=True)
class LossRegularity:
    """Convexity class tag plus (lambda, beta, S_g) with their validity rules.

    ``lam == 0`` means convex; ``lam > 0`` means lam-strongly convex. In both
    cases the loss is beta-smooth and the per-example gradient map has finite
    l2-sensitivity ``s_g``.
    """

    lam: float
    beta: float
    s_g: float

    @property
    def convexity(self) -> ConvexityClass:
        return ConvexityClass.STRONGLY_CONVEX if self.lam > 0 else ConvexityClass.CONVEX

    @property
    def strongly_convex(self) -> bool:
        return self.lam > 0

    def max_stepsize(self) -> float:
        """Exclusive upper stepsize: 2/(lambda+beta), or 2/beta when convex."""
        return 2.0 / (self.lam + self.beta)


@dataclass(frozen=True, slots=True)
class AccountingParams:
    """Full hyperparameter tuple shared by every bound.

    Fields: dataset size ``n``, mini-batch size ``b``, stepsize ``eta``,
    epoch count ``epochs``, noise scale ``sigma`` (per-step noise variance
    2*eta*sigma^2), loss regularity, neighboring notion, and the explicit
    opt-in for ignoring a non-dividing tail batch.
    """

    n: int
    b: int
    eta: float
    epochs: int
    sigma: float
    regularity: LossRegularity
    neighboring: Neighboring = Neighboring.CHANGE_ONE
    truncate_last_batch: bool = False

    @property
    def lam(self) -> float:
        return self.regularity.lam

    @property
    def beta(self) -> float:
        return self.regularity.beta

    @property
    def s_g(self) -> float:
        return self.regularity.s_g

    @property
    def m(self) -> int:
        """Mini-batches per epoch, floor(n/b)."""
        return self.n // self.b

    @property
    def q(self) -> float:
        """Per-iteration sampling ratio b/n."""
        return self.b / self.n

    @property
    def log_r(self) -> float:
        """ln of the contraction ratio r = (1 - eta*lambda)^2."""
        return contraction_log(self.eta, self.lam)

    @property
    def r(self) -> float:
        return math.exp(self.log_r)

    @property
    def eps1_coeff(self) -> float:
        """Per-step base RDP coefficient eta*S_g^2/(4*sigma^2*b^2); eps1 = alpha * this."""
        return self.eta * self.s_g**2 / (4.0 * self.sigma**2 * self.b**2)

    @property
    def steps(self) -> int:
        return self.epochs * self.m

    def eps1(self, alpha: float) -> float:
        return alpha * self.eps1_coeff


@dataclass(frozen=True, slots=True)
class RdpPoint:
    """An (order alpha, eps) pair; alpha > 1, eps >= 0."""

    alpha: float
    eps: float


@dataclass(frozen=True, slots=True)
class RdpCurve:
    """Ordered (epoch, eps) samples of one bound family at fixed alpha."""

    alpha: float
    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        epochs = [k for k, _ in self.points]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise AccountingError("curve epochs must be strictly increasing")


def _require_positive(**fields: Union[int, float]) -> None:
    for name, value in fields.items():
        if not value > 0:
            raise NonPositive(f"{name} must be positive, got {value!r}")


def validate(params: AccountingParams) -> AccountingParams:
    """Check every invariant and return the (unchanged, frozen) params.

    Idempotent. Raises NonPositive, BatchCountTooSmall, NonDividingBatch or
    StepsizeTooLarge; derived quantities (m, r, eps1_coeff, q) are exposed
    as properties of the returned object.
    """
    _require_positive(
        n=params.n, b=params.b, eta=params.eta, sigma=params.sigma,
        beta=params.beta, sensitivity=params.s_g,
    )
    if params.lam < 0:
        raise NonPositive(f"lambda must be nonnegative, got {params.lam!r}")
    if params.epochs < 0:
        raise NonPositive(f"epochs must be >= 0, got {params.epochs!r}")
    if params.lam > params.beta:
        raise AccountingError(
            f"strong convexity constant {params.lam} exceeds smoothness {params.beta}"
        )
    if params.b > params.n:
        raise BatchCountTooSmall(f"batch size {params.b} exceeds dataset size {params.n}")
    if params.n % params.b != 0 and not params.truncate_last_batch:
        raise NonDividingBatch(
            f"b = {params.b} does not divide n = {params.n}; "
            "pass truncate_last_batch=True to ignore the tail batch"
        )
    if params.eta >= params.regularity.max_stepsize():
        raise StepsizeTooLarge(
            f"eta = {params.eta} must be < {params.regularity.max_stepsize()} "
            f"(2/(lambda+beta) for lambda={params.lam}, beta={params.beta})"
        )
    if params.regularity.strongly_convex:
        # 0 < r < 1 is implied by 0 < eta*lambda < 1, which the stepsize check
        # guarantees since lambda <= beta. Assert on ln r: the exponentiated
        # value rounds to exactly 1.0 when eta*lambda is below float resolution.
        if not params.log_r < 0.0:
            raise StepsizeTooLarge(f"contraction r = {params.r} not inside (0, 1)")
    return params


def make_params(
    n: int,
    b: int,
    eta: float,
    epochs: int,
    sigma: float,
    lam: float,
    beta: float,
    s_g: float,
    neighboring: Neighboring = Neighboring.CHANGE_ONE,
    truncate_last_batch: bool = False,
) -> AccountingParams:
    """Build and validate an AccountingParams from scalars."""
    params = AccountingParams(
        n=int(n),
        b=int(b),
        eta=float(eta),
        epochs=int(epochs),
        sigma=float(sigma),
        regularity=LossRegularity(lam=float(lam), beta=float(beta), s_g=float(s_g)),
        neighboring=neighboring,
        truncate_last_batch=truncate_last_batch,
    )
    return validate(params)


def with_epochs(params: AccountingParams, epochs: int) -> AccountingParams:
    return validate(dataclasses.replace(params, epochs=int(epochs)))


def with_sigma(params: AccountingParams, sigma: float) -> AccountingParams:
    return validate(dataclasses.replace(params, sigma=float(sigma)))


def sigma_from_multiplier(eta: float, b: int, s_g: float, sigma_mul: float) -> float:
    """Noise scale sigma equivalent to a given implementation noise multiplier.

    sigma = sqrt(eta/2) * (1/b) * sigma_mul * (S_g/2), so that adding
    eta*(1/b)*sigma_mul*(S_g/2)*N(0, I) per update matches the
    sqrt(2*eta*sigma^2) noise convention.
    """
    _require_positive(eta=eta, b=b, sensitivity=s_g, sigma_mul=sigma_mul)
    return math.sqrt(eta / 2.0) * sigma_mul * s_g / (2.0 * b)


def multiplier_from_sigma(eta: float, b: int, s_g: float, sigma: float) -> float:
    """Inverse of sigma_from_multiplier."""
    _require_positive(eta=eta, b=b, sensitivity=s_g, sigma=sigma)
    return sigma * 2.0 * b / (math.sqrt(eta / 2.0) * s_g)


def geometric_sum_params(params: AccountingParams, terms: float) -> float:
    """sum_{s=0}^{terms-1} r**s for this params' contraction ratio (closed form)."""
    return geometric_sum(params.log_r, terms)


CONFIG_KEYS = frozenset(
    {
        "n", "b", "eta", "epochs", "sigma", "sigma_mul", "lambda", "beta",
        "sensitivity", "clip_feature", "clip_gradient", "alpha", "delta",
        "neighboring", "truncate_last_batch",
    }
)

_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False}


def _parse_config_value(raw: str) -> Union[int, float, bool, str]:
    text = raw.strip().strip('"').strip("'")
    low = text.lower()
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config(path: Union[str, Path]) -> dict:
    """Read a flat ``key = value`` config file.

    Blank lines and ``#`` comments are ignored; keys must come from
    CONFIG_KEYS. Values parse as int, float, bool, or bare/quoted string.
    """
    out: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_config_value(raw)
    return out
