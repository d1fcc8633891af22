"""Exact ground truth on 1-D quadratic losses.

With loss (lam/2)*(theta - x)^2 the gradient is lam*(theta - x), every
update is affine, and the parameter law stays exactly Gaussian:

    mean     <- (1 - eta*lam)*mean + eta*lam*batch_mean
    variance <- (1 - eta*lam)^2*variance + 2*eta*sigma^2

The variance is identical across two neighboring runs (noise and contraction
never look at the data), so the last-iterate Renyi divergence has the closed
form alpha*(mean difference)^2/(2*variance). That exact value must sit below
every bound, and meets the fixed-batch bound with equality at K = 1 when the
differing record is in the first batch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .dynamics import _check_alpha, bound_strongly_convex_fixed
from .params import (
    AccountingError,
    AccountingParams,
    make_params,
    validate,
)
from .sampling import bound_shuffle, mixture_bound

__all__ = [
    "SensitivityViolated",
    "DominanceViolated",
    "StatisticalMismatch",
    "OracleInstance",
    "GaussianLaw",
    "DominanceReport",
    "MonteCarloReport",
    "make_instance",
    "gaussian_law",
    "exact_renyi",
    "verify_dominance",
    "monte_carlo_check",
]


class SensitivityViolated(AccountingError):
    """|x_i0 - x'_i0| > S_g/lambda, so the gradient sensitivity budget is broken."""


class DominanceViolated(AssertionError):
    """exact > bound beyond tolerance: an implementation bug, never expected."""


class StatisticalMismatch(AssertionError):
    """Monte-Carlo moments disagree with the Gaussian recursion beyond 5 SE."""


@dataclass(frozen=True, slots=True)
class GaussianLaw:
    """Exact parameter law N(mean, variance) at one iteration."""

    mean: float
    variance: float


@dataclass(frozen=True, slots=True)
class OracleInstance:
    """A pair of neighboring 1-D quadratic datasets plus a fixed batch schedule.

    The loss is (lam/2)*(theta - x)^2, so beta = lam and the stepsize must
    satisfy eta < 1/lam. ``data`` and ``data_alt`` differ in exactly one
    index; ``schedule`` is one shuffle-and-partition realization reused every
    epoch. ``theta0`` is the shared point initialization.
    """

    lam: float
    eta: float
    sigma: float
    epochs: int
    b: int
    s_g: float
    data: tuple[float, ...]
    data_alt: tuple[float, ...]
    schedule: tuple[tuple[int, ...], ...]
    theta0: float = 0.0

    @property
    def n(self) -> int:
        return len(self.data)

    @property
    def m(self) -> int:
        return len(self.schedule)

    @property
    def differing_index(self) -> Optional[int]:
        """Index of the differing record; None when the datasets coincide."""
        diffs = [i for i, (x, y) in enumerate(zip(self.data, self.data_alt)) if x != y]
        if len(diffs) > 1:
            raise AccountingError(f"instance must differ in at most one index, got {diffs}")
        return diffs[0] if diffs else None

    @property
    def j0(self) -> int:
        """Index of the batch containing the differing record."""
        i0 = self.differing_index
        if i0 is None:
            raise AccountingError("identical datasets have no differing batch")
        for j, batch in enumerate(self.schedule):
            if i0 in batch:
                return j
        raise AccountingError(f"differing index {i0} not covered by the schedule")

    def accounting_params(self, beta: Optional[float] = None) -> AccountingParams:
        """Matching bound inputs; beta defaults to the quadratic's own lam."""
        return make_params(
            n=self.n,
            b=self.b,
            eta=self.eta,
            epochs=self.epochs,
            sigma=self.sigma,
            lam=self.lam,
            beta=self.lam if beta is None else beta,
            s_g=self.s_g,
            truncate_last_batch=self.n % self.b != 0,
        )


def _validate_instance(instance: OracleInstance) -> OracleInstance:
    if not instance.lam > 0:
        raise AccountingError(f"lam must be positive, got {instance.lam!r}")
    if not instance.eta > 0 or instance.eta >= 1.0 / instance.lam:
        raise AccountingError(
            f"eta = {instance.eta!r} must lie in (0, 1/lam) = (0, {1.0 / instance.lam})"
        )
    if not instance.sigma > 0 or not instance.s_g > 0:
        raise AccountingError("sigma and s_g must be positive")
    if instance.epochs < 0:
        raise AccountingError(f"epochs must be >= 0, got {instance.epochs}")
    if len(instance.data) != len(instance.data_alt):
        raise AccountingError("neighboring datasets must have equal size")
    covered = [i for batch in instance.schedule for i in batch]
    if sorted(covered) != list(range(instance.n)):
        raise AccountingError("schedule must partition the index set exactly once")
    if any(len(batch) != instance.b for batch in instance.schedule):
        raise AccountingError(f"every batch must have size {instance.b}")
    i0 = instance.differing_index
    if i0 is not None:
        gap = abs(instance.data[i0] - instance.data_alt[i0])
        if gap > instance.s_g / instance.lam * (1 + 1e-12):
            raise SensitivityViolated(
                f"|x_i0 - x'_i0| = {gap} exceeds S_g/lam = {instance.s_g / instance.lam}"
            )
    return instance


def make_instance(
    params: AccountingParams,
    j0: int,
    delta_x: Optional[float] = None,
    theta0: float = 0.0,
) -> OracleInstance:
    """Worst-case instance for the given accounting inputs.

    All records are 0 except the differing one in the alt dataset, placed in
    batch j0 with gap delta_x (default S_g/lam, the sensitivity maximum);
    the schedule is the contiguous partition.
    """
    validate(params)
    if j0 < 0 or j0 >= params.m:
        raise AccountingError(f"j0 = {j0} outside [0, {params.m - 1}]")
    if delta_x is None:
        delta_x = params.s_g / params.lam
    n_used = params.m * params.b
    data = (0.0,) * params.n
    i0 = j0 * params.b
    data_alt = tuple(
        float(delta_x) if i == i0 else 0.0 for i in range(params.n)
    )
    schedule = tuple(
        tuple(range(j * params.b, (j + 1) * params.b)) for j in range(params.m)
    )
    if n_used != params.n:
        # Truncated tail records exist in the data but never in the schedule;
        # keep the partition property by restricting the instance to the used prefix.
        data = data[:n_used]
        data_alt = data_alt[:n_used]
    instance = OracleInstance(
        lam=params.lam,
        eta=params.eta,
        sigma=params.sigma,
        epochs=params.epochs,
        b=params.b,
        s_g=params.s_g,
        data=data,
        data_alt=data_alt,
        schedule=schedule,
        theta0=theta0,
    )
    return _validate_instance(instance)


def _batch_means(instance: OracleInstance, alt: bool) -> list[float]:
    data = instance.data_alt if alt else instance.data
    return [sum(data[i] for i in batch) / instance.b for batch in instance.schedule]


def gaussian_law(
    instance: OracleInstance, alt: bool = False, trace: bool = False
) -> GaussianLaw | list[GaussianLaw]:
    """Exact (mean, variance) of the last iterate, or the whole trajectory."""
    _validate_instance(instance)
    shrink = 1.0 - instance.eta * instance.lam
    noise_var = 2.0 * instance.eta * instance.sigma**2
    means = _batch_means(instance, alt)
    mean, var = instance.theta0, 0.0
    laws = [GaussianLaw(mean=mean, variance=var)]
    for _ in range(instance.epochs):
        for xbar in means:
            mean = shrink * mean + instance.eta * instance.lam * xbar
            var = shrink**2 * var + noise_var
            laws.append(GaussianLaw(mean=mean, variance=var))
    return laws if trace else laws[-1]


def exact_renyi(instance: OracleInstance, alpha: float) -> float:
    """Exact last-iterate Renyi divergence between the two runs.

    alpha*(mean gap)^2/(2*variance); 0 for identical datasets or K = 0.
    """
    _check_alpha(alpha)
    _validate_instance(instance)
    if instance.epochs == 0:
        return 0.0
    law = gaussian_law(instance, alt=False)
    law_alt = gaussian_law(instance, alt=True)
    gap = law.mean - law_alt.mean
    return alpha * gap * gap / (2.0 * law.variance)


@dataclass(frozen=True, slots=True)
class DominanceReport:
    kind: str
    alpha: float
    exact: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.exact

    def to_json(self, seed: Optional[int] = None) -> str:
        payload = {
            "exact": self.exact,
            "bound": self.bound,
            "slack": self.slack,
            "params": {"kind": self.kind, "alpha": self.alpha},
            "seed": seed,
        }
        return json.dumps(payload, sort_keys=True)


def verify_dominance(
    instance: OracleInstance,
    alpha: float,
    bound_kind: Literal["fixed", "shuffle"] = "fixed",
    beta: Optional[float] = None,
    slack_tol: float = 1e-12,
) -> DominanceReport:
    """Check exact <= bound on this instance; raises DominanceViolated otherwise.

    kind "fixed" compares against the fixed-batch bound at the instance's own
    j0. kind "shuffle" treats the instance as a template: the exact values for
    all m placements of the differing record are combined with log-avg-exp
    (the mixture the shuffle bound averages over) and compared to it.
    """
    _check_alpha(alpha)
    _validate_instance(instance)
    params = instance.accounting_params(beta=beta)
    if bound_kind == "fixed":
        exact = exact_renyi(instance, alpha)
        bound = bound_strongly_convex_fixed(params, alpha, instance.j0).eps
    elif bound_kind == "shuffle":
        i0 = instance.differing_index
        gap = 0.0 if i0 is None else abs(instance.data[i0] - instance.data_alt[i0])
        per_batch = [
            exact_renyi(make_instance(params, j0, delta_x=gap, theta0=instance.theta0), alpha)
            for j0 in range(params.m)
        ]
        weight = 1.0 / params.m
        exact = mixture_bound([(weight, e) for e in per_batch], alpha)
        bound = bound_shuffle(params, alpha).eps
    else:
        raise AccountingError(f"unknown dominance kind {bound_kind!r}")
    report = DominanceReport(kind=bound_kind, alpha=alpha, exact=exact, bound=bound)
    if report.slack < -slack_tol:
        raise DominanceViolated(
            f"exact {exact} exceeds bound {bound} (slack {report.slack})"
        )
    return report


@dataclass(frozen=True, slots=True)
class MonteCarloReport:
    samples: int
    seed: int
    empirical_mean: float
    empirical_variance: float
    expected_mean: float
    expected_variance: float
    mean_z: float
    variance_z: float

    def to_json(self) -> str:
        payload = {
            "samples": self.samples,
            "seed": self.seed,
            "empirical_mean": self.empirical_mean,
            "empirical_variance": self.empirical_variance,
            "expected_mean": self.expected_mean,
            "expected_variance": self.expected_variance,
            "mean_z": self.mean_z,
            "variance_z": self.variance_z,
        }
        return json.dumps(payload, sort_keys=True)


def monte_carlo_check(
    instance: OracleInstance,
    samples: int,
    seed: int,
    alt: bool = False,
    z_max: float = 5.0,
) -> MonteCarloReport:
    """Simulate the noisy updates and compare moments with the Gaussian recursion.

    Runs ``samples`` independent trajectories with a seeded generator and
    asserts the empirical last-iterate mean and variance sit within ``z_max``
    standard errors of the recursion's prediction. Deterministic given the
    seed; raises StatisticalMismatch on disagreement.
    """
    _validate_instance(instance)
    if samples < 10_000:
        raise AccountingError(f"need at least 10^4 samples, got {samples}")
    law = gaussian_law(instance, alt=alt)
    shrink = 1.0 - instance.eta * instance.lam
    noise_std = math.sqrt(2.0 * instance.eta * instance.sigma**2)
    means = _batch_means(instance, alt)
    rng = np.random.default_rng(seed)
    theta = np.full(samples, instance.theta0, dtype=np.float64)
    for _ in range(instance.epochs):
        for xbar in means:
            theta = shrink * theta + instance.eta * instance.lam * xbar
            theta += rng.normal(0.0, noise_std, samples)
    emp_mean = float(np.mean(theta))
    emp_var = float(np.var(theta, ddof=1))
    se_mean = math.sqrt(law.variance / samples)
    se_var = law.variance * math.sqrt(2.0 / (samples - 1))
    mean_z = (emp_mean - law.mean) / se_mean
    var_z = (emp_var - law.variance) / se_var
    report = MonteCarloReport(
        samples=samples,
        seed=seed,
        empirical_mean=emp_mean,
        empirical_variance=emp_var,
        expected_mean=law.mean,
        expected_variance=law.variance,
        mean_z=mean_z,
        variance_z=var_z,
    )
    if abs(mean_z) > z_max or abs(var_z) > z_max:
        raise StatisticalMismatch(
            f"moments off by more than {z_max} SE: mean_z={mean_z}, variance_z={var_z}"
        )
    return report
