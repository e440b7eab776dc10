"""Recipient LR when the expert reports a scalar weight of evidence.

The expert's log10 LR is modeled as normal per scenario with unknown mean
and precision under a Normal-Gamma conjugate prior, so the recipient's
marginal (predictive) distribution for the reported value is Student-t.
The recipient's LR for hearing a particular value r is the ratio of the
two scenarios' predictive densities at r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import mc
from .core import LrEstimate
from .errors import DomainError

__all__ = [
    "NormalGammaParams",
    "ScalarValidationSummary",
    "update_normal_gamma",
    "pooled_summary",
    "predictive_params",
    "predictive_density",
    "predictive_logpdf",
    "mc_blend_density",
    "lr_for_scalar",
    "lr_curve",
    "ScalarCurve",
]


@dataclass(frozen=True)
class NormalGammaParams:
    """Conjugate state for a normal model with unknown mean and precision.

    ``mu0`` is the mean's center, ``n_mu`` the observations' worth of
    information about it; ``tau0`` is the precision's center (E[tau] =
    tau0) and ``n_tau`` the observations' worth about the precision.
    """

    mu0: float
    n_mu: float
    tau0: float
    n_tau: float

    def __post_init__(self):
        if not math.isfinite(self.mu0):
            raise DomainError(f"mu0 must be finite, got {self.mu0!r}")
        for name in ("n_mu", "tau0", "n_tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")

    def to_dict(self) -> dict:
        return {"mu0": self.mu0, "n_mu": self.n_mu, "tau0": self.tau0, "n_tau": self.n_tau}

    @classmethod
    def from_dict(cls, obj: dict) -> "NormalGammaParams":
        return cls(float(obj["mu0"]), float(obj["n_mu"]), float(obj["tau0"]), float(obj["n_tau"]))


@dataclass(frozen=True)
class ScalarValidationSummary:
    """Sufficient statistics of scalar validation results for one scenario.

    ``variance`` is the n-denominator sample variance, matching the
    ``n * s^2`` term in the conjugate update.
    """

    n: int
    mean: float
    variance: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not math.isfinite(self.mean):
            raise DomainError(f"mean must be finite, got {self.mean!r}")
        if not (math.isfinite(self.variance) and self.variance >= 0.0):
            raise DomainError(f"variance must be nonnegative, got {self.variance!r}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ScalarValidationSummary":
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            raise DomainError("at least one validation value is required")
        return cls(n=arr.size, mean=float(arr.mean()), variance=float(arr.var()))


def pooled_summary(
    a: ScalarValidationSummary, b: ScalarValidationSummary
) -> ScalarValidationSummary:
    """Combine two summaries into the summary of the concatenated data."""
    n = a.n + b.n
    mean = (a.n * a.mean + b.n * b.mean) / n
    second_moment = (a.n * (a.variance + a.mean**2) + b.n * (b.variance + b.mean**2)) / n
    return ScalarValidationSummary(n=n, mean=mean, variance=max(second_moment - mean**2, 0.0))


def update_normal_gamma(
    prior: NormalGammaParams, data: ScalarValidationSummary
) -> NormalGammaParams:
    """Conjugate update of the Normal-Gamma state with a validation summary."""
    n, ybar, s2 = data.n, data.mean, data.variance
    n_mu_new = prior.n_mu + n
    mu_new = (prior.n_mu * prior.mu0 + n * ybar) / n_mu_new
    n_tau_new = prior.n_tau + n
    inv_rate = (
        prior.n_tau / prior.tau0
        + n * s2
        + prior.n_mu * n * (ybar - prior.mu0) ** 2 / n_mu_new
    )
    return NormalGammaParams(mu0=mu_new, n_mu=n_mu_new, tau0=n_tau_new / inv_rate, n_tau=n_tau_new)


def predictive_params(params: NormalGammaParams) -> tuple[float, float, float]:
    """(df, location, scale) of the Student-t predictive for one report.

    Marginalizing tau ~ Gamma(n_tau/2, rate n_tau/(2 tau0)) and
    mu | tau ~ Normal(mu0, 1/(n_mu tau)) over a Normal(mu, 1/tau)
    observation gives a t with df = n_tau, location mu0, and squared
    scale (n_mu + 1) / (n_mu tau0).
    """
    df = params.n_tau
    scale = math.sqrt((params.n_mu + 1.0) / (params.n_mu * params.tau0))
    return df, params.mu0, scale


def predictive_density(params: NormalGammaParams, x) -> float | np.ndarray:
    """Marginal (predictive) density of the reported log10 LR at ``x``."""
    df, loc, scale = predictive_params(params)
    out = stats.t.pdf(x, df=df, loc=loc, scale=scale)
    return float(out) if np.isscalar(x) else out


def predictive_logpdf(params: NormalGammaParams, x) -> float | np.ndarray:
    df, loc, scale = predictive_params(params)
    out = stats.t.logpdf(x, df=df, loc=loc, scale=scale)
    return float(out) if np.isscalar(x) else out


def mc_blend_density(
    params: NormalGammaParams,
    x: float,
    n_draws: int = 200_000,
    rng: mc.RngStream = mc.RngStream(0),
) -> tuple[float, float]:
    """Monte Carlo cross-check of the predictive density at one point.

    Draws (tau, mu) from the conjugate state and averages the normal
    density of ``x``; returns (estimate, standard error).  Kept
    independent of :func:`predictive_density` as the second route of the
    dual check.
    """
    gen = rng.generator()
    tau = gen.gamma(params.n_tau / 2.0, scale=2.0 * params.tau0 / params.n_tau, size=n_draws)
    mu = gen.normal(params.mu0, 1.0 / np.sqrt(params.n_mu * tau))
    dens = np.sqrt(tau / (2.0 * np.pi)) * np.exp(-0.5 * tau * (x - mu) ** 2)
    return float(dens.mean()), float(dens.std(ddof=1) / math.sqrt(n_draws))


def lr_for_scalar(
    r: float, h1: NormalGammaParams, h2: NormalGammaParams
) -> LrEstimate:
    """Recipient LR for the expert reporting log10 LR equal to ``r``.

    Closed form: the ratio of the two scenarios' Student-t predictive
    densities at r, so no Monte Carlo error is attached.
    """
    if not math.isfinite(r):
        raise DomainError(f"r must be finite, got {r!r}")
    log10_lr = (predictive_logpdf(h1, r) - predictive_logpdf(h2, r)) / math.log(10.0)
    return LrEstimate.from_log10(log10_lr)


@dataclass(frozen=True)
class ScalarCurve:
    """LR and both predictive densities over a grid of reported values."""

    r: np.ndarray
    density_h1: np.ndarray
    density_h2: np.ndarray
    log10_lr: np.ndarray

    @property
    def lr(self) -> np.ndarray:
        return 10.0**self.log10_lr

    def rows(self):
        """Yield (r, density_h1, density_h2, lr) rows for CSV emission."""
        for i in range(self.r.size):
            yield (
                float(self.r[i]),
                float(self.density_h1[i]),
                float(self.density_h2[i]),
                float(10.0 ** self.log10_lr[i]),
            )


def lr_curve(
    h1: NormalGammaParams, h2: NormalGammaParams, grid: Sequence[float]
) -> ScalarCurve:
    """Pointwise :func:`lr_for_scalar` over a grid, densities included."""
    r = np.asarray(grid, dtype=float)
    if r.size == 0:
        raise DomainError("grid must be nonempty")
    if not np.all(np.isfinite(r)):
        raise DomainError("grid values must be finite")
    log_d1 = predictive_logpdf(h1, r)
    log_d2 = predictive_logpdf(h2, r)
    return ScalarCurve(
        r=r,
        density_h1=np.exp(log_d1),
        density_h2=np.exp(log_d2),
        log10_lr=(log_d1 - log_d2) / math.log(10.0),
    )
