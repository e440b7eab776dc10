"""Recipient LR when the expert reports an LR interval.

The interval is split into its log10 midpoint m and width w.  The
midpoint reuses the scalar-opinion machinery unchanged; the width is
modeled as gamma-distributed per scenario with a conjugate hyperprior on
the unknown shape and rate, so the recipient LR factorizes as
lr = lr_m * lr_w.

The width hyperprior density is proportional to

    p^(alpha - 1) * exp(-q * beta) * beta^(s * alpha) / Gamma(alpha)^r

over (alpha, beta), truncated to a working rectangle in (shape, rate)
space; the marginal width density has no closed form and is evaluated by
2-D quadrature on log-spaced nodes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import mc, scalar_opinion
from .core import LrEstimate
from .errors import DomainError
from .scalar_opinion import NormalGammaParams

__all__ = [
    "LrInterval",
    "GammaConjParams",
    "IntervalPrior",
    "split_interval",
    "update_gamma_conj",
    "update_gamma_conj_stats",
    "width_predictive_density",
    "width_normalizer_diagnostics",
    "lr_for_interval",
    "IntervalLr",
    "width_curve",
    "WidthCurve",
    "DEFAULT_WIDTH_QUAD_SPEC",
]

#: Working rectangle in (shape, rate) space for the width hyperprior.
#: Posterior mass after realistic width updates sits far inside; an
#: outermost-cell mass check flags cases where truncation matters.
DEFAULT_WIDTH_QUAD_SPEC = mc.QuadratureSpec(
    a_lo=1e-3, a_hi=60.0, b_lo=1e-3, b_hi=60.0,
    rel_tol=1e-6, max_refinements=7, base_panels=32, gauss_order=4,
)

#: Outermost-cell mass fraction above which truncation is reported.
BOUNDARY_MASS_LIMIT = 1e-6

_SCAN_POINTS = 192
_SCAN_LOG_DROP = 60.0


@dataclass(frozen=True)
class LrInterval:
    """Linear-scale LR interval endpoints, 0 < lo < hi."""

    lo: float
    hi: float

    def __post_init__(self):
        for name, v in (("lo", self.lo), ("hi", self.hi)):
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not self.lo < self.hi:
            raise DomainError(f"interval requires lo < hi, got ({self.lo!r}, {self.hi!r})")

    @property
    def midpoint(self) -> float:
        """Midpoint of the endpoints on the log10 scale."""
        return 0.5 * (math.log10(self.lo) + math.log10(self.hi))

    @property
    def width(self) -> float:
        """Width of the interval on the log10 scale."""
        return math.log10(self.hi) - math.log10(self.lo)


def split_interval(iv: LrInterval) -> tuple[float, float]:
    """Decompose an interval into its log10 (midpoint, width)."""
    return iv.midpoint, iv.width


@dataclass(frozen=True)
class GammaConjParams:
    """Conjugate hyperprior state for a gamma width model.

    ``log_p`` accumulates the log product of pseudo-observations (stored
    in log space because the product overflows for large samples), ``q``
    their sum, and ``r``/``s`` the observation counts backing the shape
    and rate information respectively.
    """

    log_p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        if not math.isfinite(self.log_p):
            raise DomainError(f"log_p must be finite, got {self.log_p!r}")
        for name in ("q", "r", "s"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def from_p(cls, p: float, q: float, r: float, s: float) -> "GammaConjParams":
        if not (math.isfinite(p) and p > 0.0):
            raise DomainError(f"p must be positive and finite, got {p!r}")
        return cls(log_p=math.log(p), q=q, r=r, s=s)

    def to_dict(self) -> dict:
        return {"log_p": self.log_p, "q": self.q, "r": self.r, "s": self.s}

    @classmethod
    def from_dict(cls, obj: dict) -> "GammaConjParams":
        if "p" in obj and "log_p" not in obj:
            return cls.from_p(float(obj["p"]), float(obj["q"]), float(obj["r"]), float(obj["s"]))
        return cls(float(obj["log_p"]), float(obj["q"]), float(obj["r"]), float(obj["s"]))


@dataclass(frozen=True)
class IntervalPrior:
    """Paired midpoint and width hyperparameters for one scenario."""

    mid: NormalGammaParams
    width: GammaConjParams


def update_gamma_conj(
    prior: GammaConjParams, widths: Sequence[float]
) -> GammaConjParams:
    """Conjugate update with observed interval widths.

    The four statistics are additive: log product and sum of the widths
    accumulate into ``log_p`` and ``q``; the counts into ``r`` and ``s``.
    """
    arr = np.asarray(widths, dtype=float)
    if arr.size == 0:
        raise DomainError("widths must be nonempty")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("widths must all be positive and finite")
    return update_gamma_conj_stats(
        prior, n=int(arr.size), total=float(arr.sum()), log_product=float(np.log(arr).sum())
    )


def update_gamma_conj_stats(
    prior: GammaConjParams, n: int, total: float, log_product: float
) -> GammaConjParams:
    """Update from summary statistics (count, sum, log product) directly."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    if total <= 0.0 or not math.isfinite(total) or not math.isfinite(log_product):
        raise DomainError("total must be positive and both statistics finite")
    return GammaConjParams(
        log_p=prior.log_p + log_product,
        q=prior.q + total,
        r=prior.r + n,
        s=prior.s + n,
    )


def _log_hyperprior(alpha: np.ndarray, beta: np.ndarray, params: GammaConjParams) -> np.ndarray:
    """Unnormalized log density of the conjugate hyperprior at (alpha, beta)."""
    return (
        (alpha - 1.0) * params.log_p
        - params.q * beta
        + params.s * alpha * np.log(beta)
        - params.r * gammaln(alpha)
    )


def _log_gamma_pdf(w: float, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return alpha * np.log(beta) + (alpha - 1.0) * math.log(w) - beta * w - gammaln(alpha)


def _localized_log_spec(logf, spec: mc.QuadratureSpec) -> tuple[mc.QuadratureSpec, float]:
    """Shrink the log-space integration box to where the integrand lives.

    Scans a coarse grid over the full (log alpha, log beta) rectangle,
    keeps the nodes within ``_SCAN_LOG_DROP`` of the maximum, and returns
    a padded bounding sub-rectangle plus the fraction of coarse-grid mass
    in the outermost scan cells of the full box (the truncation
    diagnostic).
    """
    u = np.linspace(math.log(spec.a_lo), math.log(spec.a_hi), _SCAN_POINTS)
    v = np.linspace(math.log(spec.b_lo), math.log(spec.b_hi), _SCAN_POINTS)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    logv = logf(uu, vv)
    peak = float(np.max(logv))
    if not np.isfinite(peak):
        raise DomainError("width-model integrand has no finite values on the domain")

    rel = np.exp(logv - peak)
    total = float(rel.sum())
    ring = float(rel[0, :].sum() + rel[-1, :].sum() + rel[1:-1, 0].sum() + rel[1:-1, -1].sum())
    boundary_fraction = ring / total

    keep = logv >= peak - _SCAN_LOG_DROP
    iu, iv_ = np.where(keep)
    du = u[1] - u[0]
    dv = v[1] - v[0]
    pad = 2
    lo_u = max(u[iu.min()] - pad * du, u[0])
    hi_u = min(u[iu.max()] + pad * du, u[-1])
    lo_v = max(v[iv_.min()] - pad * dv, v[0])
    hi_v = min(v[iv_.max()] + pad * dv, v[-1])
    sub = mc.QuadratureSpec(
        a_lo=lo_u, a_hi=hi_u, b_lo=lo_v, b_hi=hi_v,
        rel_tol=spec.rel_tol / 2.0,
        max_refinements=spec.max_refinements,
        base_panels=spec.base_panels,
        gauss_order=spec.gauss_order,
    )
    return sub, boundary_fraction


def _log_integral_over_box(logf_linear, spec: mc.QuadratureSpec) -> tuple[float, float]:
    """Log integral of exp(logf_linear(alpha, beta)) over the spec rectangle.

    Integration runs in log coordinates (log-spaced nodes) with the
    Jacobian alpha * beta folded in.  Returns (log integral, boundary
    mass fraction of the full box).
    """

    def logf_logcoords(u, v):
        return logf_linear(np.exp(u), np.exp(v)) + u + v

    sub, boundary_fraction = _localized_log_spec(logf_logcoords, spec)
    return mc.log_integrate_2d(logf_logcoords, sub), boundary_fraction


_normalizer_cache: dict = {}


def _log_normalizer(params: GammaConjParams, spec: mc.QuadratureSpec) -> float:
    """Cached log of the hyperprior mass over the working rectangle."""
    key = (params, spec)
    hit = _normalizer_cache.get(key)
    if hit is not None:
        return hit[0]
    value, boundary_fraction = _log_integral_over_box(
        lambda a, b: _log_hyperprior(a, b, params), spec
    )
    if boundary_fraction > BOUNDARY_MASS_LIMIT:
        warnings.warn(
            f"width hyperprior places mass fraction {boundary_fraction:.3g} in the "
            f"outermost cells of the working rectangle; densities are those of the "
            f"rectangle-truncated hyperprior",
            RuntimeWarning,
            stacklevel=3,
        )
    _normalizer_cache[key] = (value, boundary_fraction)
    return value


def width_normalizer_diagnostics(
    params: GammaConjParams, spec: mc.QuadratureSpec = DEFAULT_WIDTH_QUAD_SPEC
) -> dict:
    """Log normalizer and boundary-mass fraction for one hyperprior state."""
    _log_normalizer(params, spec)
    value, boundary_fraction = _normalizer_cache[(params, spec)]
    return {"log_normalizer": value, "boundary_mass_fraction": boundary_fraction}


def width_predictive_density(
    params: GammaConjParams,
    w: float,
    spec: mc.QuadratureSpec = DEFAULT_WIDTH_QUAD_SPEC,
) -> float:
    """Marginal density of an interval width under the hyperprior state.

    Integrates Gamma(w | alpha, beta) against the normalized conjugate
    hyperprior by 2-D quadrature; numerator and normalizer are separate
    quadratures and the normalizer is cached per parameter value.
    """
    if not (math.isfinite(w) and w > 0.0):
        raise DomainError(f"w must be positive and finite, got {w!r}")
    log_num, _ = _log_integral_over_box(
        lambda a, b: _log_hyperprior(a, b, params) + _log_gamma_pdf(w, a, b), spec
    )
    return math.exp(log_num - _log_normalizer(params, spec))


def _log_width_density(params: GammaConjParams, w: float, spec: mc.QuadratureSpec) -> float:
    log_num, _ = _log_integral_over_box(
        lambda a, b: _log_hyperprior(a, b, params) + _log_gamma_pdf(w, a, b), spec
    )
    return log_num - _log_normalizer(params, spec)


@dataclass(frozen=True)
class IntervalLr:
    """Recipient LR for an interval, with its midpoint and width factors."""

    estimate: LrEstimate
    lr_m: float
    lr_w: float
    midpoint: float
    width: float


def lr_for_interval(
    iv: LrInterval,
    mid_h1: NormalGammaParams,
    mid_h2: NormalGammaParams,
    width_h1: GammaConjParams,
    width_h2: GammaConjParams,
    spec: mc.QuadratureSpec = DEFAULT_WIDTH_QUAD_SPEC,
) -> IntervalLr:
    """Recipient LR for a reported interval: lr_m(midpoint) times lr_w(width).

    The midpoint factor treats m exactly as a reported scalar log10 LR;
    the width factor is the ratio of marginal width densities.
    """
    m, w = split_interval(iv)
    mid_estimate = scalar_opinion.lr_for_scalar(m, mid_h1, mid_h2)
    log10_lr_w = (
        _log_width_density(width_h1, w, spec) - _log_width_density(width_h2, w, spec)
    ) / math.log(10.0)
    estimate = LrEstimate.from_log10(mid_estimate.log10_lr + log10_lr_w)
    return IntervalLr(
        estimate=estimate,
        lr_m=mid_estimate.lr,
        lr_w=10.0**log10_lr_w,
        midpoint=m,
        width=w,
    )


@dataclass(frozen=True)
class WidthCurve:
    """Width densities and lr_w over a grid of widths."""

    w: np.ndarray
    density_h1: np.ndarray
    density_h2: np.ndarray

    @property
    def lr_w(self) -> np.ndarray:
        return self.density_h1 / self.density_h2

    def rows(self):
        for i in range(self.w.size):
            yield (
                float(self.w[i]),
                float(self.density_h1[i]),
                float(self.density_h2[i]),
                float(self.density_h1[i] / self.density_h2[i]),
            )


def width_curve(
    width_h1: GammaConjParams,
    width_h2: GammaConjParams,
    grid: Sequence[float],
    spec: mc.QuadratureSpec = DEFAULT_WIDTH_QUAD_SPEC,
) -> WidthCurve:
    """Marginal width densities for both scenarios over a width grid."""
    ws = np.asarray(grid, dtype=float)
    if ws.size == 0:
        raise DomainError("grid must be nonempty")
    d1 = np.array([width_predictive_density(width_h1, float(w), spec) for w in ws])
    d2 = np.array([width_predictive_density(width_h2, float(w), spec) for w in ws])
    return WidthCurve(w=ws, density_h1=d1, density_h2=d2)
