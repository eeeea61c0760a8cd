"""Least-squares decay-law fits for cluster distances and theory comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FIT_RESIDUAL_THRESHOLD = 0.5  # log units; noisier fits carry no verdicts
DEGENERATE_DIST = 1e-12


class FitWindowError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    """Fitted decay law d_m ~ C e^{-eps m}, C m e^{-eps m}, or C m^d."""

    model: str  # "exponential" | "exponential_prefactor" | "polynomial"
    C: float
    rate: float  # eps for exponential models (positive = decay), d for polynomial
    window: tuple
    residual: float
    cluster: str = ""
    meta: dict = field(default_factory=dict)


def _window_series(distances, window):
    """Extract (m, d) pairs in the window, validating positivity."""
    table = {int(j): float(d) for j, d in distances}
    j0, j1 = window
    if j1 - j0 + 1 < 4:
        raise FitWindowError(f"fit window {window} has fewer than 4 points")
    ms, ds = [], []
    for j in range(j0, j1 + 1):
        if j not in table:
            break
        d = table[j]
        if d <= 0.0:
            raise FitWindowError(
                f"nonpositive distance {d!r} at index {j}: eigenvalue converged exactly; "
                "shrink the fit window"
            )
        ms.append(j)
        ds.append(d)
    if len(ms) < 4:
        raise FitWindowError(f"fit window {window} has fewer than 4 usable points")
    return np.array(ms, dtype=float), np.array(ds)


def _lstsq_line(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ coef - y)))
    return coef[0], coef[1], resid


def fit_exponential(distances, window, prefactor=False, cluster="") -> RateFit:
    """Fit d_m ~ C e^{-eps m} (or C m e^{-eps m} with the linear prefactor)."""
    m, d = _window_series(distances, window)
    y = np.log(d) - (np.log(m) if prefactor else 0.0)
    logC, slope, resid = _lstsq_line(m, y)
    return RateFit(
        model="exponential_prefactor" if prefactor else "exponential",
        C=float(np.exp(logC)),
        rate=float(-slope),
        window=(int(m[0]), int(m[-1])),
        residual=resid,
        cluster=cluster,
    )


def fit_polynomial(distances, window, cluster="") -> RateFit:
    """Fit d_m ~ C m^d on log-log axes."""
    m, d = _window_series(distances, window)
    logC, slope, resid = _lstsq_line(np.log(m), np.log(d))
    return RateFit(
        model="polynomial",
        C=float(np.exp(logC)),
        rate=float(slope),
        window=(int(m[0]), int(m[-1])),
        residual=resid,
        cluster=cluster,
    )


def default_window(levels, skip=2):
    """Window over decay levels: drop the first `skip`, stop at the first
    degenerate distance or the end of the resolved levels."""
    usable = []
    for m, d in levels:
        if d <= DEGENERATE_DIST:
            break
        usable.append(m)
    if len(usable) <= skip:
        raise FitWindowError("not enough resolved decay levels for a fit window")
    return usable[skip], usable[-1]


def model_prediction(fit: RateFit, m):
    m = np.asarray(m, dtype=float)
    if fit.model == "polynomial":
        return fit.C * m**fit.rate
    pref = m if fit.model == "exponential_prefactor" else 1.0
    return fit.C * pref * np.exp(-fit.rate * m)


def compare_with_theory(fit: RateFit, curve=None, params=None, smoothness=None,
                        eps_q=None, rate_tolerance=0.15, smooth_slack=0.5,
                        residual_threshold=FIT_RESIDUAL_THRESHOLD):
    """Verdicts comparing a fitted rate against the applicable theory.

    Returns a list of dicts {claim, quote_anchor, fitted, theoretical,
    tolerance, pass}; pass is None when the statement cannot be checked.
    Verdicts are suppressed (empty list plus a note) when the fit residual
    exceeds the acceptance threshold.
    """
    verdicts = []
    if fit.residual > residual_threshold:
        return [
            {
                "claim": "fit rejected: residual above threshold",
                "quote_anchor": "fit-quality-gate",
                "fitted": fit.residual,
                "theoretical": residual_threshold,
                "tolerance": 0.0,
                "pass": None,
            }
        ]
    if fit.model in ("exponential", "exponential_prefactor"):
        if eps_q is None and curve is not None:
            eps_q = curve.grauert_radius()
        if eps_q is None:
            verdicts.append(
                {
                    "claim": "exponential rate bound (strip radius unknown, not checkable)",
                    "quote_anchor": "analytic-rate-lower-bound",
                    "fitted": fit.rate,
                    "theoretical": None,
                    "tolerance": 0.0,
                    "pass": None,
                }
            )
        elif math.isfinite(eps_q):
            bound = eps_q / 8.0
            verdicts.append(
                {
                    "claim": "fitted decay rate exceeds one eighth of the strip radius",
                    "quote_anchor": "analytic-rate-lower-bound",
                    "fitted": fit.rate,
                    "theoretical": bound,
                    "tolerance": 0.0,
                    "pass": bool(fit.rate >= bound),
                }
            )
            rho = eps_q
            target = rho if fit.cluster != "minus" else 2.0 * rho
            label = "plus" if fit.cluster != "minus" else "minus"
            verdicts.append(
                {
                    "claim": f"ellipse {label}-cluster rate matches the sharp strip value",
                    "quote_anchor": f"ellipse-{label}-cluster-rate",
                    "fitted": fit.rate,
                    "theoretical": target,
                    "tolerance": rate_tolerance,
                    "pass": bool(abs(fit.rate - target) <= rate_tolerance * target),
                }
            )
    if fit.model == "polynomial":
        if smoothness is None and curve is not None:
            smoothness = curve.smoothness_exponent
        if smoothness is None:
            verdicts.append(
                {
                    "claim": "polynomial rate bound (smoothness unknown, not checkable)",
                    "quote_anchor": "smooth-rate-upper-bound",
                    "fitted": fit.rate,
                    "theoretical": None,
                    "tolerance": 0.0,
                    "pass": None,
                }
            )
        else:
            bound = -smoothness + 1.5
            verdicts.append(
                {
                    "claim": "fitted polynomial exponent at or below the smoothness bound",
                    "quote_anchor": "smooth-rate-upper-bound",
                    "fitted": fit.rate,
                    "theoretical": bound,
                    "tolerance": smooth_slack,
                    "pass": bool(fit.rate <= bound + smooth_slack),
                }
            )
    return verdicts
