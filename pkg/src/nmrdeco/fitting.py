"""Sinusoid fitting and synthetic measurement noise for sweep results."""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .experiments import SweepResult

MIN_SAMPLES = 6
# coarse search: geometric period grid over [0.5, 4] x span at 1% steps, plus
# a uniform frequency grid (OVERSAMPLE points per 1/span) for shorter periods
# down to the sampling limit
GRID_LOW, GRID_HIGH, GRID_RATIO = 0.5, 4.0, 1.01
OVERSAMPLE = 10
RTOL = 1e-8


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SinusoidFit:
    """``y = amplitude * cos(2 pi x / period + phase) + offset``."""

    amplitude: float
    period: float
    phase: float
    offset: float
    rms_residual: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.cos(2 * np.pi * x / self.period + self.phase) + self.offset


def _component(values, use):
    if use == "re":
        return values.real
    if use == "im":
        return values.imag
    if use == "abs":
        return np.abs(values)
    raise ValueError(f"use must be 're', 'im' or 'abs', got {use!r}")


def _linear_solve(x, y, period):
    w = 2 * np.pi * x / period
    design = np.column_stack([np.cos(w), np.sin(w), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(resid @ resid)


def _model(p, x):
    amp, period, phase, off = p
    return amp * np.cos(2 * np.pi * x / period + phase) + off


def _jacobian(p, x):
    amp, period, phase, _ = p
    arg = 2 * np.pi * x / period + phase
    s = np.sin(arg)
    return np.column_stack([np.cos(arg), amp * s * 2 * np.pi * x / period**2, -amp * s, np.ones_like(x)])


def _candidate_periods(x, span):
    n_geo = int(math.ceil(math.log(GRID_HIGH / GRID_LOW) / math.log(GRID_RATIO)))
    geometric = GRID_LOW * span * GRID_RATIO ** np.arange(n_geo + 1)
    f_hi = 0.5 / float(np.median(np.diff(np.sort(x))))
    freqs = np.arange(1.0 / (GRID_LOW * span), f_hi, 1.0 / (OVERSAMPLE * span))
    return np.concatenate([geometric, 1.0 / freqs[1:]])


def fit_arrays(x, y) -> SinusoidFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    span = float(x.max() - x.min())
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    if span <= 0 or np.ptp(y) <= 1e-12 * max(scale, 1e-300):
        raise FitError("degenerate data: no variation to fit")

    best = None
    for period in _candidate_periods(x, span):
        coef, sse = _linear_solve(x, y, period)
        if best is None or sse < best[2]:
            best = (period, coef, sse)
    period, (a, b, c), _ = best
    p0 = np.array([math.hypot(a, b), period, math.atan2(-b, a), c])

    # Levenberg-Marquardt (damped Gauss-Newton) on all four parameters
    sol = least_squares(
        lambda p: _model(p, x) - y,
        p0,
        jac=lambda p: _jacobian(p, x),
        method="lm",
        xtol=RTOL,
        ftol=1e-15,
        gtol=1e-15,
    )
    p = sol.x
    amp, period, phase, off = p
    if not (sol.success and period > 0 and np.all(np.isfinite(p))):
        raise FitError(f"refinement did not converge: {sol.message}")
    if amp < 0:
        amp, phase = -amp, phase + math.pi
    phase = math.remainder(phase, 2 * math.pi)
    if phase <= -math.pi:
        phase += 2 * math.pi
    if span < period / 2:
        raise FitError(f"samples span {span:.4g} covers less than half the fitted period {period:.4g}")
    rms = float(np.sqrt(np.mean((y - _model(p, x)) ** 2)))
    return SinusoidFit(float(amp), float(period), float(phase), float(off), rms)


def fit_sinusoid(data: SweepResult, use: str = "re") -> SinusoidFit:
    """Least-squares ``A cos(2 pi x / T + phi) + c`` fit of one component of a sweep."""
    return fit_arrays(data.params, _component(data.values, use))


def inject_noise(data: SweepResult, sigma: float, seed: int) -> SweepResult:
    """Add zero-mean Gaussian noise of scale ``sigma * max|value|`` to every sample.

    Each sample draws from its own generator seeded by ``(seed, index)``.
    The imaginary part is perturbed only when the data carries one.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return data
    v = data.values
    scale = sigma * float(np.max(np.abs(v)))
    complex_data = float(np.max(np.abs(v.imag))) > 1e-12 * max(float(np.max(np.abs(v))), 1e-300)
    noisy = np.empty_like(v)
    for i, val in enumerate(v):
        rng = np.random.default_rng([int(seed), i])
        re, im = rng.normal(0.0, scale, size=2)
        noisy[i] = val + re + (1j * im if complex_data else 0)
    meta = dict(data.metadata)
    meta["noise"] = {"sigma": sigma, "seed": int(seed)}
    return replace(data, values=noisy, metadata=meta)
