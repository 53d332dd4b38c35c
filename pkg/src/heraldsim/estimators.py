"""Statistical estimation: probability tables, cross-correlation and
threefold-coincidence estimates of the two-photon probability, the
concurrence lower bound, fringe-visibility fitting and uncertainty
propagation.

Counts are treated as Poissonian throughout. First-order (delta-method)
propagation is the default; a parametric bootstrap that resamples the implied
Poisson counts is available as a cross-check and uses the same deterministic
substream contract as the Monte Carlo engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .montecarlo import CountRecord, substream


@dataclass(frozen=True)
class Measured:
    """A value with a one-standard-deviation uncertainty."""

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def __iter__(self):
        yield self.value
        yield self.sigma


@dataclass(frozen=True)
class ProbabilityTable:
    """Heralded detection probabilities p00, p01, p10, p11.

    p10 refers to a detection from arm A (measured with arm B blocked) and
    p01 to arm B; p00 is fixed by normalization.
    """

    p00: Measured
    p01: Measured
    p10: Measured
    p11: Measured

    def __post_init__(self):
        for name in ("p00", "p01", "p10", "p11"):
            v = getattr(self, name).value
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        total = self.p00.value + self.p01.value + self.p10.value + self.p11.value
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")


@dataclass(frozen=True)
class ConcurrenceEstimate:
    """Concurrence lower bound, clamped at zero."""

    value: float
    sigma: float
    method: str  # "xcorr", "threefold-mle" or "threefold-ce"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("concurrence bound is clamped at zero, value must be >= 0")


@dataclass(frozen=True)
class ThreefoldEstimate:
    """Two-photon probability from observed threefold coincidences."""

    p11: Measured
    method: str  # "mle" or "ce"
    n: float  # observed coincidences (real-valued for analytic expectations)
    n_heralds: float
    correction: float

    def __post_init__(self):
        if self.p11.value < 0:
            raise ValueError("p11 must be nonnegative")
        if self.method == "ce" and self.p11.value <= 0:
            raise ValueError("conservative estimate must be positive")


def probabilities_from_counts(rec: CountRecord, p11: Measured) -> ProbabilityTable:
    """Probability table from conditional counts plus an external p11 estimate.

    ``rec.n1_given_h`` is read as the arm-A-attributed count (the detection
    sum recorded with arm B blocked) and ``rec.n2_given_h`` as the arm-B
    count. p00 follows from normalization of the total probability; its
    uncertainty combines the Poisson uncertainties of the measured terms.
    """
    n_h = rec.n_heralds
    if n_h <= 0:
        raise ValueError("record contains no heralds")
    p10 = Measured(rec.n1_given_h / n_h, math.sqrt(rec.n1_given_h) / n_h)
    p01 = Measured(rec.n2_given_h / n_h, math.sqrt(rec.n2_given_h) / n_h)
    p00_val = 1.0 - p10.value - p01.value - p11.value
    if p00_val < 0:
        raise ValueError("conditional counts exceed the herald count; p00 < 0")
    p00 = Measured(p00_val, math.sqrt(p10.sigma**2 + p01.sigma**2 + p11.sigma**2))
    return ProbabilityTable(p00=p00, p01=p01, p10=p10, p11=p11)


def gsi_from_counts(
    coincidences: float,
    singles_idler: float,
    singles_signal: float,
    windows: float,
) -> Measured:
    """Normalized zero-delay cross-correlation from raw counts.

        g = (C / W) / ((S_i / W) * (S_s / W))

    with Poisson uncertainty propagated from all three counts. A zero
    coincidence count returns g = 0 with the one-count bound as sigma.
    """
    if min(coincidences, singles_idler, singles_signal) < 0 or windows <= 0:
        raise ValueError("counts must be nonnegative and windows positive")
    if singles_idler == 0 or singles_signal == 0:
        raise ValueError("singles counts must be positive")
    scale = windows / (singles_idler * singles_signal)
    if coincidences == 0:
        return Measured(0.0, scale)
    g = coincidences * scale
    rel = math.sqrt(1.0 / coincidences + 1.0 / singles_idler + 1.0 / singles_signal)
    return Measured(g, g * rel)


def p11_xcorr(p10: Measured, p01: Measured, gsi: Measured) -> Measured:
    """Two-photon probability from the measured cross-correlation.

        p11 = 4 p10 p01 / (g - 1)

    Valid only for g > 1; at or below 1 the field is noise-dominated and the
    relation does not apply.
    """
    if gsi.value <= 1.0:
        raise ValueError("cross-correlation must exceed 1 for the two-photon estimate")
    value = 4.0 * p10.value * p01.value / (gsi.value - 1.0)
    rel_sq = 0.0
    if p10.value > 0:
        rel_sq += (p10.sigma / p10.value) ** 2
    if p01.value > 0:
        rel_sq += (p01.sigma / p01.value) ** 2
    rel_sq += (gsi.sigma / (gsi.value - 1.0)) ** 2
    return Measured(value, value * math.sqrt(rel_sq))


def _sqrt_term_sigma(p00: Measured, p11: Measured) -> float:
    """Delta-method sigma of 2 sqrt(p00 p11), finite even at p11 = 0."""
    if p11.value > 0:
        var = (p11.value / p00.value) * p00.sigma**2 if p00.value > 0 else 0.0
        var += (p00.value / p11.value) * p11.sigma**2
        return math.sqrt(var)
    if p11.sigma == 0:
        return 0.0
    # first-order expansion fails at exactly zero; use the finite difference
    return 2.0 * math.sqrt(p00.value * p11.sigma)


def concurrence_bound(
    visibility: Measured,
    table: ProbabilityTable,
    method: str = "xcorr",
    bootstrap: int = 0,
    seed: int = 0,
) -> ConcurrenceEstimate:
    """Lower bound on the concurrence of the retrieved two-mode field.

        C >= max(0, V (p01 + p10) - 2 sqrt(p00 p11))

    Uncertainty is first-order propagation by default. With ``bootstrap > 0``
    the sigma is instead estimated by parametrically resampling the inputs
    (Gaussian in V, scaled-Poisson in the probabilities), deterministic in
    ``seed``.
    """
    if not 0.0 <= visibility.value <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    v = visibility.value
    psum = table.p01.value + table.p10.value
    raw = v * psum - 2.0 * math.sqrt(table.p00.value * table.p11.value)
    value = max(0.0, raw)

    if bootstrap > 0:
        sigma = _bootstrap_concurrence_sigma(visibility, table, bootstrap, seed)
    else:
        var = (psum * visibility.sigma) ** 2
        var += (v * table.p01.sigma) ** 2 + (v * table.p10.sigma) ** 2
        var += _sqrt_term_sigma(table.p00, table.p11) ** 2
        sigma = math.sqrt(var)
    return ConcurrenceEstimate(value=value, sigma=sigma, method=method)


def _resample_poissonish(rng: np.random.Generator, m: Measured, size: int) -> np.ndarray:
    """Resample a probability-like quantity through its implied Poisson count."""
    if m.sigma == 0 or m.value == 0:
        return np.full(size, m.value)
    implied = (m.value / m.sigma) ** 2
    return m.value * rng.poisson(implied, size) / implied


def _bootstrap_concurrence_sigma(
    visibility: Measured, table: ProbabilityTable, n_boot: int, seed: int
) -> float:
    rng = substream(seed, 0)
    v = np.clip(rng.normal(visibility.value, visibility.sigma, n_boot), 0.0, 1.0)
    p01 = _resample_poissonish(rng, table.p01, n_boot)
    p10 = _resample_poissonish(rng, table.p10, n_boot)
    p11 = _resample_poissonish(rng, table.p11, n_boot)
    p00 = np.clip(1.0 - p01 - p10 - p11, 0.0, 1.0)
    c = v * (p01 + p10) - 2.0 * np.sqrt(p00 * p11)
    return float(np.std(c))


def threefold_estimate(
    n: float,
    n_heralds: float,
    method: str = "mle",
    correction: float = 2.27,
) -> ThreefoldEstimate:
    """Two-photon probability per herald from threefold coincidences.

    ``mle`` maximizes the Poisson likelihood: correction * (n/N_H +- sqrt(n)/N_H).
    ``ce`` is the conservative flat-prior posterior mean, which stays positive
    even for n = 0: correction * ((n+1)/N_H +- sqrt(n+1)/N_H).

    The correction factor converts the recombined-coincidence convention into
    the separately-measured-arms convention.
    """
    if n_heralds <= 0:
        raise ValueError("n_heralds must be positive")
    if n < 0 or n > n_heralds:
        raise ValueError("coincidence count must lie in [0, n_heralds]")
    if correction <= 0:
        raise ValueError("correction must be positive")
    if method == "mle":
        p11 = Measured(correction * n / n_heralds, correction * math.sqrt(n) / n_heralds)
    elif method == "ce":
        p11 = Measured(
            correction * (n + 1.0) / n_heralds, correction * math.sqrt(n + 1.0) / n_heralds
        )
    else:
        raise ValueError("method must be 'mle' or 'ce'")
    return ThreefoldEstimate(p11=p11, method=method, n=n, n_heralds=n_heralds, correction=correction)


def posterior_density(n: int, n_heralds: float) -> Callable[[np.ndarray], np.ndarray]:
    """Flat-prior posterior density of the two-photon probability given n counts.

    The density is N_H * exp(-N_H p) (N_H p)^n / n! on [0, 1] (zero outside).
    Its mean is (n+1)/N_H and its standard deviation sqrt(n+1)/N_H up to
    corrections of order exp(-N_H).
    """
    if n_heralds <= 0:
        raise ValueError("n_heralds must be positive")
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    n = int(n)
    log_fact = math.lgamma(n + 1)

    def density(p):
        p = np.asarray(p, dtype=float)
        scalar = p.ndim == 0
        p = np.atleast_1d(p)
        out = np.zeros_like(p)
        inside = (p >= 0.0) & (p <= 1.0)
        x = n_heralds * p[inside]
        if n == 0:
            logpdf = math.log(n_heralds) - x
        else:
            with np.errstate(divide="ignore"):
                logpdf = math.log(n_heralds) - x + n * np.log(x) - log_fact
        out[inside] = np.exp(logpdf)
        return float(out[0]) if scalar else out

    return density


@dataclass(frozen=True)
class FringeFit:
    """Sinusoidal fit of one detector's fringe scan."""

    amplitude: float  # mean count level A in A (1 + V cos(phase - phase0))
    visibility: Measured
    phase0: float


def fit_visibility(scan: Iterable[tuple[float, Sequence[float]]]) -> list[FringeFit]:
    """Least-squares fringe fit count(phase) = A (1 + V cos(phase - phase0)).

    ``scan`` holds (phase, counts-per-detector) pairs. The model is linear in
    (A, A V cos phase0, A V sin phase0), so the fit is a weighted linear
    least-squares with Poisson weights; the visibility uncertainty follows by
    first-order propagation from the parameter covariance.
    """
    rows = list(scan)
    if len(rows) < 4:
        raise ValueError("need at least 4 scan points")
    phases = np.asarray([r[0] for r in rows], dtype=float)
    counts = np.asarray([r[1] for r in rows], dtype=float)
    if counts.ndim == 1:
        counts = counts[:, None]
    if np.unique(np.round(phases, 12)).size < 4:
        raise ValueError("need at least 4 distinct phases")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")

    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    fits = []
    for det in range(counts.shape[1]):
        y = counts[:, det]
        if np.all(y == y[0]) and y[0] == 0:
            raise ValueError(f"detector {det + 1} scan has no counts")
        w = 1.0 / np.maximum(y, 1.0)  # Poisson variance, floored for empty bins
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
        a0, a1, a2 = coef
        if a0 <= 0:
            raise ValueError(f"detector {det + 1} fit has nonpositive mean level")
        amp = math.hypot(a1, a2)
        vis = amp / a0
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
        # dV/d(a0, a1, a2)
        if amp > 0:
            grad = np.array([-amp / a0**2, a1 / (amp * a0), a2 / (amp * a0)])
        else:
            grad = np.array([0.0, 1.0 / a0, 1.0 / a0])
        sigma = math.sqrt(float(grad @ cov @ grad))
        fits.append(
            FringeFit(
                amplitude=float(a0),
                visibility=Measured(min(vis, 1.0), sigma),
                phase0=math.atan2(a2, a1),
            )
        )
    return fits


def simple_concurrence(eta: float, visibility: float, gsi: float) -> float:
    """Loss-dominated approximation of the concurrence bound.

        C ~ eta (V - 2 / sqrt(g - 1)),  clamped at zero.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    if gsi <= 1.0:
        raise ValueError("cross-correlation must exceed 1")
    return max(0.0, eta * (visibility - 2.0 / math.sqrt(gsi - 1.0)))
