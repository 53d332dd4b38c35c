"""Truncated-Fock-space photon-number statistics.

Everything downstream (the memory model, the Monte Carlo engine, the
estimators) works with probability vectors over photon number. This module
provides the two-mode squeezed source state, binomial loss channels,
autocorrelation functions and heralded (conditional) statistics.

All operations are pure functions on immutable value types and are safe for
unrestricted concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default tolerance on the truncated probability mass: every distribution
#: must carry total mass within this amount of 1 (or of its input's mass,
#: for loss channels).
DEFAULT_TRUNC_TOL = 1e-12


def _as_prob_vector(probs, trunc_tol: float) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("probs must be a 1-d vector with n_max >= 1")
    if np.any(arr < -trunc_tol) or np.any(arr > 1.0 + trunc_tol):
        raise ValueError("probabilities must lie in [0, 1]")
    total = float(arr.sum())
    if not (1.0 - trunc_tol <= total <= 1.0 + trunc_tol):
        raise ValueError(
            f"total probability mass {total!r} outside [1 - {trunc_tol}, 1]; "
            "increase n_max or loosen trunc_tol"
        )
    arr = np.clip(arr, 0.0, 1.0)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Probability per photon number n = 0..n_max in a single mode."""

    probs: np.ndarray
    trunc_tol: float = DEFAULT_TRUNC_TOL

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_prob_vector(self.probs, self.trunc_tol))

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def second_factorial_moment(self) -> float:
        """<n(n-1)> over the truncated distribution."""
        n = np.arange(self.probs.size)
        return float((n * (n - 1)) @ self.probs)


@dataclass(frozen=True, eq=False)
class JointNumberDistribution:
    """Joint probability over (n_idler, n_signal) photon-number pairs."""

    probs: np.ndarray
    trunc_tol: float = DEFAULT_TRUNC_TOL

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 2 or min(arr.shape) < 2:
            raise ValueError("joint probs must be a 2-d matrix with n_max >= 1 per mode")
        if np.any(arr < -self.trunc_tol) or np.any(arr > 1.0 + self.trunc_tol):
            raise ValueError("probabilities must lie in [0, 1]")
        total = float(arr.sum())
        if not (1.0 - self.trunc_tol <= total <= 1.0 + self.trunc_tol):
            raise ValueError(
                f"total joint mass {total!r} outside [1 - {self.trunc_tol}, 1]"
            )
        arr = np.clip(arr, 0.0, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def n_max_idler(self) -> int:
        return self.probs.shape[0] - 1

    @property
    def n_max_signal(self) -> int:
        return self.probs.shape[1] - 1

    def idler_marginal(self) -> PhotonNumberDistribution:
        return PhotonNumberDistribution(self.probs.sum(axis=1), self.trunc_tol)

    def signal_marginal(self) -> PhotonNumberDistribution:
        return PhotonNumberDistribution(self.probs.sum(axis=0), self.trunc_tol)


@dataclass(frozen=True)
class SourceParams:
    """Pair source parameterization: pair-creation slope and pump power.

    The derived pair parameter ``lam`` is the probability-like quantity that
    sets the geometric photon-number law of the source.
    """

    alpha: float  # pairs per mW
    pump_power: float  # mW

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.pump_power < 0:
            raise ValueError("pump_power must be nonnegative")
        if self.alpha * self.pump_power >= 1.0:
            raise ValueError("alpha * pump_power must be < 1 (unphysical pair parameter)")

    @property
    def lam(self) -> float:
        return lambda_from_pump(self.alpha, self.pump_power)


def lambda_from_pump(alpha: float, pump: float) -> float:
    """Pair parameter from the pump power, using the small-gain identification.

    For a weakly pumped downconversion source the per-window pair parameter is
    proportional to the pump power, ``lam = alpha * pump``.

    Raises:
        ValueError: if the product reaches 1 (no longer a valid pair parameter).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if pump < 0:
        raise ValueError("pump must be nonnegative")
    lam = alpha * pump
    if lam >= 1.0:
        raise ValueError(f"alpha * pump = {lam!r} >= 1 is unphysical")
    return lam


def tmss_joint(lam: float, n_max: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> JointNumberDistribution:
    """Joint photon-number law of a phase-averaged two-mode squeezed source.

    Photon numbers in the idler and signal modes are perfectly correlated:
    P(n, n) = (1 - lam) * lam**n and every off-diagonal entry is exactly 0.
    Each marginal is geometric (thermal) with mean lam / (1 - lam).
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    diag = geometric_distribution(lam, n_max, trunc_tol=trunc_tol).probs
    probs = np.zeros((n_max + 1, n_max + 1))
    np.fill_diagonal(probs, diag)
    return JointNumberDistribution(probs, trunc_tol)


def geometric_distribution(lam: float, n_max: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> PhotonNumberDistribution:
    """Thermal (geometric) single-mode law P(n) = (1 - lam) * lam**n, truncated."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    return PhotonNumberDistribution((1.0 - lam) * lam**n, trunc_tol)


def binomial_loss_matrix(eta: float, size: int) -> np.ndarray:
    """Matrix L with L[k, n] = C(n, k) eta^k (1 - eta)^(n - k).

    Applying ``L @ p`` sends a photon-number probability vector through a
    transmission-eta loss channel. Columns sum to 1 exactly, so the channel
    preserves total mass.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    # Pascal-triangle recursion keeps everything exact in float for small sizes.
    comb = np.zeros((size, size))
    comb[:, 0] = 1.0
    for n in range(1, size):
        comb[n, 1:] = comb[n - 1, 1:] + comb[n - 1, :-1]
    k = np.arange(size)
    with np.errstate(divide="ignore"):
        # eta^k (1-eta)^(n-k), lower-triangular in (k, n)
        mat = np.zeros((size, size))
        for n in range(size):
            kk = k[: n + 1]
            mat[: n + 1, n] = comb[n, : n + 1] * eta**kk * (1.0 - eta) ** (n - kk)
    return mat


def thin(dist: PhotonNumberDistribution, eta: float) -> PhotonNumberDistribution:
    """Binomial loss channel: each photon survives independently with probability eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    mat = binomial_loss_matrix(eta, dist.probs.size)
    return PhotonNumberDistribution(mat @ dist.probs, dist.trunc_tol)


def g2_zero(dist: PhotonNumberDistribution) -> float:
    """Zero-delay second-order autocorrelation <n(n-1)> / <n>^2.

    Equals 2 for thermal light, 1 for Poissonian light and 0 for a single
    photon. The vacuum state has no defined autocorrelation.
    """
    mean = dist.mean()
    if mean <= 0.0:
        raise ValueError("g2 undefined for vacuum (zero mean photon number)")
    return dist.second_factorial_moment() / mean**2


def threshold_click_probs(n: np.ndarray, efficiency: float, dark_prob: float) -> np.ndarray:
    """Click probability of a non-number-resolving detector seeing n photons.

    Dark counts enter as an independent Bernoulli event per detection window:
    P(click | n) = 1 - (1 - dark) * (1 - efficiency)**n.
    """
    return 1.0 - (1.0 - dark_prob) * (1.0 - efficiency) ** np.asarray(n)


def heralded_signal(
    joint: JointNumberDistribution,
    eta_idler: float,
    dark_idler: float = 0.0,
) -> tuple[PhotonNumberDistribution, float]:
    """Signal photon-number law conditioned on an idler detector click.

    The idler mode is monitored by a threshold detector with the given
    efficiency and per-window dark-count probability. Returns the normalized
    conditional signal distribution together with the herald probability.

    Raises:
        ValueError: if the herald probability is zero (no conditioning possible).
    """
    if not 0.0 <= eta_idler <= 1.0:
        raise ValueError("eta_idler must lie in [0, 1]")
    if not 0.0 <= dark_idler < 1.0:
        raise ValueError("dark_idler must lie in [0, 1)")
    n_i = np.arange(joint.probs.shape[0])
    click = threshold_click_probs(n_i, eta_idler, dark_idler)
    weighted = click[:, None] * joint.probs
    p_herald = float(weighted.sum())
    if p_herald <= 0.0:
        raise ValueError("herald probability is zero for these parameters")
    cond = weighted.sum(axis=0) / p_herald
    return PhotonNumberDistribution(cond, joint.trunc_tol), p_herald


def poisson_distribution(mean: float, n_max: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> PhotonNumberDistribution:
    """Truncated Poissonian law, used as a coherent-state benchmark."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    n = np.arange(n_max + 1)
    if mean == 0:
        probs = np.where(n == 0, 1.0, 0.0)
    else:
        log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, n_max + 1)))))
        probs = np.exp(-mean + n * np.log(mean) - log_fact)
    return PhotonNumberDistribution(probs, trunc_tol)
