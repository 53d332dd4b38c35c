"""Linear-optics elements and their closed-form predictions.

Covers the photon-echo memory modeled as a ladder of beamsplitters (storage,
decoherence, re-emission), the resulting signal-idler cross-correlation, and
the algebra of recombining the two retrieved modes on a lossy beamsplitter:
bunching coefficients, occupation-probability relations and the effective
detection efficiencies used to convert a measured coincidence rate into the
separately-measured-arms convention.

The beamsplitter is characterized by measured intensity coefficients. Those
coefficients do not satisfy lossless unitarity exactly, so this module stores
intensities and evaluates the closed forms directly with nonnegative square
roots; the single relative sign required by unitarity is already absorbed in
the a11 expression. No amplitude-level rederivation is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MemoryParams:
    """Storage-and-retrieval efficiency and residual direct transmission."""

    eta_echo: float
    eta_trans: float

    def __post_init__(self):
        if not 0.0 <= self.eta_echo <= 1.0:
            raise ValueError("eta_echo must lie in [0, 1]")
        if not 0.0 <= self.eta_trans <= 1.0:
            raise ValueError("eta_trans must lie in [0, 1]")
        if self.eta_echo + self.eta_trans > 1.0 + 1e-12:
            raise ValueError("eta_echo + eta_trans must not exceed 1")

    @property
    def ratio(self) -> float:
        """eta_trans / eta_echo; requires a storing memory (eta_echo > 0)."""
        if self.eta_echo <= 0.0:
            raise ValueError("ratio undefined for eta_echo = 0")
        return self.eta_trans / self.eta_echo


@dataclass(frozen=True)
class BeamSplitterCoeffs:
    """Measured intensity coefficients of a lossy beamsplitter.

    ``at2``/``ar2`` are the transmission/reflection intensities for light
    entering on side a, ``bt2``/``br2`` for side b. The residual
    ``1 - at2 - ar2`` (and likewise for b) is loss. By convention
    ``T = at2`` and ``R = br2``.
    """

    at2: float
    ar2: float
    bt2: float
    br2: float

    def __post_init__(self):
        for name in ("at2", "ar2", "bt2", "br2"):
            v = getattr(self, name)
            if not 0.0 < v <= 0.5:
                raise ValueError(f"{name} must lie in (0, 1/2], got {v!r}")
        if self.at2 + self.ar2 > 1.0:
            raise ValueError("at2 + ar2 must not exceed 1")
        if self.bt2 + self.br2 > 1.0:
            raise ValueError("bt2 + br2 must not exceed 1")

    @property
    def transmission(self) -> float:
        return self.at2

    @property
    def reflection(self) -> float:
        return self.br2

    @property
    def loss_a(self) -> float:
        return 1.0 - self.at2 - self.ar2

    @property
    def loss_b(self) -> float:
        return 1.0 - self.bt2 - self.br2


@dataclass(frozen=True)
class DetectorParams:
    """Threshold detector: efficiency plus dark-count probability per window."""

    efficiency: float
    dark_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_prob <= 1.0:
            raise ValueError("dark_prob must lie in [0, 1]")


@dataclass(frozen=True)
class TwoPhotonDiagonal:
    """Diagonal two-photon occupation probabilities per heralding signal.

    q11: one photon retrieved from each arm; q20 (q02): two photons from
    arm A (arm B) and none from the other.
    """

    q11: float
    q20: float
    q02: float

    def __post_init__(self):
        for name in ("q11", "q20", "q02"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.q11 + self.q20 + self.q02 > 1.0 + 1e-12:
            raise ValueError("two-photon occupation probabilities must sum to at most 1")


def memory_moments(r: float, mem: MemoryParams) -> tuple[float, float, float]:
    """Second-order moments of the retrieved signal and the idler mode.

    For squeezing parameter r and a memory that stores with efficiency
    eta_echo while transmitting the late time bin with eta_trans:

        <n_s>      = (eta_trans + eta_echo) sinh^2 r
        <n_i>      = sinh^2 r
        <n_i n_s>  = sinh^2 r (sinh^2 r (eta_trans + eta_echo)
                               + cosh^2 r eta_echo)

    Returns (mean_signal, mean_idler, cross_moment).
    """
    if r < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    sh2 = math.sinh(r) ** 2
    ch2 = math.cosh(r) ** 2
    mean_signal = (mem.eta_trans + mem.eta_echo) * sh2
    mean_idler = sh2
    cross = sh2 * (sh2 * (mem.eta_trans + mem.eta_echo) + ch2 * mem.eta_echo)
    return mean_signal, mean_idler, cross


def gsi_model(lam: float, ratio: float, eta_dark: float = 0.0, p_c: float = 0.0) -> float:
    """Model signal-idler cross-correlation including memory noise and dark counts.

        g = 1 + 1 / (lam * (1 + ratio) + eta_dark / p_c)

    where ratio = eta_trans / eta_echo and p_c is the conditional probability
    of detecting the retrieved signal photon. Returns +inf when the noise
    denominator is exactly zero (ideal single-pair limit).
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if ratio < 0:
        raise ValueError("ratio must be nonnegative")
    if eta_dark < 0:
        raise ValueError("eta_dark must be nonnegative")
    dark_term = 0.0
    if eta_dark > 0:
        if p_c <= 0:
            raise ValueError("p_c must be positive when eta_dark > 0")
        dark_term = eta_dark / p_c
    denom = lam * (1.0 + ratio) + dark_term
    if denom == 0.0:
        return math.inf
    return 1.0 + 1.0 / denom


def p11_theory(
    p10: float,
    p01: float,
    alpha: float,
    pump: float,
    ratio: float,
    eta_dark: float = 0.0,
    p_c: float = 0.0,
) -> float:
    """Model prediction for the threefold coincidence probability.

        p11_th = 4 p10 p01 [alpha * pump * (1 + ratio / 2) + eta_dark / p_c]

    The late time bin enters here with the prefactor one half, so this value
    is a strict lower bound on what the cross-correlation method returns
    whenever ratio > 0.
    """
    for name, v in (("p10", p10), ("p01", p01)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if ratio < 0:
        raise ValueError("ratio must be nonnegative")
    lam = alpha * pump
    if not 0.0 <= lam < 1.0:
        raise ValueError("alpha * pump must lie in [0, 1)")
    dark_term = 0.0
    if eta_dark > 0:
        if p_c <= 0:
            raise ValueError("p_c must be positive when eta_dark > 0")
        dark_term = eta_dark / p_c
    return 4.0 * p10 * p01 * (lam * (1.0 + 0.5 * ratio) + dark_term)


def bunching_coefficients(bs: BeamSplitterCoeffs) -> tuple[float, float, float]:
    """Coincidence weights (a11, a20, a02) of the recombining beamsplitter.

        a11 = br2 * (sqrt(ar2) - bt2 / sqrt(ar2))^2
        a20 = 2 * at2 * ar2
        a02 = 2 * bt2 * br2

    a11 weighs the one-photon-per-arm component and vanishes for a lossless
    symmetric splitter (two-photon bunching); a20 and a02 weigh the
    two-photons-in-one-arm components.
    """
    if bs.ar2 <= 0:
        raise ValueError("ar2 must be positive (a11 divides by sqrt(ar2))")
    # (sqrt(ar2) - bt2 / sqrt(ar2))^2 written cancellation-free, so a
    # lossless symmetric splitter gives exactly zero
    a11 = bs.br2 * (bs.ar2 - bs.bt2) ** 2 / bs.ar2
    a20 = 2.0 * bs.at2 * bs.ar2
    a02 = 2.0 * bs.bt2 * bs.br2
    return a11, a20, a02


def q_from_q11(q11: float, reflection: float, transmission: float) -> tuple[float, float]:
    """Two-in-one-arm occupations implied by the one-per-arm occupation.

        q20 = q11 * R / (2 T),   q02 = q11 * T / (2 R)

    valid because the same pair-creation event feeds both arms through the
    same splitter. Their product always satisfies q20 * q02 = q11^2 / 4.
    """
    if q11 < 0:
        raise ValueError("q11 must be nonnegative")
    if reflection <= 0 or transmission <= 0:
        raise ValueError("R and T must be positive")
    return q11 * reflection / (2.0 * transmission), q11 * transmission / (2.0 * reflection)


def recombined_p11(
    q: TwoPhotonDiagonal,
    bs: BeamSplitterCoeffs,
    det1: DetectorParams,
    det2: DetectorParams,
) -> float:
    """Coincidence probability per herald after recombining the two arms.

        p11_bar = (a11 q11 + a20 q20 + a02 q02) * eta1 * eta2
    """
    a11, a20, a02 = bunching_coefficients(bs)
    return (a11 * q.q11 + a20 * q.q20 + a02 * q.q02) * det1.efficiency * det2.efficiency


def effective_bunching_weight(bs: BeamSplitterCoeffs) -> float:
    """Exact coincidence weight per unit q11 of the recombined state.

    With q20 and q02 tied to q11 through ``q_from_q11``, the coincidence
    probability is ``weight * q11 * eta1 * eta2`` where

        weight = a11 + a20 * R/(2T) + a02 * T/(2R).

    For a lossless symmetric splitter this equals 1/2.
    """
    a11, a20, a02 = bunching_coefficients(bs)
    r_over, t_over = q_from_q11(1.0, bs.reflection, bs.transmission)
    return a11 + a20 * r_over + a02 * t_over


def effective_efficiencies(
    bs: BeamSplitterCoeffs,
    det1: DetectorParams,
    det2: DetectorParams,
    bunching_weight: float | None = None,
) -> tuple[float, float, float]:
    """Effective per-arm detection efficiencies and the convention correction.

    Measuring one arm at a time through the recombining splitter amounts to
    using effective detectors of efficiency

        eta_A = at2 * eta1 + ar2 * eta2
        eta_B = br2 * eta1 + bt2 * eta2.

    The returned correction converts the measured recombined coincidence
    probability into the convention in which both arms are measured
    simultaneously and separately (target value q11 * eta_A * eta_B):

        correction = eta_A * eta_B / (weight * eta1 * eta2)

    where ``weight`` defaults to the exact value from
    ``effective_bunching_weight``. Passing ``bunching_weight=0.4`` reproduces
    the rounded-weight convention in which the correction evaluates to 2.27
    for the reference splitter with eta1 = eta2 / 2.
    """
    eta1, eta2 = det1.efficiency, det2.efficiency
    if eta1 <= 0 or eta2 <= 0:
        raise ValueError("detector efficiencies must be positive")
    eta_a = bs.at2 * eta1 + bs.ar2 * eta2
    eta_b = bs.br2 * eta1 + bs.bt2 * eta2
    weight = effective_bunching_weight(bs) if bunching_weight is None else bunching_weight
    if weight <= 0:
        raise ValueError("bunching weight must be positive")
    correction = eta_a * eta_b / (weight * eta1 * eta2)
    return eta_a, eta_b, correction


def fringe_probabilities(
    phase: float,
    visibility: float,
    p_det: float,
    amp1: float = 1.0,
    amp2: float = 1.0,
) -> tuple[float, float]:
    """Single-photon detection probabilities behind the recombining splitter.

    The two outputs show complementary fringes,

        P_k = amp_k * p_det * (1 + (-1)^k V cos(phase)) / 2,  k = 1, 2.

    Differing amplitudes model non-uniform loss after recombination. The
    visibility is an input coherence parameter; no decoherence mechanism is
    modeled here.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    if not 0.0 <= p_det <= 1.0:
        raise ValueError("p_det must lie in [0, 1]")
    if amp1 < 0 or amp2 < 0:
        raise ValueError("amplitudes must be nonnegative")
    mod = visibility * math.cos(phase)
    p1 = amp1 * p_det * (1.0 - mod) / 2.0
    p2 = amp2 * p_det * (1.0 + mod) / 2.0
    return p1, p2
