"""Ready-made configurations.

``paper``: the reference setup (measured beamsplitter, 15% memories,
ratio 2.936, stage transmissions giving a few 1e-4 detection probability per
herald). Event rates at this scale need the analytic expectation path.

``desk``: a boosted-efficiency variant whose rates make 3-sigma Monte Carlo
checks feasible within about 1e7 trials.

``threefold``: the paper setup rescaled so the open-configuration detection
sum reproduces the long campaign's p10 + p01.
"""

from __future__ import annotations

from dataclasses import replace

from . import montecarlo
from .experiment import (
    ExperimentConfig,
    REFERENCE_BEAMSPLITTER,
    REFERENCE_PSUM,
    REFERENCE_STAGES,
    trial_config,
)
from .optics import BeamSplitterCoeffs, DetectorParams, MemoryParams


def stage_heralding_efficiency(
    stages=REFERENCE_STAGES, bs: BeamSplitterCoeffs = REFERENCE_BEAMSPLITTER
) -> float:
    """Pre-interferometer thinning implied by the stage budget.

    The fiber and interferometer stages, minus the part of the interferometer
    loss already carried by the beamsplitter intensities on the two passes,
    are folded into one per-photon factor.
    """
    route = bs.at2 * (bs.at2 + bs.ar2) + bs.ar2 * (bs.br2 + bs.bt2)
    return stages["fiber"] * stages["interferometer"] / route


def paper_experiment(**overrides) -> ExperimentConfig:
    """Reference setup; analytic mode by default."""
    cfg = ExperimentConfig(heralding_efficiency=stage_heralding_efficiency())
    return replace(cfg, **overrides) if overrides else cfg


def threefold_experiment(**overrides) -> ExperimentConfig:
    """Reference setup recalibrated to the threefold campaign's p10 + p01."""
    cfg = paper_experiment(pump_powers=(16,))
    target = REFERENCE_PSUM.value
    for _ in range(2):
        rec = montecarlo.expected_counts(trial_config(cfg, 16, trials=10**6))
        current = (rec.n1_given_h + rec.n2_given_h) / rec.n_heralds
        cfg = replace(
            cfg, heralding_efficiency=cfg.heralding_efficiency * target / current
        )
    return replace(cfg, **overrides) if overrides else cfg


def desk_experiment(**overrides) -> ExperimentConfig:
    """Boosted-efficiency setup for Monte Carlo cross-checks."""
    cfg = ExperimentConfig(
        alpha=3e-3,
        pump_powers=(10,),
        memory_a=MemoryParams(0.3, 0.3),
        memory_b=MemoryParams(0.3, 0.3),
        det1=DetectorParams(0.5, 0.0),
        det2=DetectorParams(0.5, 0.0),
        idler_det=DetectorParams(0.5, 0.0),
        heralding_efficiency=1.0,
        trials=2_000_000,
        seed=11,
        mode="mc",
        correction=None,  # exact convention factor for this splitter
    )
    return replace(cfg, **overrides) if overrides else cfg


PRESETS = {
    "paper": paper_experiment,
    "desk": desk_experiment,
    "threefold": threefold_experiment,
}
