"""heraldsim: simulation and estimation toolkit for heralded single-photon
entanglement between two optical quantum memories."""

from .photon_stats import (
    JointNumberDistribution,
    PhotonNumberDistribution,
    SourceParams,
    g2_zero,
    geometric_distribution,
    heralded_signal,
    lambda_from_pump,
    poisson_distribution,
    thin,
    tmss_joint,
)
from .optics import (
    BeamSplitterCoeffs,
    DetectorParams,
    MemoryParams,
    TwoPhotonDiagonal,
    bunching_coefficients,
    effective_bunching_weight,
    effective_efficiencies,
    fringe_probabilities,
    gsi_model,
    memory_moments,
    p11_theory,
    q_from_q11,
    recombined_p11,
)
from .montecarlo import (
    CountRecord,
    TrialConfig,
    conditional_two_photon,
    expected_counts,
    run_trials,
    substream,
)
from .estimators import (
    ConcurrenceEstimate,
    FringeFit,
    Measured,
    ProbabilityTable,
    ThreefoldEstimate,
    concurrence_bound,
    fit_visibility,
    gsi_from_counts,
    p11_xcorr,
    posterior_density,
    probabilities_from_counts,
    simple_concurrence,
    threefold_estimate,
)
from .experiment import (
    ExperimentConfig,
    FringeScan,
    ReferenceRow,
    SweepRow,
    ThreefoldCampaign,
    TransmissionBudget,
    fringe_scan,
    gsi_model_band,
    measured_gsi,
    pump_sweep,
    threefold_campaign,
    transmission_budget,
    trial_config,
)
from . import presets

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
