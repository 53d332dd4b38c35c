"""Trial-level simulation of the full heralded-entanglement setup.

One trial is one coincidence window. Per trial the engine samples independent
early and late pair numbers from the geometric source law, heralds on a
threshold detection of the early idler mode, propagates the signal photons
through fiber coupling, the input split, per-arm storage or direct
transmission, recombination routing and threshold detection with dark counts.
The one-photon-per-arm component is routed through a quantum outcome table
built from the bunching coefficients (two photons meeting at the splitter
bunch); every other component routes classically, which is exact for photons
sharing a mode.

``expected_counts`` evaluates the identical model in closed form by
enumerating photon numbers on a truncated grid, so it serves as the analytic
cross-check for ``run_trials`` and vice versa.

Determinism contract: results are a pure function of (config, seed). Random
substreams are counter-based (Philox keyed by the seed, one counter block per
fixed-size chunk of trials), so the worker count never changes the output.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import optics
from .optics import BeamSplitterCoeffs, DetectorParams, MemoryParams, TwoPhotonDiagonal
from .photon_stats import SourceParams

#: Trials per RNG chunk. Chunk boundaries are fixed by this constant alone,
#: never by the worker count.
CHUNK_TRIALS = 1 << 15

#: Counter advance per chunk; generous upper bound on any chunk's consumption.
_CHUNK_STRIDE = 1 << 40

_WORKER_ENV = "HERALDSIM_THREADS"


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible random stream ``index`` for a given seed."""
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    bg = np.random.Philox(key=int(seed) & ((1 << 128) - 1))
    bg.advance(index * _CHUNK_STRIDE)
    return np.random.Generator(bg)


@dataclass(frozen=True)
class TrialConfig:
    """Full parameterization of one simulated configuration."""

    source: SourceParams
    memory_a: MemoryParams
    memory_b: MemoryParams
    heralding_efficiency: float  # signal-in-fiber (and residual optics) per photon
    bs: BeamSplitterCoeffs
    det1: DetectorParams
    det2: DetectorParams
    idler_det: DetectorParams
    phase_mode: str = "randomized"  # "randomized" or "fixed"
    phase: float = 0.0
    visibility: float = 1.0
    trials: int = 1
    seed: int = 0
    blocked_arm: str | None = None  # None, "A" or "B"
    n_max: int = 8  # photon-number truncation of the analytic path
    window_s: float = 10e-9  # coincidence window, informational

    def __post_init__(self):
        if not 0.0 <= self.heralding_efficiency <= 1.0:
            raise ValueError("heralding_efficiency must lie in [0, 1]")
        if self.phase_mode not in ("randomized", "fixed"):
            raise ValueError("phase_mode must be 'randomized' or 'fixed'")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.blocked_arm not in (None, "A", "B"):
            raise ValueError("blocked_arm must be None, 'A' or 'B'")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.window_s <= 0:
            raise ValueError("window_s must be positive")


@dataclass(frozen=True)
class CountRecord:
    """Herald and conditional detection counts from one campaign.

    ``run_trials`` fills integer counts; ``expected_counts`` fills real-valued
    expectations in the same fields.
    """

    n_heralds: float
    n1_given_h: float
    n2_given_h: float
    n12_given_h: float
    n_signal_singles: float
    n_idler_singles: float
    trials: int
    duration_equivalent: float  # seconds

    def __post_init__(self):
        tol = 1e-9 * max(1.0, self.trials)
        if not (
            self.n12_given_h <= min(self.n1_given_h, self.n2_given_h) + tol
            and max(self.n1_given_h, self.n2_given_h) <= self.n_heralds + tol
            and self.n_heralds <= self.trials + tol
        ):
            raise ValueError("count hierarchy violated: n12 <= min(n1, n2) <= N_H <= trials")
        for name in ("n_heralds", "n1_given_h", "n2_given_h", "n12_given_h",
                     "n_signal_singles", "n_idler_singles"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


# ---------------------------------------------------------------------------
# Shared trial model: per-photon path probabilities and the (1,1) outcome table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _TrialModel:
    lam: float
    # survival into the output temporal mode, per photon, by (arm, time bin)
    pa_early: float
    pb_early: float
    pa_late: float
    pb_late: float
    # recombination routing intensities per arm (pre-detector)
    route_a1: float
    route_a2: float
    route_b1: float
    route_b2: float
    # detectors
    eta1: float
    dark1: float
    eta2: float
    dark2: float
    eta_idler: float
    dark_idler: float
    # quantum outcome table for the one-photon-per-arm component
    table_probs: tuple[float, ...]
    table_m1: tuple[int, ...]
    table_m2: tuple[int, ...]
    # fixed-phase single-photon arrival probabilities by origin
    fixed_phase: bool
    arrive_early: tuple[float, float]
    arrive_late: tuple[float, float]


def _pair_outcome_table(bs: BeamSplitterCoeffs) -> tuple[tuple[float, ...], tuple[int, ...], tuple[int, ...]]:
    """Output photon-number table for one photon per input arm.

    The coincidence entry carries the bunching coefficient a11; the
    two-in-one-output entries and the single-survivor entries are single-path
    amplitudes, hence classical products. The measured intensities are not
    exactly unitary, so any residual probability is assigned to total loss.
    """
    a11, _, _ = optics.bunching_coefficients(bs)
    t20 = 2.0 * bs.at2 * bs.br2
    t02 = 2.0 * bs.ar2 * bs.bt2
    t10 = bs.at2 * bs.loss_b + bs.br2 * bs.loss_a
    t01 = bs.ar2 * bs.loss_b + bs.bt2 * bs.loss_a
    known = a11 + t20 + t02 + t10 + t01
    if known > 1.0 + 1e-9:
        raise ValueError("beamsplitter intensities give an over-complete pair outcome table")
    t00 = max(0.0, 1.0 - known)
    probs = (a11, t20, t02, t10, t01, t00)
    m1 = (1, 2, 0, 1, 0, 0)
    m2 = (1, 0, 2, 0, 1, 0)
    return probs, m1, m2


def _build_model(cfg: TrialConfig) -> _TrialModel:
    lam = cfg.source.lam
    h = cfg.heralding_efficiency
    split_a, split_b = cfg.bs.at2, cfg.bs.ar2  # input split on first pass
    block_a = cfg.blocked_arm == "A"
    block_b = cfg.blocked_arm == "B"
    pa_e = 0.0 if block_a else h * split_a * cfg.memory_a.eta_echo
    pb_e = 0.0 if block_b else h * split_b * cfg.memory_b.eta_echo
    pa_l = 0.0 if block_a else h * split_a * cfg.memory_a.eta_trans
    pb_l = 0.0 if block_b else h * split_b * cfg.memory_b.eta_trans

    table_probs, table_m1, table_m2 = _pair_outcome_table(cfg.bs)

    def _arrival(pa: float, pb: float) -> tuple[float, float]:
        q = pa + pb
        if q <= 0.0:
            return 0.0, 0.0
        rho1 = (pa * cfg.bs.at2 + pb * cfg.bs.br2) / q
        rho2 = (pa * cfg.bs.ar2 + pb * cfg.bs.bt2) / q
        coherent = pa > 0.0 and pb > 0.0
        vis = cfg.visibility if coherent else 0.0
        return optics.fringe_probabilities(cfg.phase, vis, 1.0, 2.0 * rho1, 2.0 * rho2)

    fixed = cfg.phase_mode == "fixed"
    return _TrialModel(
        lam=lam,
        pa_early=pa_e,
        pb_early=pb_e,
        pa_late=pa_l,
        pb_late=pb_l,
        route_a1=cfg.bs.at2,
        route_a2=cfg.bs.ar2,
        route_b1=cfg.bs.br2,
        route_b2=cfg.bs.bt2,
        eta1=cfg.det1.efficiency,
        dark1=cfg.det1.dark_prob,
        eta2=cfg.det2.efficiency,
        dark2=cfg.det2.dark_prob,
        eta_idler=cfg.idler_det.efficiency,
        dark_idler=cfg.idler_det.dark_prob,
        table_probs=table_probs,
        table_m1=table_m1,
        table_m2=table_m2,
        fixed_phase=fixed,
        arrive_early=_arrival(pa_e, pb_e) if fixed else (0.0, 0.0),
        arrive_late=_arrival(pa_l, pb_l) if fixed else (0.0, 0.0),
    )


# ---------------------------------------------------------------------------
# Analytic expectation engine
# ---------------------------------------------------------------------------


def _trinomials(n_max: int, pa: float, pb: float) -> list[np.ndarray]:
    """tri[n][i, j] = P(i photons survive via A, j via B | n photons)."""
    tri = [np.ones((1, 1))]
    rest = 1.0 - pa - pb
    for n in range(1, n_max + 1):
        prev = tri[-1]
        nxt = np.zeros((n + 1, n + 1))
        nxt[:n, :n] += prev * rest
        nxt[1:, :n] += prev * pa
        nxt[:n, 1:] += prev * pb
        tri.append(nxt)
    return tri


def _conv2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i in range(b.shape[0]):
        row = b[i]
        for j in range(b.shape[1]):
            v = row[j]
            if v != 0.0:
                out[i : i + a.shape[0], j : j + a.shape[1]] += v * a
    return out


@dataclass(frozen=True)
class _CellStats:
    p_herald: float
    cells_h: np.ndarray  # P(herald and kA, kB survivors)
    cells_u: np.ndarray  # P(kA, kB survivors)
    single_early_h: float  # P(herald and exactly one survivor, from the early bin)
    single_late_h: float
    single_early_u: float
    single_late_u: float


def _cell_statistics(cfg: TrialConfig, model: _TrialModel) -> _CellStats:
    n_max = cfg.n_max
    lam = model.lam
    n = np.arange(n_max + 1)
    geom = (1.0 - lam) * lam**n if lam > 0 else np.where(n == 0, 1.0, 0.0)
    mass = float(geom.sum())
    tol = 1e-12
    if mass < 1.0 - tol:
        raise ValueError(
            f"truncated source mass {mass!r} below 1 - {tol}; raise n_max for lam={lam!r}"
        )
    click_i = 1.0 - (1.0 - model.dark_idler) * (1.0 - model.eta_idler) ** n

    tri_e = _trinomials(n_max, model.pa_early, model.pb_early)
    tri_l = _trinomials(n_max, model.pa_late, model.pb_late)
    q_e = model.pa_early + model.pb_early
    q_l = model.pa_late + model.pb_late

    size = 2 * n_max + 1
    cells_h = np.zeros((size, size))
    cells_u = np.zeros((size, size))
    p_herald = float(geom @ click_i)
    se_h = sl_h = se_u = sl_u = 0.0

    for ne in range(n_max + 1):
        w_e = geom[ne]
        c_e = click_i[ne]
        none_e = (1.0 - q_e) ** ne
        one_e = ne * q_e * (1.0 - q_e) ** (ne - 1) if ne >= 1 else 0.0
        for nl in range(n_max + 1):
            w = w_e * geom[nl]
            if w == 0.0:
                continue
            joint = _conv2(tri_e[ne], tri_l[nl])
            s = joint.shape[0]
            cells_u[:s, :s] += w * joint
            cells_h[:s, :s] += (w * c_e) * joint
            none_l = (1.0 - q_l) ** nl
            one_l = nl * q_l * (1.0 - q_l) ** (nl - 1) if nl >= 1 else 0.0
            p_se = one_e * none_l
            p_sl = none_e * one_l
            se_u += w * p_se
            sl_u += w * p_sl
            se_h += w * c_e * p_se
            sl_h += w * c_e * p_sl

    return _CellStats(p_herald, cells_h, cells_u, se_h, sl_h, se_u, sl_u)


def _click_probability_grids(model: _TrialModel, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell click probabilities under classical routing, with the
    one-photon-per-arm cell replaced by the quantum outcome table."""
    ka, kb = np.indices((size, size))
    f_a1 = model.route_a1 * model.eta1
    f_a2 = model.route_a2 * model.eta2
    f_b1 = model.route_b1 * model.eta1
    f_b2 = model.route_b2 * model.eta2
    nc1 = (1.0 - model.dark1) * (1.0 - f_a1) ** ka * (1.0 - f_b1) ** kb
    nc2 = (1.0 - model.dark2) * (1.0 - f_a2) ** ka * (1.0 - f_b2) ** kb
    nc12 = (
        (1.0 - model.dark1)
        * (1.0 - model.dark2)
        * (1.0 - f_a1 - f_a2) ** ka
        * (1.0 - f_b1 - f_b2) ** kb
    )

    # quantum (1,1) cell
    tp = np.asarray(model.table_probs)
    m1 = np.asarray(model.table_m1)
    m2 = np.asarray(model.table_m2)
    nc1[1, 1] = (1.0 - model.dark1) * float(tp @ (1.0 - model.eta1) ** m1)
    nc2[1, 1] = (1.0 - model.dark2) * float(tp @ (1.0 - model.eta2) ** m2)
    nc12[1, 1] = (
        (1.0 - model.dark1)
        * (1.0 - model.dark2)
        * float(tp @ ((1.0 - model.eta1) ** m1 * (1.0 - model.eta2) ** m2))
    )

    p1 = 1.0 - nc1
    p2 = 1.0 - nc2
    p12 = 1.0 - nc1 - nc2 + nc12
    p_any = 1.0 - nc12
    return p1, p2, p12, p_any


def _single_photon_clicks(model: _TrialModel, arrive: tuple[float, float]) -> tuple[float, float, float, float]:
    a1, a2 = arrive
    nc1 = (1.0 - model.dark1) * (1.0 - a1 * model.eta1)
    nc2 = (1.0 - model.dark2) * (1.0 - a2 * model.eta2)
    nc12 = (1.0 - model.dark1) * (1.0 - model.dark2) * (1.0 - a1 * model.eta1 - a2 * model.eta2)
    return 1.0 - nc1, 1.0 - nc2, 1.0 - nc1 - nc2 + nc12, 1.0 - nc12


def expected_counts(cfg: TrialConfig) -> CountRecord:
    """Real-valued expected counts for the configuration, in closed form.

    Composes the source law, loss channels and recombination algebra on a
    truncated photon-number grid; enables campaigns at realistic rates without
    sampling billions of windows.
    """
    model = _build_model(cfg)
    stats = _cell_statistics(cfg, model)
    size = stats.cells_h.shape[0]
    p1, p2, p12, p_any = _click_probability_grids(model, size)

    cells_h = stats.cells_h
    cells_u = stats.cells_u
    if model.fixed_phase:
        # single-photon cells are routed through the fringe model instead
        mask = np.ones_like(cells_h)
        mask[1, 0] = mask[0, 1] = 0.0
        e1, e2, e12, e_any = _single_photon_clicks(model, model.arrive_early)
        l1, l2, l12, l_any = _single_photon_clicks(model, model.arrive_late)
        h1 = float((cells_h * p1 * mask).sum()) + stats.single_early_h * e1 + stats.single_late_h * l1
        h2 = float((cells_h * p2 * mask).sum()) + stats.single_early_h * e2 + stats.single_late_h * l2
        h12 = float((cells_h * p12 * mask).sum()) + stats.single_early_h * e12 + stats.single_late_h * l12
        u_any = float((cells_u * p_any * mask).sum()) + stats.single_early_u * e_any + stats.single_late_u * l_any
    else:
        h1 = float((cells_h * p1).sum())
        h2 = float((cells_h * p2).sum())
        h12 = float((cells_h * p12).sum())
        u_any = float((cells_u * p_any).sum())

    t = cfg.trials
    return CountRecord(
        n_heralds=t * stats.p_herald,
        n1_given_h=t * h1,
        n2_given_h=t * h2,
        n12_given_h=t * h12,
        n_signal_singles=t * u_any,
        n_idler_singles=t * stats.p_herald,
        trials=t,
        duration_equivalent=t * cfg.window_s,
    )


def conditional_two_photon(cfg: TrialConfig) -> TwoPhotonDiagonal:
    """Per-herald occupation probabilities of the diagonal two-photon state."""
    model = _build_model(cfg)
    stats = _cell_statistics(cfg, model)
    if stats.p_herald <= 0.0:
        raise ValueError("no heralds expected for this configuration")
    return TwoPhotonDiagonal(
        q11=float(stats.cells_h[1, 1]) / stats.p_herald,
        q20=float(stats.cells_h[2, 0]) / stats.p_herald,
        q02=float(stats.cells_h[0, 2]) / stats.p_herald,
    )


# ---------------------------------------------------------------------------
# Sampling engine
# ---------------------------------------------------------------------------


def _sample_geometric(u: np.ndarray, lam: float) -> np.ndarray:
    if lam <= 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    return np.floor(np.log1p(-u) / math.log(lam)).astype(np.int64)


def _scatter_fates(
    rng: np.random.Generator,
    counts: np.ndarray,
    pa: float,
    pb: float,
    n_trials: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-photon survival draws; returns per-trial survivor counts and the
    owner/arm arrays of the surviving photons (arm True means arm B)."""
    owners = np.repeat(np.arange(n_trials), counts)
    u = rng.random(owners.size)
    to_a = u < pa
    to_b = (~to_a) & (u < pa + pb)
    k_a = np.bincount(owners[to_a], minlength=n_trials)
    k_b = np.bincount(owners[to_b], minlength=n_trials)
    surv = to_a | to_b
    return k_a, k_b, owners[surv], to_b[surv]


def _run_chunk(cfg: TrialConfig, model: _TrialModel, chunk_index: int, size: int) -> np.ndarray:
    rng = substream(cfg.seed, chunk_index)
    idx = np.arange(size)

    n_e = _sample_geometric(rng.random(size), model.lam)
    n_l = _sample_geometric(rng.random(size), model.lam)
    herald = rng.random(size) < (
        1.0 - (1.0 - model.dark_idler) * (1.0 - model.eta_idler) ** n_e
    )

    ka_e, kb_e, own_e, arm_e = _scatter_fates(rng, n_e, model.pa_early, model.pb_early, size)
    ka_l, kb_l, own_l, arm_l = _scatter_fates(rng, n_l, model.pa_late, model.pb_late, size)
    k_a = ka_e + ka_l
    k_b = kb_e + kb_l
    k_tot = k_a + k_b

    quantum = (k_a == 1) & (k_b == 1)
    fringe = np.zeros(size, dtype=bool)
    if model.fixed_phase:
        fringe = k_tot == 1
    special = quantum | fringe

    m1 = np.zeros(size, dtype=np.int64)
    m2 = np.zeros(size, dtype=np.int64)

    # classical routing of survivors in non-special trials, arm A then arm B
    owners = np.concatenate((own_e, own_l))
    arms = np.concatenate((arm_e, arm_l))
    keep = ~special[owners]
    owners, arms = owners[keep], arms[keep]
    for arm_is_b, r1, r2 in ((False, model.route_a1, model.route_a2),
                             (True, model.route_b1, model.route_b2)):
        sel = owners[arms == arm_is_b]
        u = rng.random(sel.size)
        m1 += np.bincount(sel[u < r1], minlength=size)
        m2 += np.bincount(sel[(u >= r1) & (u < r1 + r2)], minlength=size)

    # quantum (1,1) trials draw from the pair outcome table
    q_idx = idx[quantum]
    u = rng.random(q_idx.size)
    cum = np.cumsum(model.table_probs)
    cum[-1] = max(cum[-1], 1.0)
    outcome = np.searchsorted(cum, u, side="right")
    m1[q_idx] = np.asarray(model.table_m1)[outcome]
    m2[q_idx] = np.asarray(model.table_m2)[outcome]

    # fixed-phase single photons interfere; arrival probabilities by origin
    f_idx = idx[fringe]
    early = ((ka_e + kb_e) == 1)[f_idx]
    a1 = np.where(early, model.arrive_early[0], model.arrive_late[0])
    a2 = np.where(early, model.arrive_early[1], model.arrive_late[1])
    u = rng.random(f_idx.size)
    hit1 = u < a1
    hit2 = (~hit1) & (u < a1 + a2)
    m1[f_idx] += hit1
    m2[f_idx] += hit2

    click1 = rng.random(size) < (1.0 - (1.0 - model.dark1) * (1.0 - model.eta1) ** m1)
    click2 = rng.random(size) < (1.0 - (1.0 - model.dark2) * (1.0 - model.eta2) ** m2)

    return np.array(
        [
            herald.sum(),
            (herald & click1).sum(),
            (herald & click2).sum(),
            (herald & click1 & click2).sum(),
            (click1 | click2).sum(),
            herald.sum(),
        ],
        dtype=np.int64,
    )


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(_WORKER_ENV)
        if env is not None:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ValueError(f"{_WORKER_ENV} must be an integer") from exc
        else:
            workers = 1
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers


def run_trials(cfg: TrialConfig, workers: int | None = None) -> CountRecord:
    """Sample the configured number of trials and tally a CountRecord.

    The result is bit-identical for a given (cfg, seed) regardless of
    ``workers`` (or the HERALDSIM_THREADS environment variable), because every
    fixed-size chunk of trials owns a dedicated counter-based substream.
    """
    model = _build_model(cfg)
    n_chunks = (cfg.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    sizes = [
        min(CHUNK_TRIALS, cfg.trials - i * CHUNK_TRIALS) for i in range(n_chunks)
    ]
    workers = _resolve_workers(workers)

    totals = np.zeros(6, dtype=np.int64)
    if workers == 1 or n_chunks == 1:
        for i, s in enumerate(sizes):
            totals += _run_chunk(cfg, model, i, s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(
                _run_chunk, [cfg] * n_chunks, [model] * n_chunks, range(n_chunks), sizes
            ):
                totals += part

    return CountRecord(
        n_heralds=int(totals[0]),
        n1_given_h=int(totals[1]),
        n2_given_h=int(totals[2]),
        n12_given_h=int(totals[3]),
        n_signal_singles=int(totals[4]),
        n_idler_singles=int(totals[5]),
        trials=cfg.trials,
        duration_equivalent=cfg.trials * cfg.window_s,
    )


def with_blocked_arm(cfg: TrialConfig, arm: str | None) -> TrialConfig:
    """Copy of the configuration with the given arm blocked (or unblocked)."""
    return replace(cfg, blocked_arm=arm)
