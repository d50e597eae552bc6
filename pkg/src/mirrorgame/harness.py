"""Batch experimentation: synthetic leaders, dyad runs, benchmark matching.

Human-subject recordings are out of reach at desk scale, so the harness
builds synthetic material instead: figure-eight leaders with analytic
velocities (and, through inverse dynamics, an exact expected input), a
lagged copy of the leader standing in for the second human of a benchmark
pair, and seeded per-trial variability (phase offset and amplitude jitter,
because humans never repeat a trial exactly).

Aggregation mirrors the benchmark-matching protocol: per-dyad mean and
standard deviation of the three indexes for the benchmark pair and for
each control strategy, error rates of strategy means against benchmark
means, per-strategy mean error rates, and radar-polygon areas.

Trials are independent of each other; the runner executes them
sequentially so a single seed reproduces runs bit for bit, and all
aggregation is a deterministic reduction over completed trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import hkb, metrics
from .controllers import (
    FeatureSignal,
    IlcGains,
    OnlineConfig,
    OnlineController,
    OpcWeights,
    TABLE1_PRESETS,
    optimal_tracking_baseline,
    pd_control,
)
from .errors import ConfigError, DivergenceError, MirrorGameError
from .kvconfig import parse_kv_text
from .sigproc import load_csv, resample
from .trajectory import Trajectory, n_samples

__all__ = [
    "LeaderSpec", "DyadConfig", "TrialStats", "DyadResult",
    "synth_leader", "realizable_leader", "lagged_follower",
    "run_dyad", "run_benchmark_pair", "compute_error_rates", "summarize_rates",
    "matching_report", "parse_dyad_config", "MatchingReport",
]

METRIC_NAMES = ("rmse", "cv", "svm")


@dataclass(frozen=True)
class LeaderSpec:
    """Scripted leader: a figure-eight or a recorded file."""

    pattern: str = "lemniscate"
    amplitude_x: float = 0.5
    amplitude_y: float = 0.3
    freq: float = 0.25
    center: tuple = (0.0, 0.0)
    t_ramp: float = 0.0
    path: str | None = None

    def __post_init__(self):
        if self.pattern not in ("lemniscate", "recorded"):
            raise ConfigError(f"unknown pattern {self.pattern!r}")
        if self.pattern == "lemniscate":
            if self.amplitude_x <= 0 or self.amplitude_y <= 0:
                raise ConfigError("lemniscate amplitudes must be positive")
            if self.freq <= 0:
                raise ConfigError(f"freq must be positive, got {self.freq}")
        if self.t_ramp < 0:
            raise ConfigError(f"t_ramp must be >= 0, got {self.t_ramp}")


def _lemniscate_arrays(spec: LeaderSpec, t: np.ndarray, phase: float = 0.0,
                       amp_scale=(1.0, 1.0)):
    """Positions, velocities, accelerations of the (optionally ramped) curve."""
    w1 = 2.0 * np.pi * spec.freq
    w2 = 2.0 * w1
    tau = t + phase / w1  # phase offset realized as a time shift
    if spec.t_ramp > 0:
        tr = spec.t_ramp
        r = np.where(t < tr, np.sin(np.pi * t / (2 * tr)) ** 2, 1.0)
        rd = np.where(t < tr, (np.pi / (2 * tr)) * np.sin(np.pi * t / tr), 0.0)
        rdd = np.where(t < tr, (np.pi ** 2 / (2 * tr ** 2)) * np.cos(np.pi * t / tr), 0.0)
    else:
        r, rd, rdd = np.ones_like(t), np.zeros_like(t), np.zeros_like(t)
    pos = np.empty((len(t), 2))
    vel = np.empty((len(t), 2))
    acc = np.empty((len(t), 2))
    amps = (spec.amplitude_x * amp_scale[0], spec.amplitude_y * amp_scale[1])
    for col, (A, w) in enumerate(zip(amps, (w1, w2))):
        p = A * np.sin(w * tau)
        v = A * w * np.cos(w * tau)
        a = -A * w * w * np.sin(w * tau)
        pos[:, col] = spec.center[col] + r * p
        vel[:, col] = rd * p + r * v
        acc[:, col] = rdd * p + 2 * rd * v + r * a
    return pos, vel, acc


def synth_leader(spec: LeaderSpec, T: float, dt: float, phase: float = 0.0,
                 amp_scale=(1.0, 1.0)) -> Trajectory:
    """Sampled leader trajectory with analytic velocities."""
    if spec.pattern == "recorded":
        if spec.path is None:
            raise ConfigError("recorded pattern needs a path")
        rec = load_csv(spec.path)
        rec = resample(rec, dt)
        n = min(len(rec), n_samples(T, dt))
        return Trajectory(dt=dt, t0=rec.t0, pos=rec.pos[:n], vel=rec.vel[:n])
    t = np.arange(n_samples(T, dt)) * dt
    pos, vel, _ = _lemniscate_arrays(spec, t, phase, amp_scale)
    return Trajectory(dt=dt, pos=pos, vel=vel)


def realizable_leader(spec: LeaderSpec, xi: hkb.HkbParams, T: float, dt: float,
                      phase: float = 0.0, amp_scale=(1.0, 1.0)):
    """Leader plus the exact model input u_h that reproduces it.

    Only defined for the analytic pattern; recorded files have no exact
    acceleration.  With t_ramp > 0 the initial state is exactly zero.
    """
    if spec.pattern != "lemniscate":
        raise ConfigError("realizable leaders need the analytic pattern")
    t = np.arange(n_samples(T, dt)) * dt
    pos, vel, acc = _lemniscate_arrays(spec, t, phase, amp_scale)
    u_h = hkb.inverse_dynamics(pos, vel, acc, xi)
    return Trajectory(dt=dt, pos=pos, vel=vel), u_h


def lagged_follower(spec: LeaderSpec, T: float, dt: float, lag: float,
                    phase: float = 0.0, amp_scale=(1.0, 1.0)) -> Trajectory:
    """Second synthetic player: the leader's curve delayed by `lag` seconds."""
    if lag < 0:
        raise ConfigError(f"lag must be >= 0, got {lag}")
    t = np.arange(n_samples(T, dt)) * dt
    pos, vel, _ = _lemniscate_arrays(spec, np.maximum(t - lag, 0.0), phase, amp_scale)
    return Trajectory(dt=dt, pos=pos, vel=vel)


@dataclass(frozen=True)
class DyadConfig:
    """One played pair: gains, strategy, leader, trial protocol, seed."""

    id: str = "dyad1"
    gains: IlcGains = field(default_factory=lambda: TABLE1_PRESETS["dyad1"])
    controller: str = "ilc"
    leader: LeaderSpec = field(default_factory=LeaderSpec)
    solo: Trajectory | None = None
    trials: int = 5
    trial_T: float = 30.0
    dt: float = 0.02
    seed: int = 0
    lag: float = 0.25  # benchmark follower delay
    eps_th: float = 0.05
    max_inner_iters: int = 10

    def __post_init__(self):
        if self.controller not in ("ilc", "pdc", "opc"):
            raise ConfigError(f"unknown controller {self.controller!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.trial_T <= 0:
            raise ConfigError(f"trial_T must be positive, got {self.trial_T}")


@dataclass
class TrialStats:
    """Two-pass mean and std of each metric over the successful trials."""

    mean: dict
    std: dict
    attempted: int
    succeeded: int
    failed: int


@dataclass
class DyadResult:
    config: DyadConfig
    stats: TrialStats
    reports: list
    leaders: list
    followers: list


def _mean_std(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    m = float(values.mean())
    if len(values) < 2:
        return m, 0.0
    return m, float(np.sqrt(np.mean((values - m) ** 2)))


def _aggregate(reports) -> TrialStats:
    mean, std = {}, {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports]
        vals = [v for v in vals if not math.isnan(v)]
        if vals:
            mean[name], std[name] = _mean_std(vals)
        else:
            mean[name], std[name] = float("nan"), 0.0
    return TrialStats(mean=mean, std=std, attempted=0, succeeded=0, failed=0)


def _trial_draws(rng: np.random.Generator):
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp_scale = tuple(rng.uniform(0.95, 1.05, size=2))
    return phase, amp_scale


def _play_follower(cfg: DyadConfig, xi: hkb.HkbParams,
                   leader: Trajectory) -> Trajectory:
    """Run the configured strategy against a leader stream, tick by tick."""
    dt = leader.dt
    n = len(leader)
    x0 = leader.states()[0]
    states = np.empty((n, 4))
    states[0] = x0
    if cfg.controller == "ilc":
        ctl = OnlineController(
            xi, cfg.gains,
            OnlineConfig(eps_th=cfg.eps_th, T=cfg.trial_T,
                         max_inner_iters=cfg.max_inner_iters),
            x0=x0)
        feature = (FeatureSignal(cfg.solo).on_grid(dt, n)
                   if cfg.solo is not None and cfg.gains.ks != 0.0 else None)
        for j in range(n - 1):
            fv = feature[j] if feature is not None else None
            ctl.step(dt, leader.pos[j], leader.vel[j], feature_val=fv)
            states[j + 1] = ctl.x
    elif cfg.controller == "pdc":
        x = x0.copy()
        for j in range(n - 1):
            e = leader.pos[j] - x[[0, 2]]
            ed = leader.vel[j] - x[[1, 3]]
            u = pd_control(e, ed, cfg.gains)
            x = hkb.step(x, xi, u, dt)
            states[j + 1] = x
    else:  # opc
        weights = OpcWeights()
        x = x0.copy()
        for j in range(n - 1):
            ref = leader.pos[j + 1:j + 1 + weights.horizon]
            u = optimal_tracking_baseline(xi, x, ref, weights, dt)
            x = hkb.step(x, xi, u, dt)
            states[j + 1] = x
    return Trajectory.from_states(states, dt=dt)


def run_dyad(cfg: DyadConfig, xi: hkb.HkbParams = hkb.DEFAULT_PARAMS) -> DyadResult:
    """Play `trials` seeded trials of the configured strategy against the leader."""
    rng = np.random.default_rng(cfg.seed)
    reports, leaders, followers = [], [], []
    failed = 0
    for _ in range(cfg.trials):
        phase, amp_scale = _trial_draws(rng)
        leader = synth_leader(cfg.leader, cfg.trial_T, cfg.dt, phase, amp_scale)
        try:
            follower = _play_follower(cfg, xi, leader)
        except (DivergenceError, MirrorGameError):
            failed += 1
            continue
        leaders.append(leader)
        followers.append(follower)
        reports.append(metrics.report(leader, follower))
    stats = _aggregate(reports)
    stats.attempted = cfg.trials
    stats.succeeded = cfg.trials - failed
    stats.failed = failed
    return DyadResult(config=cfg, stats=stats, reports=reports,
                      leaders=leaders, followers=followers)


def run_benchmark_pair(cfg: DyadConfig, trials: int = 3) -> DyadResult:
    """Synthetic two-player benchmark: the leader and its lagged copy."""
    rng = np.random.default_rng(cfg.seed + 1)
    reports, leaders, followers = [], [], []
    for _ in range(trials):
        phase, amp_scale = _trial_draws(rng)
        leader = synth_leader(cfg.leader, cfg.trial_T, cfg.dt, phase, amp_scale)
        follower = lagged_follower(cfg.leader, cfg.trial_T, cfg.dt, cfg.lag,
                                   phase, amp_scale)
        leaders.append(leader)
        followers.append(follower)
        reports.append(metrics.report(leader, follower))
    stats = _aggregate(reports)
    stats.attempted = trials
    stats.succeeded = trials
    stats.failed = 0
    bench_cfg = replace(cfg, controller="pdc")  # strategy tag unused for pairs
    return DyadResult(config=bench_cfg, stats=stats, reports=reports,
                      leaders=leaders, followers=followers)


# --- matching report ---------------------------------------------------------------


def compute_error_rates(strategy: TrialStats, benchmark: TrialStats) -> dict:
    """Per-metric |strategy mean - benchmark mean| / |benchmark mean|."""
    rates = {}
    for name in METRIC_NAMES:
        b = benchmark.mean[name]
        s = strategy.mean[name]
        if math.isnan(b) or math.isnan(s):
            rates[name] = float("nan")
        else:
            rates[name] = metrics.error_rate_vs_benchmark(s, b)
    return rates


def summarize_rates(rates_by_strategy: dict) -> dict:
    """Mean error rate and radar area per strategy and metric.

    `rates_by_strategy` maps strategy -> dyad -> metric -> rate.  Returns
    strategy -> {"mean": {metric: mean_rate}, "area": {metric: polygon area
    over the dyad axes}, "overall_area": polygon over the per-metric means}.
    """
    out = {}
    for strategy, by_dyad in rates_by_strategy.items():
        dyads = sorted(by_dyad)
        mean_rates, areas = {}, {}
        for name in METRIC_NAMES:
            radii = [by_dyad[d][name] for d in dyads]
            if any(math.isnan(r) for r in radii):
                mean_rates[name] = float("nan")
                areas[name] = float("nan")
                continue
            mean_rates[name] = float(np.mean(radii))
            if len(radii) >= 3:
                areas[name] = metrics.radar_area(
                    metrics.RadarInput(labels=tuple(dyads), radii=radii))
            else:
                areas[name] = float("nan")
        finite_means = [mean_rates[m] for m in METRIC_NAMES
                        if not math.isnan(mean_rates[m])]
        if len(finite_means) >= 3:
            overall = metrics.radar_area(metrics.RadarInput(
                labels=tuple(m for m in METRIC_NAMES if not math.isnan(mean_rates[m])),
                radii=finite_means))
        else:
            overall = float("nan")
        out[strategy] = {"mean": mean_rates, "area": areas, "overall_area": overall}
    return out


@dataclass
class MatchingReport:
    """Everything the matching protocol produces, ready for CSV emission."""

    benchmark: dict            # dyad -> TrialStats
    strategies: dict           # strategy -> dyad -> TrialStats
    rates: dict                # strategy -> dyad -> metric -> rate
    summary: dict              # strategy -> means/areas

    def report_csv(self) -> str:
        lines = ["dyad,strategy,metric,mean,std,benchmark_mean,benchmark_std,error_rate"]
        for strategy in sorted(self.strategies):
            for dyad in sorted(self.strategies[strategy]):
                st = self.strategies[strategy][dyad]
                bench = self.benchmark[dyad]
                for name in METRIC_NAMES:
                    rate = self.rates[strategy][dyad][name]
                    lines.append(
                        f"{dyad},{strategy},{name},{st.mean[name]!r},{st.std[name]!r},"
                        f"{bench.mean[name]!r},{bench.std[name]!r},{rate!r}")
        return "\n".join(lines) + "\n"

    def radar_csv(self) -> str:
        lines = ["strategy,metric,mean_error_rate,polygon_area"]
        for strategy in sorted(self.summary):
            s = self.summary[strategy]
            for name in METRIC_NAMES:
                lines.append(f"{strategy},{name},{s['mean'][name]!r},{s['area'][name]!r}")
            lines.append(f"{strategy},overall,,{s['overall_area']!r}")
        return "\n".join(lines) + "\n"

    def plotdata(self) -> str:
        """Radar vertices in polar and cartesian form; no rendering here."""
        lines = ["strategy,metric,dyad,angle,radius,x,y"]
        for strategy in sorted(self.rates):
            dyads = sorted(self.rates[strategy])
            m = len(dyads)
            for name in METRIC_NAMES:
                for i, dyad in enumerate(dyads):
                    ang = 2.0 * np.pi * i / m
                    r = self.rates[strategy][dyad][name]
                    lines.append(f"{strategy},{name},{dyad},{ang!r},{r!r},"
                                 f"{r * np.cos(ang)!r},{r * np.sin(ang)!r}")
        return "\n".join(lines) + "\n"


def matching_report(strategies: dict, benchmark: dict) -> MatchingReport:
    """Full benchmark-matching aggregation.

    strategies: strategy name -> dyad id -> TrialStats
    benchmark:  dyad id -> TrialStats
    """
    rates = {}
    for strategy, by_dyad in strategies.items():
        rates[strategy] = {}
        for dyad, st in by_dyad.items():
            if dyad not in benchmark:
                raise ConfigError(f"missing benchmark entry for dyad {dyad!r}")
            rates[strategy][dyad] = compute_error_rates(st, benchmark[dyad])
    return MatchingReport(benchmark=benchmark, strategies=strategies,
                          rates=rates, summary=summarize_rates(rates))


# --- config parsing --------------------------------------------------------------------


def parse_dyad_config(text: str, source: str = "<dyad config>") -> DyadConfig:
    """DyadConfig from flat `key = value` text; unknown keys are rejected."""
    kv = parse_kv_text(text, source)
    known = {
        "id", "seed", "gains", "controller", "trials", "trial_T", "dt",
        "lag", "eps_th", "max_inner_iters", "solo_path",
        "leader_pattern", "leader_amplitude_x", "leader_amplitude_y",
        "leader_freq", "leader_center", "leader_ramp", "leader_path",
    }
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")

    def get(key, default=None):
        return kv.get(key, default)

    gains_txt = get("gains", "dyad1")
    if gains_txt in TABLE1_PRESETS:
        gains = TABLE1_PRESETS[gains_txt]
    else:
        parts = [p.strip() for p in gains_txt.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"{source}: gains must be a preset name or kp, kv, ks")
        gains = IlcGains(*(float(p) for p in parts))

    center_txt = get("leader_center", "0.0, 0.0")
    cx, cy = (float(p) for p in center_txt.split(","))
    leader = LeaderSpec(
        pattern=get("leader_pattern", "lemniscate"),
        amplitude_x=float(get("leader_amplitude_x", 0.5)),
        amplitude_y=float(get("leader_amplitude_y", 0.3)),
        freq=float(get("leader_freq", 0.25)),
        center=(cx, cy),
        t_ramp=float(get("leader_ramp", 0.0)),
        path=get("leader_path"),
    )
    solo = None
    if get("solo_path"):
        solo = load_csv(get("solo_path"))
    return DyadConfig(
        id=get("id", "dyad1"),
        gains=gains,
        controller=get("controller", "ilc"),
        leader=leader,
        solo=solo,
        trials=int(get("trials", 5)),
        trial_T=float(get("trial_T", 30.0)),
        dt=float(get("dt", 0.02)),
        seed=int(get("seed", 0)),
        lag=float(get("lag", 0.25)),
        eps_th=float(get("eps_th", 0.05)),
        max_inner_iters=int(get("max_inner_iters", 10)),
    )
