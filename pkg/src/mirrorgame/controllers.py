"""Control laws for the virtual player.

Three strategies drive the follower:

- the iterative learning law, which replays a whole trial and corrects the
  stored control sequence from the previous repetition's errors,
- its online gated variant, which refines the held control in bounded
  bursts whenever the relative position error exceeds a threshold,
- baselines: direct PD feedback and a receding-horizon quadratic tracker
  on the locally linearized dynamics (a documented reconstruction, not a
  published formulation).

The learning update is

    u_k(t) = u_{k-1}(t) + kp * e_{k-1}(t) + kv * edot_{k-1}(t) + ks * s_{k-1}(t)

pointwise over the trial grid, where e is the position tracking error,
edot the velocity error, and s the mismatch against a pre-recorded solo
trajectory (the prescribed kinematic feature).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isfinite
from pathlib import Path

import numpy as np

from . import hkb
from .errors import (
    AlignmentError,
    ConfigError,
    DivergenceError,
    InvalidStateError,
    ParseError,
)
from .sigproc import resample
from .trajectory import Trajectory

__all__ = [
    "IlcGains", "TABLE1_PRESETS", "IterationBuffer", "FeatureSignal",
    "OnlineConfig", "OnlineController", "IlcTrialResult",
    "pd_control", "ilc_update", "error_rate", "run_ilc_trial",
    "optimal_tracking_baseline", "OpcWeights",
    "load_gain_presets", "save_gain_presets",
]


@dataclass(frozen=True)
class IlcGains:
    """Position, velocity, and feature-mismatch gains."""

    kp: float
    kv: float
    ks: float = 0.0

    def __post_init__(self):
        for name in ("kp", "kv", "ks"):
            v = getattr(self, name)
            if not isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v!r}")
        if self.ks < 0:
            raise ConfigError(f"ks must be non-negative, got {self.ks}")


# Per-dyad gain presets used in the benchmark-matching runs.
TABLE1_PRESETS = {
    "dyad1": IlcGains(kp=0.31, kv=0.01, ks=0.02),
    "dyad2": IlcGains(kp=0.45, kv=0.02, ks=0.03),
    "dyad3": IlcGains(kp=0.16, kv=0.02, ks=0.01),
    "dyad4": IlcGains(kp=0.41, kv=0.04, ks=0.03),
}


def save_gain_presets(path, presets: dict[str, IlcGains] | None = None) -> None:
    presets = TABLE1_PRESETS if presets is None else presets
    lines = [f"{name} = {g.kp!r}, {g.kv!r}, {g.ks!r}" for name, g in presets.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_gain_presets(path) -> dict[str, IlcGains]:
    presets = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}: expected 'name = kp, kv, ks'", line=i)
        name, _, rest = line.partition("=")
        parts = [p.strip() for p in rest.split(",")]
        if len(parts) != 3:
            raise ParseError(f"{path}: expected three gains", line=i)
        try:
            kp, kv, ks = (float(p) for p in parts)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", line=i) from exc
        presets[name.strip()] = IlcGains(kp=kp, kv=kv, ks=ks)
    return presets


def _signal(arr, n=None) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise AlignmentError(f"signal must be (n, 2), got {arr.shape}")
    if n is not None and len(arr) != n:
        raise AlignmentError(f"signal length {len(arr)} != grid length {n}")
    if not np.isfinite(arr).all():
        raise InvalidStateError("signal contains non-finite values")
    return arr


@dataclass(frozen=True)
class IterationBuffer:
    """Signals of one learning iteration, aligned to the trial grid."""

    k: int
    u: np.ndarray
    e: np.ndarray
    edot: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError(f"iteration index must be >= 0, got {self.k}")
        n = len(np.asarray(self.u))
        for name in ("u", "e", "edot", "s"):
            object.__setattr__(self, name, _signal(getattr(self, name), n))

    def __len__(self) -> int:
        return len(self.u)

    CSV_HEADER = "u1,u2,e1,e2,ed1,ed2,s1,s2"

    def save_csv(self, path) -> None:
        lines = [self.CSV_HEADER]
        for j in range(len(self)):
            vals = (*self.u[j], *self.e[j], *self.edot[j], *self.s[j])
            lines.append(",".join(repr(float(v)) for v in vals))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_csv(cls, path, k: int = 0) -> "IterationBuffer":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].strip() != cls.CSV_HEADER:
            raise ParseError(f"{path}: bad header", line=1)
        data = []
        for i, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ParseError(f"{path}: expected 8 fields", line=i)
            data.append([float(p) for p in parts])
        arr = np.array(data)
        return cls(k=k, u=arr[:, 0:2], e=arr[:, 2:4], edot=arr[:, 4:6], s=arr[:, 6:8])


@dataclass(frozen=True)
class FeatureSignal:
    """Prescribed kinematic feature: a solo recording aligned to the trial grid.

    channel selects whether the mismatch s = v - y compares positions
    (consistent with the learning law's algebra; the default) or velocities.
    If the recording is shorter than the trial it is cycled.
    """

    source: Trajectory
    channel: str = "position"

    def __post_init__(self):
        if self.channel not in ("position", "velocity"):
            raise ConfigError(
                f"channel must be 'position' or 'velocity', got {self.channel!r}")

    def on_grid(self, dt: float, n: int) -> np.ndarray:
        src = self.source
        if not np.isclose(src.dt, dt, rtol=1e-9, atol=0):
            src = resample(src, dt)
        vals = src.pos if self.channel == "position" else src.vel
        if len(vals) >= n:
            return np.array(vals[:n])
        reps = int(np.ceil(n / len(vals)))
        return np.tile(vals, (reps, 1))[:n]


def pd_control(e, edot, gains: IlcGains) -> np.ndarray:
    """Feedback term of the law: u = kp * e + kv * edot."""
    e = np.asarray(e, dtype=float)
    edot = np.asarray(edot, dtype=float)
    if not (np.isfinite(e).all() and np.isfinite(edot).all()):
        raise InvalidStateError("pd_control needs finite errors")
    return gains.kp * e + gains.kv * edot


def ilc_update(prev: IterationBuffer, gains: IlcGains) -> np.ndarray:
    """Next control sequence from the previous iteration's stored signals."""
    return (prev.u + gains.kp * prev.e + gains.kv * prev.edot
            + gains.ks * prev.s)


def error_rate(p_h, p_k, eps_floor: float = 1e-3) -> float:
    """Relative position error |p_h - p_k| / max(|p_h|, eps_floor)."""
    if eps_floor <= 0:
        raise ConfigError(f"eps_floor must be positive, got {eps_floor}")
    p_h = np.asarray(p_h, dtype=float)
    p_k = np.asarray(p_k, dtype=float)
    num = float(np.hypot(p_h[0] - p_k[0], p_h[1] - p_k[1]))
    den = max(float(np.hypot(p_h[0], p_h[1])), eps_floor)
    return num / den


@dataclass
class IlcTrialResult:
    """Everything recorded across the repetitions of one learning run."""

    trajectories: list
    rmse: list
    buffers: list
    dt: float

    @property
    def final_buffer(self) -> IterationBuffer:
        return self.buffers[-1]

    def control_sequences(self) -> list:
        return [b.u for b in self.buffers]


def run_ilc_trial(xi: hkb.HkbParams, hp: Trajectory,
                  feature: FeatureSignal | None, gains: IlcGains,
                  iters: int, x0=None, u_max: float | None = None,
                  warm_start: IterationBuffer | None = None) -> IlcTrialResult:
    """Repeat the trial `iters` times, learning between repetitions.

    The follower's state resets to x0 (default: the leader's initial state)
    before every repetition.  Iteration 0 plays the stored control (zero
    unless warm-started); iteration k plays the sequence updated from
    iteration k-1's errors.  Returns the per-iteration trajectories, RMSE
    values, and buffers (iters + 1 of each).
    """
    if iters < 0:
        raise ConfigError(f"iters must be >= 0, got {iters}")
    n = len(hp)
    dt = hp.dt
    T = hp.duration
    if x0 is None:
        x0 = hp.states()[0]
    v = feature.on_grid(dt, n) if feature is not None else None
    want_velocity_feature = feature is not None and feature.channel == "velocity"

    if warm_start is not None:
        if len(warm_start) != n:
            raise AlignmentError(
                f"warm start length {len(warm_start)} != grid length {n}")
        u = np.array(warm_start.u)
    else:
        u = np.zeros((n, 2))

    trajectories, rmses, buffers = [], [], []
    for k in range(iters + 1):
        try:
            traj = hkb.simulate(x0, xi, u, dt, T, u_max=u_max)
        except DivergenceError as exc:
            raise DivergenceError(
                f"iteration {k} diverged: {exc}", t=exc.t, iteration=k) from exc
        e = hp.pos - traj.pos
        edot = hp.vel - traj.vel
        if v is None:
            s = np.zeros((n, 2))
        elif want_velocity_feature:
            s = v - traj.vel
        else:
            s = v - traj.pos
        buf = IterationBuffer(k=k, u=u, e=e, edot=edot, s=s)
        trajectories.append(traj)
        rmses.append(float(np.sqrt(np.mean(e[:, 0] ** 2 + e[:, 1] ** 2))))
        buffers.append(buf)
        if k < iters:
            u = ilc_update(buf, gains)
    return IlcTrialResult(trajectories=trajectories, rmse=rmses,
                          buffers=buffers, dt=dt)


# --- online gated variant -----------------------------------------------------------


@dataclass(frozen=True)
class OnlineConfig:
    """Threshold, horizon, and refinement bounds of the live loop."""

    eps_th: float = 0.05
    T: float = 30.0
    max_inner_iters: int = 10
    eps_floor: float = 1e-3

    def __post_init__(self):
        if not self.eps_th > 0:
            raise ConfigError(f"eps_th must be positive, got {self.eps_th}")
        if self.max_inner_iters < 1:
            raise ConfigError(
                f"max_inner_iters must be >= 1, got {self.max_inner_iters}")
        if self.eps_floor <= 0:
            raise ConfigError(f"eps_floor must be positive, got {self.eps_floor}")


@dataclass
class OnlineStepDiagnostics:
    eps: float
    k_inner: int
    u: np.ndarray


class OnlineController:
    """Tick-driven realization of the gated learning loop.

    Each tick measures the relative error; above the threshold, the held
    control receives up to max_inner_iters learning increments computed
    from the latest measured errors (no within-tick re-simulation), then
    the plant advances one step with the refined input held.  Below the
    threshold the control is simply held and the counter resets.  With no
    leader data yet, the control is never refined, so the follower plays
    its unforced dynamics.

    Instances are single-owner mutable state: exactly one caller drives
    step(); concurrent sessions use separate instances.
    """

    def __init__(self, xi: hkb.HkbParams, gains: IlcGains, cfg: OnlineConfig,
                 x0=None, u_max: float | None = None):
        self.xi = xi
        self.gains = gains
        self.cfg = cfg
        self.x = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float).copy()
        if self.x.shape != (4,) or not np.isfinite(self.x).all():
            raise InvalidStateError(f"bad initial state {self.x}")
        self.u = np.zeros(2)
        self.u_max = u_max

    @property
    def position(self) -> np.ndarray:
        return self.x[[0, 2]]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[[1, 3]]

    def step(self, dt: float, hp_pos=None, hp_vel=None,
             feature_val=None) -> OnlineStepDiagnostics:
        """Advance one tick; returns the measured error, refinement count, input."""
        k_inner = 0
        eps = float("nan")
        if hp_pos is not None:
            hp_pos = np.asarray(hp_pos, dtype=float)
            hp_vel = (np.zeros(2) if hp_vel is None
                      else np.asarray(hp_vel, dtype=float))
            eps = error_rate(hp_pos, self.position, self.cfg.eps_floor)
            if eps > self.cfg.eps_th:
                e = hp_pos - self.position
                edot = hp_vel - self.velocity
                if feature_val is not None and self.gains.ks != 0.0:
                    s = np.asarray(feature_val, dtype=float) - self.position
                else:
                    s = np.zeros(2)
                # stale-error refinement: the measured errors do not change
                # within the tick, so each pass adds the same increment
                for _ in range(self.cfg.max_inner_iters):
                    self.u = self.u + pd_control(e, edot, self.gains) + self.gains.ks * s
                    k_inner += 1
        self.x = hkb.step(self.x, self.xi, self.u, dt, u_max=self.u_max)
        return OnlineStepDiagnostics(eps=eps, k_inner=k_inner, u=self.u.copy())


# --- receding-horizon baseline ---------------------------------------------------------


@dataclass(frozen=True)
class OpcWeights:
    """Quadratic weights for the tracking baseline."""

    q: np.ndarray = field(default_factory=lambda: np.eye(2))
    r: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(2))
    horizon: int = 20

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        if self.q.shape != (2, 2) or self.r.shape != (2, 2):
            raise ConfigError("q and r must be 2x2")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if np.linalg.eigvalsh((self.q + self.q.T) / 2).min() < -1e-12:
            raise ConfigError("q must be positive semidefinite")
        if np.linalg.eigvalsh((self.r + self.r.T) / 2).min() <= 0:
            raise ConfigError("r must be positive definite")


def optimal_tracking_baseline(xi: hkb.HkbParams, x, ref_window,
                              weights: OpcWeights, dt: float) -> np.ndarray:
    """First input of a finite-horizon quadratic tracker.

    The dynamics are linearized at the current state and discretized with a
    forward-Euler step; the backward recursion minimizes
    sum_j (y_j - r_j)^T Q (y_j - r_j) + u_j^T R u_j over the window.
    """
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref_window, dtype=float)
    if ref.ndim != 2 or ref.shape[1] != 2:
        raise ConfigError(f"ref_window must be (N, 2), got {ref.shape}")
    N = weights.horizon
    if len(ref) < N:  # hold the last reference sample beyond the window
        ref = np.vstack([ref, np.tile(ref[-1], (N - len(ref), 1))])

    A_c = hkb.jacobian(x, xi)
    f0 = hkb.drift(x, xi)
    Ad = np.eye(4) + dt * A_c
    Bd = dt * hkb.B_MATRIX
    cd = dt * (f0 - A_c @ x)
    C = hkb.C_POSITION
    Q, R = weights.q, weights.r

    # cost-to-go V_j(x) = x'P x + 2 b'x + const, built backward from j = N
    P = C.T @ Q @ C
    b = -C.T @ Q @ ref[N - 1]
    K0 = k0 = None
    for j in range(N - 1, -1, -1):
        H = R + Bd.T @ P @ Bd
        G = Bd.T @ P @ Ad
        g = Bd.T @ (P @ cd + b)
        K = np.linalg.solve(H, G)
        kff = np.linalg.solve(H, g)
        if j == 0:
            K0, k0 = K, kff
            break
        Acl = Ad - Bd @ K
        rj = ref[j - 1]
        Pn = C.T @ Q @ C + K.T @ R @ K + Acl.T @ P @ Acl
        bn = (-C.T @ Q @ rj + K.T @ R @ kff
              + Acl.T @ (b + P @ (cd - Bd @ kff)))
        P, b = Pn, bn
    return -(K0 @ x) - k0
