"""Coordination performance measures.

Three headline indexes quantify a played dyad:

- RMSE of the paired position series (temporal correspondence; lower is better),
- circular variance CV = |mean of exp(i * dPhi_j)| of the relative phase
  (phase locking; 1 = perfectly locked),
- SVM = max|x| * max|y| of one player's positions (movement range / priming).

Phase is extracted protractor-style: each axis is centered on its mean,
an angular frequency is estimated from same-direction zero crossings, and
phase = atan2(v / omega_hat, p - center).  This is exact for pure sinusoids
and needs no windowing parameters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateMotionError,
    UndefinedBenchmarkError,
)
from .trajectory import Trajectory

__all__ = [
    "PhaseSeries", "MetricsReport", "RadarInput",
    "rmse", "svm", "estimate_phase", "relative_phase", "circular_variance",
    "error_rate_vs_benchmark", "radar_area", "wrap_angle", "report",
    "peak_amplitude_cv",
]


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    out = -((-a + np.pi) % (2.0 * np.pi) - np.pi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhaseSeries:
    """Per-sample wrapped phase of one axis of one trajectory."""

    phases: np.ndarray
    axis: str
    center: float
    omega_hat: float

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        if self.axis not in ("x", "y"):
            raise ConfigError(f"axis must be 'x' or 'y', got {self.axis!r}")
        if not self.omega_hat > 0:
            raise ConfigError(f"omega_hat must be positive, got {self.omega_hat}")


@dataclass(frozen=True)
class MetricsReport:
    """Flat record of the three indexes plus per-axis detail."""

    rmse: float
    cv: float
    svm: float
    n: int
    rmse_x: float = float("nan")
    rmse_y: float = float("nan")
    svm_other: float = float("nan")

    def to_kv_text(self) -> str:
        lines = [f"rmse = {self.rmse!r}", f"cv = {self.cv!r}",
                 f"svm = {self.svm!r}", f"n = {self.n}"]
        return "\n".join(lines) + "\n"

    def csv_row(self) -> str:
        return f"{self.rmse!r},{self.cv!r},{self.svm!r},{self.n}"

    CSV_HEADER = "rmse,cv,svm,n"


@dataclass(frozen=True)
class RadarInput:
    """Named spokes of a radar polygon; radii are average error rates."""

    labels: tuple
    radii: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        if len(self.labels) != len(self.radii):
            raise ConfigError("labels and radii must have equal length")
        if len(self.radii) < 3:
            raise ConfigError(f"radar needs >= 3 axes, got {len(self.radii)}")
        if not np.isfinite(self.radii).all() or (self.radii < 0).any():
            raise ConfigError("radii must be finite and non-negative")


# --- RMSE / SVM ---------------------------------------------------------------

def rmse(a: Trajectory, b: Trajectory) -> float:
    """Root mean square distance between paired positions."""
    a.require_aligned(b)
    d = a.pos - b.pos
    return float(np.sqrt(np.mean(d[:, 0] ** 2 + d[:, 1] ** 2)))


def svm(traj: Trajectory) -> float:
    """Spatial variation of motion: product of per-axis position sup norms."""
    return float(np.abs(traj.pos[:, 0]).max() * np.abs(traj.pos[:, 1]).max())


# --- phase ---------------------------------------------------------------------

def _upward_crossings(p: np.ndarray) -> np.ndarray:
    s = np.signbit(p)
    return np.where(s[:-1] & ~s[1:])[0]


def estimate_phase(traj: Trajectory, axis: str) -> PhaseSeries:
    """Phase of one axis via centered position, zero-crossing frequency, atan2."""
    col = 0 if axis == "x" else 1
    p = traj.pos[:, col]
    v = traj.vel[:, col]
    center = float(p.mean())
    pc = p - center
    ups = _upward_crossings(pc)
    if len(ups) < 2:
        raise DegenerateMotionError(
            f"axis {axis}: fewer than two upward center crossings")
    period = float(np.diff(ups).mean()) * traj.dt
    omega_hat = 2.0 * np.pi / period
    if traj.duration < 2.0 * period:
        warnings.warn(
            f"axis {axis}: trajectory spans {traj.duration / period:.2f} periods; "
            "phase estimates need >= 2", stacklevel=2)
    phases = np.arctan2(v / omega_hat, pc)
    return PhaseSeries(phases=phases, axis=axis, center=center, omega_hat=omega_hat)


def relative_phase(leader: Trajectory, follower: Trajectory) -> np.ndarray:
    """Per-step relative phase: x-axis difference plus y-axis difference, wrapped."""
    leader.require_aligned(follower)
    dphi = np.zeros(len(leader))
    for axis in ("x", "y"):
        p1 = estimate_phase(leader, axis)
        p2 = estimate_phase(follower, axis)
        dphi = dphi + (p1.phases - p2.phases)
    return wrap_angle(dphi)


def circular_variance(delta_phi) -> float:
    """Modulus of the mean unit phasor; 1 = locked, 0 = uniform spread."""
    delta_phi = np.asarray(delta_phi, dtype=float)
    if delta_phi.size < 1:
        raise ConfigError("need at least one phase sample")
    return float(np.abs(np.exp(1j * delta_phi).mean()))


# --- comparisons -------------------------------------------------------------------

def error_rate_vs_benchmark(value: float, benchmark: float) -> float:
    """|value - benchmark| / |benchmark| as a fraction."""
    if benchmark == 0:
        raise UndefinedBenchmarkError("benchmark value is zero")
    return abs(value - benchmark) / abs(benchmark)


def radar_area(inp: RadarInput) -> float:
    """Area of the polygon whose vertex i sits at radius r_i on spoke i.

    Spokes are equally spaced (2*pi/m); the area is the fan sum
    0.5 * sum_i r_i * r_{i+1} * sin(2*pi/m).
    """
    r = inp.radii
    m = len(r)
    s = np.sin(2.0 * np.pi / m)
    return float(0.5 * s * np.sum(r * np.roll(r, -1)))


def peak_amplitude_cv(traj: Trajectory, window_frac: float = 0.2) -> float:
    """Spread of oscillation peaks over the trailing window of a run.

    Collects the local maxima of |position| per axis inside the final
    `window_frac` of the trajectory and returns the worst per-axis
    coefficient of variation (std/mean).  A settled periodic orbit repeats
    its peaks, so the value drops to ~0 once transients die out.  Needs at
    least two peaks per axis, i.e. the window must span a full period.
    """
    if not 0 < window_frac <= 1:
        raise ConfigError(f"window_frac must be in (0, 1], got {window_frac}")
    n = len(traj)
    tail = traj.pos[int((1.0 - window_frac) * n):]
    worst = 0.0
    for col in (0, 1):
        a = np.abs(tail[:, col])
        peaks = a[1:-1][(a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:])]
        if len(peaks) < 2:
            raise DegenerateMotionError(
                f"axis {'xy'[col]}: {len(peaks)} amplitude peaks in the final "
                f"{window_frac:.0%} window; need >= 2 (window shorter than a period)")
        m = float(peaks.mean())
        if m == 0.0:
            raise DegenerateMotionError(f"axis {'xy'[col]}: zero-amplitude peaks")
        worst = max(worst, float(peaks.std()) / m)
    return worst


def report(leader: Trajectory, follower: Trajectory) -> MetricsReport:
    """Full MetricsReport for a played pair; SVM is the follower's range."""
    leader.require_aligned(follower)
    d = leader.pos - follower.pos
    try:
        cv = circular_variance(relative_phase(leader, follower))
    except DegenerateMotionError:
        cv = float("nan")
    return MetricsReport(
        rmse=rmse(leader, follower),
        cv=cv,
        svm=svm(follower),
        n=len(leader),
        rmse_x=float(np.sqrt(np.mean(d[:, 0] ** 2))),
        rmse_y=float(np.sqrt(np.mean(d[:, 1] ** 2))),
        svm_other=svm(leader),
    )
