"""Human-player signal pipeline: smoothing, differentiation, resampling, CSV I/O.

Live sessions must stay causal (future samples do not exist), so the moving
average supports both a centered mode for offline analysis and a trailing
mode for real-time use.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    FormatError,
    InsufficientDataError,
    ParseError,
)
from .trajectory import Trajectory, n_samples

__all__ = [
    "FilterSpec", "moving_average", "estimate_velocity", "resample",
    "load_csv", "save_csv", "corpus_path",
]

CSV_HEADER = "t,x,y,vx,vy"


@dataclass(frozen=True)
class FilterSpec:
    """Moving-average window: sample count plus centered/causal placement."""

    window: int = 5
    mode: str = "centered"

    def __post_init__(self):
        if self.mode not in ("centered", "causal"):
            raise ConfigError(f"mode must be 'centered' or 'causal', got {self.mode!r}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.mode == "centered" and self.window % 2 == 0:
            raise ConfigError(
                f"centered mode needs an odd window, got {self.window}")


def _smooth_columns(values: np.ndarray, spec: FilterSpec) -> np.ndarray:
    n = len(values)
    out = np.empty_like(values)
    if spec.mode == "centered":
        half = spec.window // 2
        for j in range(n):
            r = min(half, j, n - 1 - j)  # symmetric shrink at the edges
            out[j] = values[j - r:j + r + 1].mean(axis=0)
    else:
        for j in range(n):
            lo = max(0, j - spec.window + 1)
            out[j] = values[lo:j + 1].mean(axis=0)
    return out


def moving_average(series: Trajectory, spec: FilterSpec) -> Trajectory:
    """Smooth positions and velocities with the configured window."""
    return Trajectory(dt=series.dt, t0=series.t0,
                      pos=_smooth_columns(series.pos, spec),
                      vel=_smooth_columns(series.vel, spec))


def difference_velocity(pos: np.ndarray, dt: float) -> np.ndarray:
    """Difference-method derivative: central inside, one-sided at the ends."""
    if len(pos) < 2:
        raise InsufficientDataError("velocity estimation needs >= 2 samples")
    vel = np.empty_like(pos)
    vel[1:-1] = (pos[2:] - pos[:-2]) / (2.0 * dt)
    vel[0] = (pos[1] - pos[0]) / dt
    vel[-1] = (pos[-1] - pos[-2]) / dt
    return vel


def estimate_velocity(positions: Trajectory, dt: float | None = None) -> Trajectory:
    """Fill the velocity channels from the position channels."""
    dt = positions.dt if dt is None else dt
    return Trajectory(dt=positions.dt, t0=positions.t0, pos=positions.pos,
                      vel=difference_velocity(positions.pos, dt))


def resample(series: Trajectory, dt_new: float) -> Trajectory:
    """Linear interpolation of positions onto a new grid; velocities re-estimated.

    The start time is preserved; the end point is preserved whenever dt_new
    divides the duration (within 1e-12 relative).
    """
    if dt_new <= 0:
        raise ConfigError(f"dt_new must be positive, got {dt_new}")
    if len(series) < 2:
        raise InsufficientDataError("resampling needs >= 2 samples")
    m = n_samples(series.duration, dt_new)
    t_new = np.arange(m) * dt_new
    t_old = np.arange(len(series)) * series.dt
    pos = np.column_stack([
        np.interp(t_new, t_old, series.pos[:, 0]),
        np.interp(t_new, t_old, series.pos[:, 1]),
    ])
    return Trajectory(dt=dt_new, t0=series.t0, pos=pos,
                      vel=difference_velocity(pos, dt_new))


# --- CSV persistence ---------------------------------------------------------
#
# Format: header `t,x,y,vx,vy`, one decimal-float row per sample, `\n` line
# endings.  Floats are written with repr so a save/load round trip is
# bit-exact.  Velocity columns are optional on read; missing velocities are
# filled with the difference method.

def save_csv(traj: Trajectory, path) -> None:
    lines = [CSV_HEADER]
    t0, dt = traj.t0, traj.dt
    for j in range(len(traj)):
        t = t0 + j * dt
        lines.append(f"{t!r},{float(traj.pos[j, 0])!r},{float(traj.pos[j, 1])!r},"
                     f"{float(traj.vel[j, 0])!r},{float(traj.vel[j, 1])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_rows(text: str, path) -> tuple[list[list[float]], bool]:
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file", line=1)
    header = [h.strip() for h in lines[0].split(",")]
    if header == ["t", "x", "y", "vx", "vy"]:
        has_vel = True
    elif header == ["t", "x", "y"]:
        has_vel = False
    else:
        raise ParseError(f"{path}: unexpected header {lines[0]!r}", line=1)
    width = 5 if has_vel else 3
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != width:
            raise ParseError(
                f"{path}: expected {width} fields, got {len(parts)}", line=i)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", line=i) from exc
    return rows, has_vel


def load_csv(path) -> Trajectory:
    text = Path(path).read_text(encoding="utf-8")
    rows, has_vel = _parse_rows(text, path)
    if len(rows) < 2:
        raise InsufficientDataError(
            f"{path}: need >= 2 samples, got {len(rows)}")
    data = np.array(rows)
    t = data[:, 0]
    dt = t[1] - t[0]
    if dt <= 0:
        raise FormatError(f"{path}: non-increasing timestamps")
    dev = np.abs(np.diff(t) - dt) / dt
    if dev.max() > 1e-9:
        raise FormatError(
            f"{path}: non-uniform timestamps (max rel dev {dev.max():.2e})")
    pos = data[:, 1:3]
    if has_vel:
        vel = data[:, 3:5]
    else:
        vel = difference_velocity(pos, dt)
    return Trajectory(dt=float(dt), t0=float(t[0]), pos=pos, vel=vel)


def corpus_path(root, dyad: str, role: str, trial) -> Path:
    """Path inside a recorded-trajectory corpus: <dyad>/<role>/<trial>.csv."""
    return Path(root) / str(dyad) / str(role) / f"{trial}.csv"
