"""Uniformly sampled planar trajectories.

A Trajectory is the common currency of the package: simulation output,
recorded player motion, and metric inputs are all (position, velocity)
series on a uniform time grid.  Timestamps are derived (t0 + j*dt), never
stored per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, InvalidStateError

__all__ = ["Trajectory", "n_samples"]


def n_samples(T: float, dt: float) -> int:
    """Sample count for a horizon T at step dt: floor(T/dt) + 1, endpoints inclusive.

    A small relative tolerance absorbs floating-point quotients such as
    30/0.01 = 2999.999...
    """
    if dt <= 0:
        raise InvalidStateError(f"dt must be positive, got {dt}")
    if T < 0:
        raise InvalidStateError(f"horizon must be non-negative, got {T}")
    return int(np.floor(T / dt * (1.0 + 1e-12) + 1e-9)) + 1


def _as_readonly(a) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(a, dtype=float))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Trajectory:
    """Planar position/velocity series sampled at a fixed period.

    Attributes:
        dt: sample period in seconds (> 0).
        t0: time of the first sample in seconds.
        pos: (n, 2) positions.
        vel: (n, 2) velocities.
    """

    dt: float
    pos: np.ndarray
    vel: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pos", _as_readonly(self.pos))
        object.__setattr__(self, "vel", _as_readonly(self.vel))
        if self.dt <= 0:
            raise InvalidStateError(f"dt must be positive, got {self.dt}")
        if self.pos.ndim != 2 or self.pos.shape[1] != 2:
            raise InvalidStateError(f"pos must be (n, 2), got {self.pos.shape}")
        if self.pos.shape != self.vel.shape:
            raise AlignmentError(
                f"pos {self.pos.shape} and vel {self.vel.shape} must match")
        if len(self.pos) < 1:
            raise InvalidStateError("trajectory needs at least one sample")
        if not (np.isfinite(self.pos).all() and np.isfinite(self.vel).all()):
            raise InvalidStateError("trajectory contains non-finite samples")
        if not np.isfinite(self.t0) or not np.isfinite(self.dt):
            raise InvalidStateError("t0/dt must be finite")

    def __len__(self) -> int:
        return len(self.pos)

    @property
    def t(self) -> np.ndarray:
        """Derived timestamps t0 + j*dt."""
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.dt

    def states(self) -> np.ndarray:
        """(n, 4) oscillator states ordered (x, vx, y, vy)."""
        out = np.empty((len(self), 4))
        out[:, 0] = self.pos[:, 0]
        out[:, 1] = self.vel[:, 0]
        out[:, 2] = self.pos[:, 1]
        out[:, 3] = self.vel[:, 1]
        return out

    @classmethod
    def from_states(cls, states, dt: float, t0: float = 0.0) -> "Trajectory":
        states = np.asarray(states, dtype=float)
        return cls(dt=dt, t0=t0, pos=states[:, [0, 2]], vel=states[:, [1, 3]])

    def allclose(self, other: "Trajectory", tol: float = 0.0) -> bool:
        if len(self) != len(other) or self.dt != other.dt:
            return False
        if tol == 0.0:
            return bool(np.array_equal(self.pos, other.pos)
                        and np.array_equal(self.vel, other.vel))
        return bool(np.allclose(self.pos, other.pos, atol=tol, rtol=0)
                    and np.allclose(self.vel, other.vel, atol=tol, rtol=0))

    def require_aligned(self, other: "Trajectory") -> None:
        if len(self) != len(other):
            raise AlignmentError(
                f"trajectory lengths differ: {len(self)} vs {len(other)}")
        if not np.isclose(self.dt, other.dt, rtol=1e-12, atol=0):
            raise AlignmentError(f"sample periods differ: {self.dt} vs {other.dt}")
