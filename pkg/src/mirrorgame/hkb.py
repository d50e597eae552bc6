"""Coupled-oscillator coordination model of the virtual player.

Each planar axis of the end effector is one forced HKB-type oscillator

    z" + (alpha*z'^2 + beta*z^2 - gamma)*z' + omega^2*z = u

written in state-space form over x = (x1, x2, x3, x4) = (z1, z1', z2, z2').
The two axes are uncoupled; coupling with the partner enters only through
the control input.  All functions are pure; integration is fixed-step RK4
with zero-order-hold inputs so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .errors import AlignmentError, ConfigError, DivergenceError, InvalidStateError
from .trajectory import Trajectory, n_samples

__all__ = [
    "HkbParams", "DEFAULT_PARAMS", "B_MATRIX", "C_POSITION", "C_VELOCITY",
    "drift", "jacobian", "step", "simulate", "inverse_dynamics",
]


@dataclass(frozen=True)
class HkbParams:
    """Oscillator parameters: damping shape, position damping, energy injection, frequency."""

    alpha: float
    beta: float
    gamma: float
    omega: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "omega"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not isfinite(v):
                raise ConfigError(f"{name} must be a finite number, got {v!r}")
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "omega": self.omega}

    @classmethod
    def from_dict(cls, d: dict) -> "HkbParams":
        try:
            return cls(alpha=float(d["alpha"]), beta=float(d["beta"]),
                       gamma=float(d["gamma"]), omega=float(d["omega"]))
        except KeyError as exc:
            raise ConfigError(f"missing oscillator parameter {exc}") from exc


# Parameter set used throughout for benchmark-matching runs.
DEFAULT_PARAMS = HkbParams(alpha=0.01, beta=0.01, gamma=0.01, omega=0.02)

_B = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
_B.setflags(write=False)
B_MATRIX = _B

_CP = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
_CP.setflags(write=False)
C_POSITION = _CP

_CV = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
_CV.setflags(write=False)
C_VELOCITY = _CV


def _check_state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise InvalidStateError(f"state must have shape (4,), got {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidStateError(f"non-finite state {x}")
    return x


def drift(x, xi: HkbParams) -> np.ndarray:
    """Unforced state derivative H(x, xi)."""
    x = _check_state(x)
    a, b, g, w2 = xi.alpha, xi.beta, xi.gamma, xi.omega ** 2
    return np.array([
        x[1],
        -(a * x[1] * x[1] + b * x[0] * x[0] - g) * x[1] - w2 * x[0],
        x[3],
        -(a * x[3] * x[3] + b * x[2] * x[2] - g) * x[3] - w2 * x[2],
    ])


def jacobian(x, xi: HkbParams) -> np.ndarray:
    """Analytic Jacobian dH/dx.

    Block diagonal over the two axes.  The gamma entry is +gamma: the true
    derivative of the damping term, validated against finite differences.
    """
    x = _check_state(x)
    a, b, g, w2 = xi.alpha, xi.beta, xi.gamma, xi.omega ** 2
    J = np.zeros((4, 4))
    J[0, 1] = 1.0
    J[1, 0] = -2.0 * b * x[0] * x[1] - w2
    J[1, 1] = -3.0 * a * x[1] * x[1] - b * x[0] * x[0] + g
    J[2, 3] = 1.0
    J[3, 2] = -2.0 * b * x[2] * x[3] - w2
    J[3, 3] = -3.0 * a * x[3] * x[3] - b * x[2] * x[2] + g
    return J


def _rk4(x1, x2, x3, x4, u1, u2, dt, a, b, g, w2):
    """One RK4 step on plain floats (hot path: ~1e6 calls in long runs)."""
    def f(y1, y2, y3, y4):
        return (y2,
                -(a * y2 * y2 + b * y1 * y1 - g) * y2 - w2 * y1 + u1,
                y4,
                -(a * y4 * y4 + b * y3 * y3 - g) * y4 - w2 * y3 + u2)

    h = 0.5 * dt
    k11, k12, k13, k14 = f(x1, x2, x3, x4)
    k21, k22, k23, k24 = f(x1 + h * k11, x2 + h * k12, x3 + h * k13, x4 + h * k14)
    k31, k32, k33, k34 = f(x1 + h * k21, x2 + h * k22, x3 + h * k23, x4 + h * k24)
    k41, k42, k43, k44 = f(x1 + dt * k31, x2 + dt * k32, x3 + dt * k33, x4 + dt * k34)
    s = dt / 6.0
    return (x1 + s * (k11 + 2.0 * (k21 + k31) + k41),
            x2 + s * (k12 + 2.0 * (k22 + k32) + k42),
            x3 + s * (k13 + 2.0 * (k23 + k33) + k43),
            x4 + s * (k14 + 2.0 * (k24 + k34) + k44))


def _saturate(u1, u2, u_max):
    if u_max is None:
        return u1, u2
    if u_max < 0:
        raise ConfigError(f"u_max must be non-negative, got {u_max}")
    return (min(max(u1, -u_max), u_max), min(max(u2, -u_max), u_max))


def step(x, xi: HkbParams, u, dt: float, u_max: float | None = None) -> np.ndarray:
    """Advance the state one RK4 step with the input held constant."""
    x = _check_state(x)
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    u = np.asarray(u, dtype=float)
    if u.shape != (2,) or not np.isfinite(u).all():
        raise InvalidStateError(f"control input must be a finite 2-vector, got {u}")
    u1, u2 = _saturate(float(u[0]), float(u[1]), u_max)
    out = _rk4(float(x[0]), float(x[1]), float(x[2]), float(x[3]),
               u1, u2, dt, xi.alpha, xi.beta, xi.gamma, xi.omega ** 2)
    if not all(isfinite(v) for v in out):
        raise DivergenceError(f"state diverged during step of size {dt}", t=dt)
    return np.array(out)


def simulate(x0, xi: HkbParams, u_series, dt: float, T: float,
             u_max: float | None = None, t0: float = 0.0) -> Trajectory:
    """Integrate the forced model over [0, T] and return the sampled trajectory.

    u_series may be None (unforced) or an (m, 2) array with one held input
    per step, m >= floor(T/dt).  Output samples sit at t0 + j*dt for
    j = 0..floor(T/dt), positions (x1, x3) and velocities (x2, x4).
    """
    x = _check_state(x0)
    n = n_samples(T, dt)
    steps = n - 1
    if u_series is None:
        u_arr = None
    else:
        u_arr = np.asarray(u_series, dtype=float)
        if u_arr.ndim != 2 or u_arr.shape[1] != 2:
            raise InvalidStateError(f"u_series must be (m, 2), got {u_arr.shape}")
        if len(u_arr) < steps:
            raise AlignmentError(
                f"u_series too short: need >= {steps} steps, got {len(u_arr)}")
        if not np.isfinite(u_arr[:steps]).all():
            raise InvalidStateError("u_series contains non-finite values")

    a, b, g, w2 = xi.alpha, xi.beta, xi.gamma, xi.omega ** 2
    states = np.empty((n, 4))
    states[0] = x
    x1, x2, x3, x4 = (float(x[0]), float(x[1]), float(x[2]), float(x[3]))
    for j in range(steps):
        if u_arr is None:
            u1 = u2 = 0.0
        else:
            u1, u2 = _saturate(float(u_arr[j, 0]), float(u_arr[j, 1]), u_max)
        x1, x2, x3, x4 = _rk4(x1, x2, x3, x4, u1, u2, dt, a, b, g, w2)
        if not (isfinite(x1) and isfinite(x2) and isfinite(x3) and isfinite(x4)):
            raise DivergenceError(
                f"state diverged at t={t0 + (j + 1) * dt:.6g}", t=t0 + (j + 1) * dt)
        states[j + 1, 0] = x1
        states[j + 1, 1] = x2
        states[j + 1, 2] = x3
        states[j + 1, 3] = x4
    return Trajectory.from_states(states, dt=dt, t0=t0)


def inverse_dynamics(pos, vel, acc, xi: HkbParams) -> np.ndarray:
    """Exact input that makes a smooth planar path a solution of the model.

    The input enters the acceleration directly, so u = z" + (alpha*z'^2 +
    beta*z^2 - gamma)*z' + omega^2*z axis by axis.  Useful for building
    synthetic leaders whose expected control is known in closed form.
    """
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    acc = np.asarray(acc, dtype=float)
    if not (pos.shape == vel.shape == acc.shape):
        raise InvalidStateError("pos/vel/acc shapes must match")
    a, b, g, w2 = xi.alpha, xi.beta, xi.gamma, xi.omega ** 2
    return acc + (a * vel ** 2 + b * pos ** 2 - g) * vel + w2 * pos
