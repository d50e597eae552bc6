"""Shared synthetic fixtures: realizable leaders with known expected inputs."""

import numpy as np
import pytest

from mirrorgame import DEFAULT_PARAMS, Trajectory
from mirrorgame.hkb import inverse_dynamics


def ramped_lemniscate(t, amp_x=0.5, amp_y=0.3, freq=0.25, t_ramp=2.0,
                      center=(0.0, 0.0)):
    """Figure-eight with a smooth sin^2 start ramp; returns pos/vel/acc arrays.

    The ramp makes position and velocity vanish at t = 0, matching the
    zero-initial-state premise of the learning analysis.
    """
    w1, w2 = 2 * np.pi * freq, 4 * np.pi * freq
    r = np.where(t < t_ramp, np.sin(np.pi * t / (2 * t_ramp)) ** 2, 1.0)
    rd = np.where(t < t_ramp, (np.pi / (2 * t_ramp)) * np.sin(np.pi * t / t_ramp), 0.0)
    rdd = np.where(t < t_ramp,
                   (np.pi ** 2 / (2 * t_ramp ** 2)) * np.cos(np.pi * t / t_ramp), 0.0)
    out_pos = np.empty((len(t), 2))
    out_vel = np.empty((len(t), 2))
    out_acc = np.empty((len(t), 2))
    for col, (A, w) in enumerate(((amp_x, w1), (amp_y, w2))):
        p = A * np.sin(w * t)
        v = A * w * np.cos(w * t)
        a = -A * w * w * np.sin(w * t)
        out_pos[:, col] = center[col] + r * p
        out_vel[:, col] = rd * p + r * v
        out_acc[:, col] = rdd * p + 2 * rd * v + r * a
    return out_pos, out_vel, out_acc


def realizable_leader(T=30.0, dt=0.01, xi=DEFAULT_PARAMS, **kwargs):
    """Leader trajectory plus the exact input u_h that reproduces it."""
    t = np.arange(int(round(T / dt)) + 1) * dt
    pos, vel, acc = ramped_lemniscate(t, **kwargs)
    u_h = inverse_dynamics(pos, vel, acc, xi)
    return Trajectory(dt=dt, pos=pos, vel=vel), u_h


@pytest.fixture(scope="session")
def leader_30s():
    return realizable_leader(T=30.0, dt=0.01)
