"""Contraction constants and bound checking for the learning iteration.

Makes the convergence analysis executable: the drift's Lipschitz constant
over a state envelope, time-weighted (lambda) norms, the sigma/eta
constants of the input-error recursion

    |du_{k+1}|_l^2  <=  sigma * |du_k|_l^2 + eta,

the terminal bounds implied when sigma < 1, and empirical verification of
the per-iteration inequalities on synthetic runs where the expected input
u_h is known exactly.

All matrix norms are Frobenius.  With the position output matrix, C @ B
vanishes, which pins sigma_1 = 4 * |I|_F^2 = 8 regardless of the gains, so
the contraction condition sigma < 1 is structurally out of reach; the
velocity output variant is provided to explore the regime where the gain
actually enters sigma_1.  This module reports, it does not judge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, inf
from pathlib import Path

import numpy as np

from . import hkb
from .controllers import IlcGains, IlcTrialResult
from .errors import ConfigError
from .trajectory import Trajectory

__all__ = [
    "BoundConfig", "BoundReport", "lipschitz_constant", "lambda_norm",
    "sigma_components", "theorem_bound", "empirical_contraction",
    "feature_gap_lambda_sq",
]


@dataclass(frozen=True)
class BoundConfig:
    """Time weighting, horizon, and output-matrix choice for the bounds."""

    lam: float = 1.0
    T: float = 30.0
    norm: str = "frobenius"
    output_matrix_variant: str = "position"

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.norm != "frobenius":
            raise ConfigError(f"only the frobenius norm is supported, got {self.norm!r}")
        if self.output_matrix_variant not in ("position", "velocity"):
            raise ConfigError(
                f"output variant must be position|velocity, got {self.output_matrix_variant!r}")

    @property
    def c_matrix(self) -> np.ndarray:
        return (hkb.C_POSITION if self.output_matrix_variant == "position"
                else hkb.C_VELOCITY)


@dataclass
class BoundReport:
    """Constants, terminal bounds, and per-iteration empirical norms."""

    c_h: float
    sigma1: float
    sigma2: float
    sigma3: float
    sigma: float
    eta: float
    contraction_holds: bool
    terminal_u_bound: float
    terminal_x_bound: float
    cfg: BoundConfig
    du_lambda_sq: list = field(default_factory=list)
    dx_lambda_sq: list = field(default_factory=list)
    gronwall_rhs: list = field(default_factory=list)
    gronwall_violations: list = field(default_factory=list)
    recursion_violations: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            "bound report",
            f"  lambda   = {self.cfg.lam!r}",
            f"  T        = {self.cfg.T!r}",
            f"  output   = {self.cfg.output_matrix_variant}",
            f"  C_H      = {self.c_h!r}",
            f"  sigma1   = {self.sigma1!r}",
            f"  sigma2   = {self.sigma2!r}",
            f"  sigma3   = {self.sigma3!r}",
            f"  sigma    = {self.sigma!r}",
            f"  eta      = {self.eta!r}",
            f"  contraction_holds = {self.contraction_holds}",
            f"  terminal_u_bound  = {self.terminal_u_bound!r}",
            f"  terminal_x_bound  = {self.terminal_x_bound!r}",
        ]
        if self.du_lambda_sq:
            lines.append(f"  iterations measured = {len(self.du_lambda_sq)}")
            lines.append(f"  gronwall_violations  = {self.gronwall_violations}")
            lines.append(f"  recursion_violations = {self.recursion_violations}")
        return "\n".join(lines) + "\n"

    CSV_HEADER = "k,du_lambda_sq,dx_lambda_sq,rhs_bound"

    def save_lambda_norms_csv(self, path) -> None:
        lines = [self.CSV_HEADER]
        for k, (du, dx, rhs) in enumerate(
                zip(self.du_lambda_sq, self.dx_lambda_sq, self.gronwall_rhs)):
            lines.append(f"{k},{du!r},{dx!r},{rhs!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- building blocks -----------------------------------------------------------

def _block_max_sq(xi: hkb.HkbParams, lo1, hi1, lo2, hi2, grid: int) -> float:
    """Max of (2b*p*v + w^2)^2 + (3a*v^2 + b*p^2 - g)^2 over a 2-D box."""
    a, b, g, w2 = xi.alpha, xi.beta, xi.gamma, xi.omega ** 2
    p = np.linspace(lo1, hi1, grid)[:, None]
    v = np.linspace(lo2, hi2, grid)[None, :]
    t1 = (2.0 * b * p * v + w2) ** 2
    t2 = (3.0 * a * v ** 2 + b * p ** 2 - g) ** 2
    return float((t1 + t2).max())


def lipschitz_constant(envelope, xi: hkb.HkbParams, margin: float = 0.1,
                       grid: int = 41) -> float:
    """Max Frobenius norm of the Jacobian over a state envelope.

    The envelope is one or more trajectories (visited states plus a margin
    box around their range) or an explicit (2, 4) lo/hi box.  The block
    structure of the Jacobian reduces the box search to two 2-D grids.
    """
    if isinstance(envelope, Trajectory):
        envelope = [envelope]
    if isinstance(envelope, (list, tuple)):
        if len(envelope) == 0:
            raise ConfigError("empty envelope")
        states = np.vstack([tr.states() for tr in envelope])
        lo = states.min(axis=0)
        hi = states.max(axis=0)
        span = hi - lo
        lo = lo - margin * span
        hi = hi + margin * span
        traj_max_sq = max(
            float(np.sum(hkb.jacobian(s, xi) ** 2)) for s in states[:: max(1, len(states) // 2000)])
    else:
        box = np.asarray(envelope, dtype=float)
        if box.shape != (2, 4):
            raise ConfigError(f"box envelope must be (2, 4) lo/hi, got {box.shape}")
        lo, hi = box[0], box[1]
        if np.any(hi < lo):
            raise ConfigError("box hi must be >= lo")
        traj_max_sq = 0.0

    bx = _block_max_sq(xi, lo[0], hi[0], lo[1], hi[1], grid)
    by = _block_max_sq(xi, lo[2], hi[2], lo[3], hi[3], grid)
    return float(np.sqrt(max(2.0 + bx + by, traj_max_sq)))


def lambda_norm(series, lam: float, dt: float, t0: float = 0.0) -> float:
    """max over grid points of exp(-lam * t) * |sample| (Frobenius)."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    arr = np.asarray(series, dtype=float)
    if arr.ndim == 1:
        norms = np.abs(arr)
    else:
        norms = np.sqrt((arr.reshape(len(arr), -1) ** 2).sum(axis=1))
    t = t0 + np.arange(len(arr)) * dt
    return float(np.max(np.exp(-lam * t) * norms))


def feature_gap_lambda_sq(v, y_h, lam: float, dt: float) -> float:
    """|v - y_h|_lambda^2, the squared weighted gap between solo and leader."""
    v = np.asarray(v, dtype=float)
    y_h = np.asarray(y_h, dtype=float)
    if v.shape != y_h.shape:
        raise ConfigError(f"shape mismatch {v.shape} vs {y_h.shape}")
    return lambda_norm(v - y_h, lam, dt) ** 2


def sigma_components(gains: IlcGains, c_h: float, cfg: BoundConfig,
                     feature_gap_sq: float = 0.0) -> BoundReport:
    """All recursion constants for the given gains, Lipschitz constant, config."""
    if c_h < 0:
        raise ConfigError(f"c_h must be non-negative, got {c_h}")
    B = hkb.B_MATRIX
    C = cfg.c_matrix
    nb2 = float(np.sum(B ** 2))
    nc2 = float(np.sum(C ** 2))
    CB = C @ B
    sigma1 = 4.0 * float(np.sum((np.eye(2) - gains.kv * CB) ** 2))
    try:
        E = exp((2.0 * c_h + 1.0) * cfg.T)
    except OverflowError:
        E = inf
    # guard zero gains against 0 * inf when the exponential overflows
    gain2 = 4.0 * gains.kp ** 2 * nc2 + 4.0 * c_h ** 2 * gains.kv ** 2 * nc2
    sigma2 = 0.0 if gain2 == 0.0 else nb2 * E * gain2 / (2.0 * cfg.lam)
    sigma3 = (0.0 if gains.ks == 0.0
              else 4.0 * nc2 * nb2 * gains.ks ** 2 * E / cfg.lam)
    sigma = sigma1 + sigma2 + sigma3
    eta = 8.0 * gains.ks ** 2 * feature_gap_sq
    u_b, x_b, holds = theorem_bound(sigma, eta, c_h, cfg)
    return BoundReport(c_h=c_h, sigma1=sigma1, sigma2=sigma2, sigma3=sigma3,
                       sigma=sigma, eta=eta, contraction_holds=holds,
                       terminal_u_bound=u_b, terminal_x_bound=x_b, cfg=cfg)


def theorem_bound(sigma: float, eta: float, c_h: float,
                  cfg: BoundConfig) -> tuple[float, float, bool]:
    """Terminal bounds of the recursion: eta/(1-sigma) for the input error and
    the matching state bound; +inf exactly when sigma >= 1."""
    if sigma >= 1.0 or not np.isfinite(sigma):
        return inf, inf, False
    nb2 = float(np.sum(hkb.B_MATRIX ** 2))
    try:
        E = exp((2.0 * c_h + 1.0) * cfg.T)
    except OverflowError:
        E = inf
    u_b = eta / (1.0 - sigma)
    x_b = eta * nb2 * E / (2.0 * cfg.lam * (1.0 - sigma))
    return u_b, x_b, True


def empirical_contraction(result: IlcTrialResult, u_h, x_h: Trajectory,
                          cfg: BoundConfig, gains: IlcGains,
                          xi: hkb.HkbParams | None = None,
                          c_h: float | None = None,
                          feature_gap_sq: float = 0.0,
                          slack: float = 1.01) -> BoundReport:
    """Measure per-iteration weighted input/state errors against the bounds.

    Only defined for synthetic runs where the expected input u_h is known,
    so du_k = u_h - u_k is exactly computable.  Flags every iteration where
    the state inequality

        |dx_k|_l^2 <= |B|^2 e^{(2 C_H + 1) T} / (2 lam) * |du_k|_l^2

    (checked with multiplicative `slack` for integration tolerance) or the
    input recursion |du_{k+1}|^2 <= sigma |du_k|^2 + eta is violated.
    """
    if u_h is None:
        raise ConfigError("empirical contraction needs the synthetic input u_h")
    u_h = np.asarray(u_h, dtype=float)
    dt = result.dt
    if c_h is None:
        if xi is None:
            raise ConfigError("pass either c_h or the oscillator parameters xi")
        # default envelope: all states visited by the run plus a margin box
        c_h = lipschitz_constant([x_h] + list(result.trajectories), xi)
    rep = sigma_components(gains, c_h, cfg, feature_gap_sq)
    nb2 = float(np.sum(hkb.B_MATRIX ** 2))
    try:
        E = exp((2.0 * c_h + 1.0) * cfg.T)
    except OverflowError:
        E = inf
    states_h = x_h.states()
    for k, (traj, u_k) in enumerate(zip(result.trajectories,
                                        (b.u for b in result.buffers))):
        du_sq = lambda_norm(u_h - u_k, cfg.lam, dt) ** 2
        dx_sq = lambda_norm(states_h - traj.states(), cfg.lam, dt) ** 2
        rhs = nb2 * E / (2.0 * cfg.lam) * du_sq
        rep.du_lambda_sq.append(du_sq)
        rep.dx_lambda_sq.append(dx_sq)
        rep.gronwall_rhs.append(rhs)
        if dx_sq > slack * rhs:
            rep.gronwall_violations.append(k)
    for k in range(len(rep.du_lambda_sq) - 1):
        if rep.du_lambda_sq[k + 1] > rep.sigma * rep.du_lambda_sq[k] + rep.eta + 1e-12:
            rep.recursion_violations.append(k)
    return rep
