"""Real-time session engine and servers for live leader-follower play.

Wire protocol: a persistent bidirectional socket carrying line-delimited
UTF-8 text, one JSON object per line, each with a `type` field.

    client -> server
        hello       {"type": "hello", "config": {...}}
        hp          {"type": "hp", "t": 1.0, "x": 0.1, "y": -0.2}
        solo_upload {"type": "solo_upload", "samples": [[t, x, y], ...]}
        set_gains   {"type": "set_gains", "kp": .., "kv": .., "ks": ..}
        bye         {"type": "bye"}

    server -> client
        welcome     {"type": "welcome", "session_id": "s1", "dt_tick": ..}
        vp          {"type": "vp", "t": .., "x": .., "y": ..}
        metrics     {"type": "metrics", "t": .., "rmse": .., "cv": ..,
                     "svm": .., "eps": .., "k": ..}
        fault       {"type": "fault", "code": "..", "message": "..", "t": ..}

Unknown or malformed messages are rejected with a fault message.  The
workspace is the normalized square [-1, 1]^2; clients scale device
coordinates before sending.

The Session class is a synchronous, deterministic state machine; the
asyncio servers (TCP, and WebSocket when the `websockets` package is
available) only move lines in and out.  Sessions tick either on a wall
clock (live play) or once per ingested leader sample (scripted replay and
tests); every sample consumption is journaled so an archived session
replays bit-exactly.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hkb, metrics
from .controllers import (
    IlcGains,
    OnlineConfig,
    OnlineController,
    OpcWeights,
    error_rate,
    optimal_tracking_baseline,
    pd_control,
)
from .errors import ConfigError, DivergenceError, SessionError
from .kvconfig import parse_kv_text
from .sigproc import FilterSpec, load_csv, resample, save_csv
from .trajectory import Trajectory

__all__ = [
    "SessionConfig", "Session", "SessionManager", "LiveMetrics",
    "parse_message", "encode_message", "replay_archive", "serve",
]

CLIENT_TYPES = ("hello", "hp", "solo_upload", "set_gains", "bye")
SERVER_TYPES = ("welcome", "vp", "metrics", "fault")


# --- wire grammar ------------------------------------------------------------------


def parse_message(line: str) -> dict:
    """One wire line to a validated message dict; raises ConfigError."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    if not isinstance(msg, dict) or "type" not in msg:
        raise ConfigError("message must be an object with a 'type' field")
    mtype = msg["type"]
    if mtype not in CLIENT_TYPES + SERVER_TYPES:
        raise ConfigError(f"unknown message type {mtype!r}")
    checks = {
        "hp": ("t", "x", "y"),
        "set_gains": ("kp", "kv", "ks"),
        "vp": ("t", "x", "y"),
        "metrics": ("t", "rmse", "cv", "svm", "eps", "k"),
        "fault": ("code", "message", "t"),
        "welcome": ("session_id", "dt_tick"),
    }
    nullable = {("metrics", "rmse"), ("metrics", "cv"), ("metrics", "svm"),
                ("metrics", "eps")}
    for key in checks.get(mtype, ()):
        if key not in msg:
            raise ConfigError(f"{mtype} message missing field {key!r}")
        if key in ("code", "message", "session_id"):
            continue
        v = msg[key]
        if v is None and (mtype, key) in nullable:
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{mtype}.{key} must be a number, got {v!r}")
    if mtype == "hello" and not isinstance(msg.get("config", {}), dict):
        raise ConfigError("hello.config must be an object")
    if mtype == "solo_upload":
        samples = msg.get("samples")
        if (not isinstance(samples, list) or len(samples) < 2
                or not all(isinstance(s, list) and len(s) == 3 for s in samples)):
            raise ConfigError("solo_upload.samples must be a list of [t, x, y]")
    return msg


def encode_message(msg: dict) -> str:
    """Wire encoding; non-finite numbers become null (JSON has no NaN)."""
    clean = {}
    for k, v in msg.items():
        if isinstance(v, float) and not math.isfinite(v):
            clean[k] = None
        else:
            clean[k] = v
    return json.dumps(clean, separators=(",", ":"), allow_nan=False)


def _num(v, name):
    try:
        out = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {v!r}") from exc
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite, got {v!r}")
    return out


@dataclass(frozen=True)
class SessionConfig:
    """Controller, model, filter, and tick settings of one session."""

    dt_tick: float = 1.0 / 60.0
    controller: str = "ilc"
    gains: IlcGains = field(default_factory=lambda: IlcGains(0.31, 0.01, 0.02))
    params: hkb.HkbParams = field(default_factory=lambda: hkb.DEFAULT_PARAMS)
    online: OnlineConfig = field(default_factory=OnlineConfig)
    filter: FilterSpec = field(default_factory=lambda: FilterSpec(5, "causal"))
    x0: tuple = (0.0, 0.0, 0.0, 0.0)
    cv_window_periods: float = 10.0
    u_max: float | None = None

    def __post_init__(self):
        if self.dt_tick <= 0:
            raise ConfigError(f"dt_tick must be positive, got {self.dt_tick}")
        if self.controller not in ("ilc", "pdc", "opc"):
            raise ConfigError(f"unknown controller {self.controller!r}")
        if self.filter.mode != "causal":
            raise ConfigError("live sessions need a causal filter")
        if len(self.x0) != 4 or not all(math.isfinite(v) for v in self.x0):
            raise ConfigError(f"x0 must be four finite numbers, got {self.x0}")

    @classmethod
    def from_wire(cls, cfg: dict) -> "SessionConfig":
        known = {"dt_tick", "controller", "gains", "hkb", "online", "filter", "x0"}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        gains_d = cfg.get("gains", {})
        if not isinstance(gains_d, dict):
            raise ConfigError("config.gains must be an object")
        gains = IlcGains(kp=_num(gains_d.get("kp", 0.31), "gains.kp"),
                         kv=_num(gains_d.get("kv", 0.01), "gains.kv"),
                         ks=_num(gains_d.get("ks", 0.02), "gains.ks"))
        hkb_d = cfg.get("hkb", {})
        params = hkb.HkbParams(
            alpha=_num(hkb_d.get("alpha", 0.01), "hkb.alpha"),
            beta=_num(hkb_d.get("beta", 0.01), "hkb.beta"),
            gamma=_num(hkb_d.get("gamma", 0.01), "hkb.gamma"),
            omega=_num(hkb_d.get("omega", 0.02), "hkb.omega"))
        online_d = cfg.get("online", {})
        online = OnlineConfig(
            eps_th=float(online_d.get("eps_th", 0.05)),
            T=_num(online_d.get("T", 30.0), "online.T"),
            max_inner_iters=int(online_d.get("max_inner_iters", 10)),
            eps_floor=_num(online_d.get("eps_floor", 1e-3), "online.eps_floor"))
        filt_d = cfg.get("filter", {})
        filt = FilterSpec(window=int(filt_d.get("window", 5)), mode="causal")
        x0 = tuple(_num(v, "x0") for v in cfg.get("x0", (0.0, 0.0, 0.0, 0.0)))
        return cls(dt_tick=_num(cfg.get("dt_tick", 1.0 / 60.0), "dt_tick"),
                   controller=str(cfg.get("controller", "ilc")),
                   gains=gains, params=params, online=online, filter=filt, x0=x0)

    def to_kv(self) -> dict:
        return {
            "dt_tick": repr(self.dt_tick),
            "controller": self.controller,
            "kp": repr(self.gains.kp), "kv": repr(self.gains.kv),
            "ks": repr(self.gains.ks),
            "alpha": repr(self.params.alpha), "beta": repr(self.params.beta),
            "gamma": repr(self.params.gamma), "omega": repr(self.params.omega),
            "eps_th": repr(self.online.eps_th), "T": repr(self.online.T),
            "max_inner_iters": str(self.online.max_inner_iters),
            "eps_floor": repr(self.online.eps_floor),
            "filter_window": str(self.filter.window),
            "x0": ", ".join(repr(v) for v in self.x0),
        }

    @classmethod
    def from_kv(cls, kv: dict) -> "SessionConfig":
        x0 = tuple(float(p) for p in kv.get("x0", "0,0,0,0").split(","))
        return cls(
            dt_tick=float(kv["dt_tick"]),
            controller=kv["controller"],
            gains=IlcGains(float(kv["kp"]), float(kv["kv"]), float(kv["ks"])),
            params=hkb.HkbParams(float(kv["alpha"]), float(kv["beta"]),
                                 float(kv["gamma"]), float(kv["omega"])),
            online=OnlineConfig(eps_th=float(kv["eps_th"]), T=float(kv["T"]),
                                max_inner_iters=int(kv["max_inner_iters"]),
                                eps_floor=float(kv["eps_floor"])),
            filter=FilterSpec(int(kv["filter_window"]), "causal"),
            x0=x0)


# --- causal live metrics -----------------------------------------------------------


class _CausalPhase:
    """Incremental phase tracker for one axis of one player."""

    def __init__(self, dt):
        self.dt = dt
        self.n = 0
        self.pos_sum = 0.0
        self.prev_sign = 0
        self.crossings = []

    def update(self, p, v):
        self.n += 1
        self.pos_sum += p
        center = self.pos_sum / self.n
        c = p - center
        sign = 1 if c > 0 else (-1 if c < 0 else self.prev_sign)
        if self.prev_sign < 0 and sign > 0:
            self.crossings.append(self.n - 1)
        if sign != 0:
            self.prev_sign = sign
        if len(self.crossings) >= 2:
            period = (np.mean(np.diff(self.crossings))) * self.dt
            omega = 2.0 * math.pi / period
            return math.atan2(v / omega, c), omega
        return None, None


class LiveMetrics:
    """Causal running metrics shared by the live stream and offline replay.

    RMSE and the follower's motion range accumulate over all paired ticks;
    the phase-locking index uses a sliding window of roughly the last
    `window_periods` estimated leader periods and is NaN until both players
    have produced two center crossings per axis.
    """

    def __init__(self, dt, window_periods=10.0):
        self.dt = dt
        self.window_periods = window_periods
        self.n_pairs = 0
        self.sq_acc = 0.0
        self.max_x = 0.0
        self.max_y = 0.0
        self.phase = {("hp", 0): _CausalPhase(dt), ("hp", 1): _CausalPhase(dt),
                      ("vp", 0): _CausalPhase(dt), ("vp", 1): _CausalPhase(dt)}
        self.phasor_prefix = [0.0 + 0.0j]
        self.omega_hp = None

    def note_vp_sample(self, pos):
        self.max_x = max(self.max_x, abs(float(pos[0])))
        self.max_y = max(self.max_y, abs(float(pos[1])))

    def update_pair(self, hp_pos, hp_vel, vp_pos, vp_vel):
        dx = hp_pos[0] - vp_pos[0]
        dy = hp_pos[1] - vp_pos[1]
        self.sq_acc += dx * dx + dy * dy
        self.n_pairs += 1
        dphi = 0.0
        have_all = True
        for col in (0, 1):
            ph, om = self.phase[("hp", col)].update(hp_pos[col], hp_vel[col])
            pv, _ = self.phase[("vp", col)].update(vp_pos[col], vp_vel[col])
            if ph is None or pv is None:
                have_all = False
            else:
                dphi += ph - pv
                if col == 0:
                    self.omega_hp = om
        if have_all:
            wrapped = math.atan2(math.sin(dphi), math.cos(dphi))
            self.phasor_prefix.append(self.phasor_prefix[-1]
                                      + complex(math.cos(wrapped), math.sin(wrapped)))
        else:
            self.phasor_prefix.append(self.phasor_prefix[-1])

    @property
    def rmse(self):
        if self.n_pairs == 0:
            return float("nan")
        return math.sqrt(self.sq_acc / self.n_pairs)

    @property
    def svm(self):
        return self.max_x * self.max_y

    @property
    def cv(self):
        total = len(self.phasor_prefix) - 1
        if total == 0 or self.omega_hp is None:
            return float("nan")
        period_ticks = (2.0 * math.pi / self.omega_hp) / self.dt
        window = int(min(total, max(1, round(self.window_periods * period_ticks))))
        s = self.phasor_prefix[total] - self.phasor_prefix[total - window]
        return abs(s) / window

    def report(self) -> metrics.MetricsReport:
        return metrics.MetricsReport(rmse=self.rmse, cv=self.cv, svm=self.svm,
                                     n=self.n_pairs)


# --- session -----------------------------------------------------------------------


@dataclass
class _IngestRecord:
    tick: int
    t: float
    x: float
    y: float


class Session:
    """Deterministic state machine of one leader-follower session."""

    def __init__(self, session_id: str, cfg: SessionConfig):
        self.id = session_id
        self.cfg = cfg
        self.state = "open"
        self.fault = None
        self.tick_index = 0
        self.drops = 0
        self.overruns = 0
        x0 = np.asarray(cfg.x0, dtype=float)
        self._controller = OnlineController(cfg.params, cfg.gains, cfg.online, x0=x0)
        self._opc_weights = OpcWeights() if cfg.controller == "opc" else None
        self._pending: list[_IngestRecord] = []
        self._ingest_log: list[_IngestRecord] = []
        self._last_t = -math.inf
        self._raw_window: list[np.ndarray] = []
        self._view_pos = None
        self._view_vel = None
        self._view_t = None
        self._solo: np.ndarray | None = None
        self._solo_traj: Trajectory | None = None
        self.live = LiveMetrics(cfg.dt_tick, cfg.cv_window_periods)
        self.live.note_vp_sample(x0[[0, 2]])
        self._hp_rows = []   # (tick, pos, vel) view at each paired tick
        self._vp_rows = [(0, x0.copy())]
        self._stream_rows = []

    # -- ingestion --

    def ingest_hp(self, t: float, x: float, y: float) -> bool:
        """Queue a leader sample; stale timestamps are dropped and counted."""
        self._require_open()
        if not all(math.isfinite(v) for v in (t, x, y)):
            self.drops += 1
            return False
        if t <= self._last_t:
            self.drops += 1
            return False
        self._last_t = t
        self._pending.append(_IngestRecord(tick=-1, t=t, x=x, y=y))
        return True

    def upload_solo(self, samples) -> None:
        self._require_open()
        try:
            arr = np.asarray(samples, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solo samples must be numeric: {exc}") from exc
        if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) < 2:
            raise ConfigError("solo samples must be (n >= 2, 3)")
        if not np.isfinite(arr).all():
            raise ConfigError("solo samples must be finite")
        t = arr[:, 0]
        dts = np.diff(t)
        if np.any(dts <= 0):
            raise ConfigError("solo timestamps must increase")
        traj = Trajectory(dt=float(np.mean(dts)), t0=float(t[0]), pos=arr[:, 1:3],
                          vel=np.gradient(arr[:, 1:3], float(np.mean(dts)), axis=0))
        self._solo_traj = traj
        # feature values on the tick grid; ticks wrap around a short recording
        grid = (traj if np.isclose(traj.dt, self.cfg.dt_tick, rtol=1e-9, atol=0)
                else resample(traj, self.cfg.dt_tick))
        self._solo = np.array(grid.pos)

    def set_gains(self, kp: float, kv: float, ks: float) -> None:
        self._require_open()
        self._controller.gains = IlcGains(kp=kp, kv=kv, ks=ks)

    def _require_open(self):
        if self.state != "open":
            raise SessionError(f"session {self.id} is {self.state}")

    # -- ticking --

    def _consume_pending(self):
        """Latest-sample-wins decimation of everything queued since last tick."""
        if not self._pending:
            return
        for rec in self._pending:
            rec.tick = self.tick_index
            self._ingest_log.append(rec)
        latest = self._pending[-1]
        self._pending.clear()
        raw = np.array([latest.x, latest.y])
        self._raw_window.append(raw)
        if len(self._raw_window) > self.cfg.filter.window:
            self._raw_window.pop(0)
        filtered = np.mean(self._raw_window, axis=0)
        if self._view_pos is not None and latest.t > self._view_t:
            vel = (filtered - self._view_pos) / (latest.t - self._view_t)
        else:
            vel = np.zeros(2)
        self._view_pos = filtered
        self._view_vel = vel
        self._view_t = latest.t

    def tick(self) -> list:
        """Advance one step; returns the wire messages this tick produced."""
        self._require_open()
        start = time.perf_counter()
        self._consume_pending()
        t_now = self.tick_index * self.cfg.dt_tick
        ctl = self._controller

        if self._view_pos is not None:
            self.live.update_pair(self._view_pos, self._view_vel,
                                  ctl.position, ctl.velocity)
            self._hp_rows.append((self.tick_index, self._view_pos.copy(),
                                  self._view_vel.copy()))

        try:
            if self.cfg.controller == "ilc":
                fv = None
                if self._solo is not None and len(self._solo):
                    fv = self._solo[self.tick_index % len(self._solo)]
                diag = ctl.step(self.cfg.dt_tick, self._view_pos, self._view_vel,
                                feature_val=fv)
                eps, k_inner = diag.eps, diag.k_inner
            else:
                eps, k_inner = float("nan"), 0
                if self._view_pos is not None:
                    eps = error_rate(self._view_pos, ctl.position,
                                     self.cfg.online.eps_floor)
                    if self.cfg.controller == "pdc":
                        u = pd_control(self._view_pos - ctl.position,
                                       self._view_vel - ctl.velocity, ctl.gains)
                    else:
                        ref = np.tile(self._view_pos, (self._opc_weights.horizon, 1))
                        u = optimal_tracking_baseline(self.cfg.params, ctl.x, ref,
                                                      self._opc_weights,
                                                      self.cfg.dt_tick)
                    ctl.u = np.asarray(u, dtype=float)
                ctl.x = hkb.step(ctl.x, self.cfg.params, ctl.u, self.cfg.dt_tick,
                                 u_max=self.cfg.u_max)
        except DivergenceError as exc:
            self.state = "faulted"
            self.fault = {"code": "divergence", "message": str(exc), "t": t_now}
            return [dict(type="fault", **self.fault)]

        self.tick_index += 1
        t_next = self.tick_index * self.cfg.dt_tick
        self._vp_rows.append((self.tick_index, ctl.x.copy()))
        self.live.note_vp_sample(ctl.position)
        rep = self.live
        self._stream_rows.append((t_now, eps, k_inner, rep.rmse, rep.cv, rep.svm))
        out = [
            {"type": "vp", "t": t_next, "x": float(ctl.position[0]),
             "y": float(ctl.position[1])},
            {"type": "metrics", "t": t_now, "rmse": rep.rmse, "cv": rep.cv,
             "svm": rep.svm, "eps": eps, "k": k_inner},
        ]
        elapsed = time.perf_counter() - start
        if elapsed > self.cfg.dt_tick:
            self.overruns += 1
        return out

    # -- closing and archiving --

    def close(self, archive_dir=None) -> dict:
        if self.state == "closed":
            raise SessionError(f"session {self.id} already closed")
        final = self.live.report()
        summary = {
            "session_id": self.id,
            "state": self.state,
            "ticks": self.tick_index,
            "drops": self.drops,
            "overruns": self.overruns,
            "fault": self.fault,
            "report": final,
        }
        if archive_dir is not None:
            self._write_archive(Path(archive_dir))
        self.state = "closed"
        return summary

    def _write_archive(self, root: Path) -> None:
        d = root / self.id
        d.mkdir(parents=True, exist_ok=True)
        kv = self.cfg.to_kv()
        (d / "config.txt").write_text(
            "\n".join(f"{k} = {v}" for k, v in kv.items()) + "\n", encoding="utf-8")

        dt = self.cfg.dt_tick
        states = np.array([s for _, s in self._vp_rows])
        vp = Trajectory.from_states(states, dt=dt, t0=0.0)
        save_csv(vp, d / "vp.csv")

        if self._hp_rows:
            first = self._hp_rows[0][0]
            pos = np.array([p for _, p, _ in self._hp_rows])
            vel = np.array([v for _, _, v in self._hp_rows])
            hp = Trajectory(dt=dt, t0=first * dt, pos=pos, vel=vel)
            save_csv(hp, d / "hp.csv")
        else:
            (d / "hp.csv").write_text("t,x,y,vx,vy\n", encoding="utf-8")

        lines = ["tick,t,x,y"]
        for rec in self._ingest_log + self._pending:
            lines.append(f"{rec.tick},{rec.t!r},{rec.x!r},{rec.y!r}")
        (d / "ingest.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

        lines = ["t,eps,k,rmse,cv,svm"]
        for t, eps, k, r, c, s in self._stream_rows:
            lines.append(f"{t!r},{eps!r},{k},{r!r},{c!r},{s!r}")
        (d / "stream.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

        rep = self.live.report()
        extra = [rep.to_kv_text(),
                 f"ticks = {self.tick_index}", f"drops = {self.drops}",
                 f"overruns = {self.overruns}", f"state = {self.state}"]
        if self.fault:
            extra.append(f"fault_code = {self.fault['code']}")
            extra.append(f"fault_message = {self.fault['message']}")
            extra.append(f"fault_t = {self.fault['t']!r}")
        if self._solo_traj is not None:
            save_csv(self._solo_traj, d / "solo.csv")
        (d / "metrics.txt").write_text("\n".join(extra) + "\n", encoding="utf-8")


def replay_archive(archive_dir) -> Session:
    """Re-run an archived session from its journal; returns the fresh session."""
    d = Path(archive_dir)
    kv = parse_kv_text((d / "config.txt").read_text(encoding="utf-8"),
                       str(d / "config.txt"))
    cfg = SessionConfig.from_kv(kv)
    session = Session("replay", cfg)
    if (d / "solo.csv").exists():
        solo = load_csv(d / "solo.csv")
        session.upload_solo(np.column_stack([solo.t, solo.pos]))
    by_tick: dict[int, list] = {}
    n_ticks = 0
    for i, line in enumerate((d / "ingest.csv").read_text(encoding="utf-8")
                             .splitlines()):
        if i == 0 or not line.strip():
            continue
        tick_s, t_s, x_s, y_s = line.split(",")
        by_tick.setdefault(int(tick_s), []).append(
            (float(t_s), float(x_s), float(y_s)))
    stream = (d / "stream.csv").read_text(encoding="utf-8").splitlines()
    n_ticks = len([ln for ln in stream[1:] if ln.strip()])
    for n in range(n_ticks):
        for (t, x, y) in by_tick.get(n, []):
            session.ingest_hp(t, x, y)
        session.tick()
    return session


class SessionManager:
    """Owns all live sessions; ids are deterministic counters."""

    def __init__(self, archive_dir=None):
        self.archive_dir = archive_dir
        self.sessions: dict[str, Session] = {}
        self._counter = 0

    def open_session(self, cfg: SessionConfig) -> Session:
        self._counter += 1
        sid = f"s{self._counter:04d}"
        session = Session(sid, cfg)
        self.sessions[sid] = session
        return session

    def close_session(self, sid: str) -> dict:
        session = self.sessions.pop(sid, None)
        if session is None:
            raise SessionError(f"unknown session {sid!r}")
        return session.close(self.archive_dir)


# --- servers ----------------------------------------------------------------------


class _Connection:
    """Protocol handler shared by the TCP and WebSocket transports."""

    def __init__(self, manager: SessionManager, pace: str):
        self.manager = manager
        self.pace = pace
        self.session: Session | None = None

    def handle_line(self, line: str) -> list:
        """Returns wire messages to send back."""
        try:
            msg = parse_message(line)
        except ConfigError as exc:
            return [{"type": "fault", "code": "bad-message",
                     "message": str(exc), "t": self._now()}]
        mtype = msg["type"]
        try:
            if mtype == "hello":
                cfg = SessionConfig.from_wire(msg.get("config", {}))
                self.session = self.manager.open_session(cfg)
                return [{"type": "welcome", "session_id": self.session.id,
                         "dt_tick": self.session.cfg.dt_tick}]
            if self.session is None:
                raise SessionError("say hello first")
            if mtype == "hp":
                self.session.ingest_hp(msg["t"], msg["x"], msg["y"])
                if self.pace == "hp":
                    return self.session.tick()
                return []
            if mtype == "solo_upload":
                self.session.upload_solo(msg["samples"])
                return []
            if mtype == "set_gains":
                self.session.set_gains(msg["kp"], msg["kv"], msg["ks"])
                return []
            if mtype == "bye":
                self.manager.close_session(self.session.id)
                self.session = None
                return []
            return []
        except (ConfigError, SessionError) as exc:
            return [{"type": "fault", "code": "rejected", "message": str(exc),
                     "t": self._now()}]

    def _now(self) -> float:
        if self.session is None:
            return 0.0
        return self.session.tick_index * self.session.cfg.dt_tick

    def on_disconnect(self):
        if self.session is not None:
            try:
                self.manager.close_session(self.session.id)
            except SessionError:
                pass
            self.session = None


async def _tcp_client(reader, writer, manager, pace):
    conn = _Connection(manager, pace)
    ticker = None

    async def wall_ticker():
        while conn.session is not None and conn.session.state == "open":
            await asyncio.sleep(conn.session.cfg.dt_tick)
            if conn.session is None or conn.session.state != "open":
                break
            for out in conn.session.tick():
                writer.write((encode_message(out) + "\n").encode())
            await writer.drain()

    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            outs = conn.handle_line(line.decode("utf-8", errors="replace").strip())
            for out in outs:
                writer.write((encode_message(out) + "\n").encode())
            await writer.drain()
            if pace == "wall" and conn.session is not None and ticker is None:
                ticker = asyncio.ensure_future(wall_ticker())
    finally:
        if ticker is not None:
            ticker.cancel()
        conn.on_disconnect()
        writer.close()


async def serve(host="127.0.0.1", port=7712, archive_dir=None, pace="hp",
                ws_port=None):
    """Run the TCP line server (and a WebSocket bridge when available)."""
    manager = SessionManager(archive_dir=archive_dir)
    server = await asyncio.start_server(
        lambda r, w: _tcp_client(r, w, manager, pace), host, port)
    ws_server = None
    if ws_port is not None:
        try:
            import websockets
        except ImportError as exc:
            raise ConfigError("WebSocket endpoint needs the websockets package") from exc

        async def ws_handler(ws):
            conn = _Connection(manager, pace)
            try:
                async for raw in ws:
                    for out in conn.handle_line(raw):
                        await ws.send(encode_message(out))
            finally:
                conn.on_disconnect()

        ws_server = await websockets.serve(ws_handler, host, ws_port)
    async with server:
        try:
            await server.serve_forever()
        finally:
            if ws_server is not None:
                ws_server.close()
