"""A scripted live session: ingest, tick, stream, archive, bit-exact replay.

Drives the session engine directly (the TCP/WebSocket servers only move
lines in and out of this same state machine).
"""

import tempfile
from pathlib import Path

import numpy as np

from mirrorgame.controllers import IlcGains, OnlineConfig
from mirrorgame.harness import LeaderSpec, synth_leader
from mirrorgame.service import Session, SessionConfig, replay_archive
from mirrorgame.sigproc import load_csv

cfg = SessionConfig(dt_tick=1.0 / 60.0, controller="ilc",
                    gains=IlcGains(0.31, 0.01, 0.0),
                    online=OnlineConfig(eps_th=0.05, T=10.0))
leader = synth_leader(LeaderSpec(center=(0.2, 0.1)), T=10.0, dt=cfg.dt_tick)

session = Session("demo", cfg)
for j in range(len(leader) - 1):
    session.ingest_hp(float(leader.t[j]), float(leader.pos[j, 0]),
                      float(leader.pos[j, 1]))
    msgs = session.tick()
m = [x for x in msgs if x["type"] == "metrics"][0]
print(f"after {session.tick_index} ticks: rmse={m['rmse']:.4f} "
      f"cv={m['cv']:.4f} svm={m['svm']:.4f} eps={m['eps']:.3f} k={m['k']}")
print(f"drops={session.drops} overruns={session.overruns}")

with tempfile.TemporaryDirectory() as d:
    session.close(d)
    arch = Path(d) / "demo"
    print("archive files:", sorted(p.name for p in arch.iterdir()))
    vp = load_csv(arch / "vp.csv")
    replayed = replay_archive(arch)
    rep_states = np.array([s for _, s in replayed._vp_rows])
    print("replay bit-exact:", bool(np.array_equal(rep_states, vp.states())))
