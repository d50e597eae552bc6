"""Command-line entry points.

Subcommands: simulate (open-loop runs), ilc (offline learning trials),
metrics (compare two trajectory files), bounds (constants and weighted-norm
sequences), bench (dyad experiments and matching report), serve (live
session server).
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import hkb, metrics
from .controllers import (
    FeatureSignal,
    IlcGains,
    TABLE1_PRESETS,
    load_gain_presets,
    run_ilc_trial,
)
from .convergence import (
    BoundConfig,
    empirical_contraction,
    feature_gap_lambda_sq,
    lipschitz_constant,
    sigma_components,
)
from .errors import MirrorGameError
from .harness import (
    DyadConfig,
    parse_dyad_config,
    matching_report,
    realizable_leader,
    run_benchmark_pair,
    run_dyad,
)
from .kvconfig import load_kv
from .sigproc import load_csv, save_csv


def _parse_gains(text: str, preset_file=None) -> IlcGains:
    presets = dict(TABLE1_PRESETS)
    if preset_file:
        presets.update(load_gain_presets(preset_file))
    if text in presets:
        return presets[text]
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise MirrorGameError("gains must be a preset name or 'kp,kv,ks'")
    return IlcGains(*parts)


def _params_from_args(args) -> tuple[hkb.HkbParams, float, float]:
    """Oscillator params, dt, T from --config plus direct flags."""
    values = {"alpha": 0.01, "beta": 0.01, "gamma": 0.01, "omega": 0.02,
              "dt": 0.01, "T": 30.0}
    if getattr(args, "config", None):
        kv = load_kv(args.config)
        unknown = set(kv) - set(values)
        if unknown:
            raise MirrorGameError(f"unknown config keys {sorted(unknown)}")
        values.update({k: float(v) for k, v in kv.items()})
    for name in ("dt", "T"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    xi = hkb.HkbParams(values["alpha"], values["beta"], values["gamma"],
                       values["omega"])
    return xi, values["dt"], values["T"]


def cmd_simulate(args) -> int:
    xi, dt, T = _params_from_args(args)
    x0 = np.array([float(v) for v in args.x0.split(",")])
    traj = hkb.simulate(x0, xi, None, dt, T)
    save_csv(traj, args.out)
    print(f"wrote {len(traj)} samples to {args.out}")
    return 0


def cmd_ilc(args) -> int:
    xi, dt, T = _params_from_args(args)
    if args.hp:
        hp = load_csv(args.hp)
        u_h = None
    else:
        from .harness import LeaderSpec
        hp, u_h = realizable_leader(LeaderSpec(t_ramp=2.0), xi, T, dt)
    gains = _parse_gains(args.gains, getattr(args, "gains_file", None))
    feature = FeatureSignal(load_csv(args.solo)) if args.solo else None
    res = run_ilc_trial(xi, hp, feature, gains, iters=args.iters)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(hp, out / "hp.csv")
    for k, traj in enumerate(res.trajectories):
        save_csv(traj, out / f"iter{k:03d}.csv")
    res.final_buffer.save_csv(out / "final_buffer.csv")
    (out / "rmse.csv").write_text(
        "k,rmse\n" + "\n".join(f"{k},{v!r}" for k, v in enumerate(res.rmse)) + "\n",
        encoding="utf-8")
    print("per-iteration 2D position error:")
    for k, v in enumerate(res.rmse):
        print(f"  k={k:2d}  rmse={v:.6f}")
    if u_h is not None:
        np.savetxt(out / "u_h.csv", u_h, delimiter=",", header="u1,u2", comments="")
    return 0


def cmd_metrics(args) -> int:
    a = load_csv(args.a)
    b = load_csv(args.b)
    rep = metrics.report(a, b)
    sys.stdout.write(rep.to_kv_text())
    if args.out:
        Path(args.out).write_text(rep.to_kv_text(), encoding="utf-8")
    return 0


def cmd_bounds(args) -> int:
    xi, dt, T = _params_from_args(args)
    gains = _parse_gains(args.gains, getattr(args, "gains_file", None))
    from .harness import LeaderSpec
    hp, u_h = realizable_leader(LeaderSpec(t_ramp=2.0), xi, T, dt)
    res = run_ilc_trial(xi, hp, None, gains, iters=args.iters)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    c_h = lipschitz_constant([hp] + res.trajectories, xi)
    texts = []
    for lam in (0.1, 1.0, 10.0):
        cfg = BoundConfig(lam=lam, T=T, output_matrix_variant=args.output_variant)
        rep = empirical_contraction(res, u_h, hp, cfg, gains, c_h=c_h)
        texts.append(rep.to_text())
        if lam == 1.0:
            rep.save_lambda_norms_csv(out / "bounds.csv")
    (out / "bounds.txt").write_text("\n".join(texts), encoding="utf-8")
    sys.stdout.write("\n".join(texts))
    return 0


def cmd_bench(args) -> int:
    dyads = [parse_dyad_config(Path(p).read_text(encoding="utf-8"), p)
             for p in args.dyad]
    run_id = args.run_id or f"run-{dyads[0].seed}"
    out = Path(args.out) / run_id
    out.mkdir(parents=True, exist_ok=True)

    benchmark = {}
    strategies: dict[str, dict] = {}
    for cfg in dyads:
        bench = run_benchmark_pair(cfg, trials=args.benchmark_trials)
        benchmark[cfg.id] = bench.stats
        for i, (lead, fol) in enumerate(zip(bench.leaders, bench.followers)):
            save_csv(lead, out / f"{cfg.id}_bench_trial{i}_leader.csv")
            save_csv(fol, out / f"{cfg.id}_bench_trial{i}_follower.csv")
        for strategy in args.strategies.split(","):
            res = run_dyad(replace(cfg, controller=strategy))
            strategies.setdefault(strategy, {})[cfg.id] = res.stats
            for i, (lead, fol) in enumerate(zip(res.leaders, res.followers)):
                save_csv(lead, out / f"{cfg.id}_{strategy}_trial{i}_leader.csv")
                save_csv(fol, out / f"{cfg.id}_{strategy}_trial{i}_follower.csv")

    rep = matching_report(strategies, benchmark)
    (out / "report.csv").write_text(rep.report_csv(), encoding="utf-8")
    (out / "radar.csv").write_text(rep.radar_csv(), encoding="utf-8")
    (out / "radar_plotdata.csv").write_text(rep.plotdata(), encoding="utf-8")

    lines = ["dyad,lambda,c_h,sigma1,sigma2,sigma3,sigma,eta,contraction_holds,"
             "terminal_u_bound,terminal_x_bound"]
    for cfg in dyads:
        hp, u_h = realizable_leader(cfg.leader, hkb.DEFAULT_PARAMS,
                                    cfg.trial_T, cfg.dt) \
            if cfg.leader.pattern == "lemniscate" else (None, None)
        if hp is None:
            continue
        c_h = lipschitz_constant([hp], hkb.DEFAULT_PARAMS)
        gap = 0.0
        if cfg.solo is not None:
            v = FeatureSignal(cfg.solo).on_grid(cfg.dt, len(hp))
            gap = feature_gap_lambda_sq(v, hp.pos, 1.0, cfg.dt)
        for lam in (0.1, 1.0, 10.0):
            bc = BoundConfig(lam=lam, T=cfg.trial_T)
            r = sigma_components(cfg.gains, c_h, bc, feature_gap_sq=gap)
            lines.append(
                f"{cfg.id},{lam!r},{r.c_h!r},{r.sigma1!r},{r.sigma2!r},"
                f"{r.sigma3!r},{r.sigma!r},{r.eta!r},{r.contraction_holds},"
                f"{r.terminal_u_bound!r},{r.terminal_x_bound!r}")
    (out / "bounds.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote report.csv, radar.csv, bounds.csv under {out}")
    return 0


def cmd_serve(args) -> int:
    print(f"session server on {args.host}:{args.port} "
          f"(pace={args.pace}, ws={args.ws_port})")
    from .service import serve
    try:
        asyncio.run(serve(host=args.host, port=args.port,
                          archive_dir=args.archive_dir, pace=args.pace,
                          ws_port=args.ws_port))
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirrorgame",
                                description="2D mirror-game toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="open-loop oscillator run to CSV")
    sp.add_argument("--config", help="key=value file: alpha beta gamma omega dt T")
    sp.add_argument("--x0", default="0.1,0,0.1,0")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("-o", "--out", default="trajectory.csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ilc", help="offline learning trial")
    sp.add_argument("--config")
    sp.add_argument("--hp", help="leader CSV (default: synthetic realizable leader)")
    sp.add_argument("--solo", help="solo CSV for the prescribed feature")
    sp.add_argument("--gains", default="dyad1")
    sp.add_argument("--gains-file", help="extra presets, lines 'name = kp, kv, ks'")
    sp.add_argument("--iters", type=int, default=10)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("-o", "--out", default="ilc_out")
    sp.set_defaults(func=cmd_ilc)

    sp = sub.add_parser("metrics", help="coordination indexes of two trajectories")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("bounds", help="recursion constants and weighted norms")
    sp.add_argument("--config")
    sp.add_argument("--gains", default="dyad1")
    sp.add_argument("--gains-file", help="extra presets, lines 'name = kp, kv, ks'")
    sp.add_argument("--iters", type=int, default=8)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--output-variant", choices=("position", "velocity"),
                    default="position")
    sp.add_argument("-o", "--out", default="bounds_out")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("bench", help="dyad experiments and matching report")
    sp.add_argument("--dyad", action="append", required=True,
                    help="dyad config file (repeatable)")
    sp.add_argument("--strategies", default="ilc,pdc,opc")
    sp.add_argument("--benchmark-trials", type=int, default=3)
    sp.add_argument("--run-id")
    sp.add_argument("-o", "--out", default="out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("serve", help="live session server")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=7712)
    sp.add_argument("--ws-port", type=int)
    sp.add_argument("--archive-dir", default="sessions")
    sp.add_argument("--pace", choices=("wall", "hp"), default="wall")
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MirrorGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
