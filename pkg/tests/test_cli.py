"""CLI subcommands produce their promised artifacts."""

from mirrorgame.cli import main
from mirrorgame.sigproc import load_csv


def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "sim.csv"
    rc = main(["simulate", "--dt", "0.01", "--T", "2.0", "--x0", "0.1,0,0.1,0",
               "-o", str(out)])
    assert rc == 0
    traj = load_csv(out)
    assert len(traj) == 201


def test_simulate_with_config_file(tmp_path):
    cfgf = tmp_path / "model.txt"
    cfgf.write_text("alpha = 0.01\nbeta = 0.01\ngamma = 0.01\nomega = 0.02\n"
                    "dt = 0.02\nT = 1.0\n")
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(cfgf), "-o", str(out)]) == 0
    assert len(load_csv(out)) == 51


def test_ilc_outputs(tmp_path):
    out = tmp_path / "ilc"
    rc = main(["ilc", "--iters", "2", "--T", "5", "--dt", "0.01", "-o", str(out)])
    assert rc == 0
    assert (out / "rmse.csv").exists()
    assert (out / "iter000.csv").exists() and (out / "iter002.csv").exists()
    assert (out / "final_buffer.csv").read_text().splitlines()[0] == \
        "u1,u2,e1,e2,ed1,ed2,s1,s2"


def test_metrics_compare(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    main(["simulate", "--dt", "0.01", "--T", "2.0", "-o", str(out)])
    rc = main(["metrics", str(out), str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "rmse = 0.0" in text


def test_bounds_outputs(tmp_path):
    out = tmp_path / "bounds"
    rc = main(["bounds", "--iters", "2", "--T", "5", "--dt", "0.01",
               "-o", str(out)])
    assert rc == 0
    csv = (out / "bounds.csv").read_text().splitlines()
    assert csv[0] == "k,du_lambda_sq,dx_lambda_sq,rhs_bound"
    assert len(csv) == 4
    assert "sigma1   = 8.0" in (out / "bounds.txt").read_text()


def test_bench_outputs(tmp_path):
    dyad = tmp_path / "dyad.txt"
    dyad.write_text("id = d1\nseed = 3\ntrials = 1\ntrial_T = 6\ndt = 0.02\n"
                    "gains = dyad1\n")
    out = tmp_path / "out"
    rc = main(["bench", "--dyad", str(dyad), "--strategies", "pdc,opc",
               "--run-id", "t1", "-o", str(out)])
    assert rc == 0
    run = out / "t1"
    report = (run / "report.csv").read_text().splitlines()
    assert report[0].startswith("dyad,strategy,metric,")
    assert any(line.startswith("d1,pdc,rmse") for line in report)
    assert (run / "radar.csv").exists()
    bounds = (run / "bounds.csv").read_text().splitlines()
    assert bounds[0].startswith("dyad,lambda,c_h,sigma1")
    assert len(bounds) == 4  # three lambda rows
    assert (run / "d1_bench_trial0_leader.csv").exists()
    assert (run / "d1_pdc_trial0_follower.csv").exists()


def test_unknown_config_key_fails_cleanly(tmp_path, capsys):
    cfgf = tmp_path / "model.txt"
    cfgf.write_text("alfa = 1\n")
    rc = main(["simulate", "--config", str(cfgf), "-o", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
