import json

import pytest
from click.testing import CliRunner

from uncross.cli import EXIT_NOCROSS, EXIT_PARSE, EXIT_TOOFEW, main
from uncross.events import CSV_HEADER, write_events
from uncross.flowgen import FlowConfig, generate


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A generated day log plus grid metadata, shared across CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = FlowConfig(
        seed=4,
        tick_size=0.01,
        fundamental_price=100.0,
        shape="piecewise",
        total_shares_per_side=120_000,
        peak_mass=0.2,
        n_levels=200,
        delta_star_bp=50.0,
        decay=400.0,
        cancellation_rate=0.2,
        market_shares_per_side=8_000,
    )
    (root / "config.json").write_text(cfg.to_json())
    runner = CliRunner()
    res = runner.invoke(
        main, ["gen", str(root / "config.json"), "--name", "day", "--out-dir", str(root)]
    )
    assert res.exit_code == 0, res.output
    return root


def run(args):
    return CliRunner().invoke(main, args)


def test_gen_outputs(workspace):
    truth = json.loads((workspace / "day_truth.json").read_text())
    assert sorted(truth) == ["clear_time_us", "delta_star_bp", "l_star", "peak_mass"]
    meta = json.loads((workspace / "day_meta.json").read_text())
    assert meta["tick_size"] == 0.01
    assert (workspace / "gen.manifest.json").exists()


def test_replay_outputs(workspace):
    res = run(["replay", str(workspace / "day.csv"),
               "--grid", str(workspace / "day_meta.json"),
               "--out-dir", str(workspace)])
    assert res.exit_code == 0, res.output
    rec = json.loads((workspace / "day_clearing.json").read_text())
    assert set(rec) == {"p_a", "q_a", "imbalance", "vbm", "vbr", "vsm", "vsr"}
    meta = json.loads((workspace / "day_meta.json").read_text())
    assert rec["p_a"] == meta["p_a"]
    assert rec["q_a"] == meta["q_a"]
    book_lines = (workspace / "day_book.csv").read_text().strip().split("\n")
    assert book_lines[0] == "price,buy_shares,sell_shares"
    assert book_lines[-1].startswith("MARKET,")


def test_impact_outputs(workspace):
    res = run(["impact", str(workspace / "day.csv"),
               "--grid", str(workspace / "day_meta.json"),
               "--out-dir", str(workspace)])
    assert res.exit_code == 0, res.output
    for side in "BS":
        lines = (workspace / f"day_impact_{side}.csv").read_text().strip().split("\n")
        assert lines[0] == "side,i,omega_num,omega_den,price,impact_log"
        assert len(lines) > 5
    signed = (workspace / "day_impact_signed.csv").read_text().strip().split("\n")
    assert signed[0] == "eps_omega,eps_impact"
    xs = [float(l.split(",")[0]) for l in signed[1:]]
    assert xs == sorted(xs)


def test_regime_and_stats(workspace):
    res = run(["regime", str(workspace / "day.csv"),
               "--grid", str(workspace / "day_meta.json"),
               "--date", "2017-05-05", "--full-metrics",
               "--out-dir", str(workspace)])
    assert res.exit_code == 0, res.output
    lines = (workspace / "day_regime.csv").read_text().strip().split("\n")
    assert lines[0] == "date,side,delta_bp,l_tilde,omega_max,beta_emp,beta_theo,n_points"
    assert len(lines) == 3  # one row per side
    res2 = run(["stats", str(workspace / "day_metrics.csv"),
                "--rcdf", "omega0", "--out-dir", str(workspace)])
    assert res2.exit_code == 0, res2.output
    report = json.loads((workspace / "stats_report.json").read_text())
    assert report["n_rows"] == 2
    assert 0.0 <= report["p_zero_impact"]["fraction"] <= 1.0
    rcdf_lines = (workspace / "stats_rcdf_omega0.csv").read_text().strip().split("\n")
    assert rcdf_lines[0] == "value,fraction_ge"


def test_response_and_series(workspace):
    res = run(["response", str(workspace / "day.csv"),
               "--grid", str(workspace / "day_meta.json"),
               "--warmup", "10", "--out-dir", str(workspace)])
    assert res.exit_code == 0, res.output
    lines = (workspace / "day_response.csv").read_text().strip().split("\n")
    assert lines[0] == "bin_lo,bin_hi,r1,rm,count"
    res2 = run(["series", str(workspace / "day.csv"),
                "--grid", str(workspace / "day_meta.json"),
                "--interval", "60", "--out-dir", str(workspace)])
    assert res2.exit_code == 0, res2.output
    ind = (workspace / "day_indicative.csv").read_text().strip().split("\n")
    assert ind[0] == "t_us,p_ind,q_ind"
    liq = (workspace / "day_liquidity.csv").read_text().strip().split("\n")
    assert liq[0] == "t_us,side,p_ind,q_ind,l_tilde,l_abs,omega_max,q_max"


def test_density_multi_day(tmp_path):
    paths = []
    for seed in (1, 2):
        cfg = FlowConfig(seed=seed, shape="bell", total_shares_per_side=40_000,
                         peak_mass=0.2, n_levels=80)
        events, _, _ = generate(cfg)
        p = tmp_path / f"d{seed}.csv"
        write_events(p, events)
        paths.append(str(p))
    res = run(["density", *paths, "--tick", "0.01", "--ref", "100.0",
               "--group", "latency", "--out-dir", str(tmp_path)])
    assert res.exit_code == 0, res.output
    lines = (tmp_path / "density_profile.csv").read_text().strip().split("\n")
    assert lines[0] == "x_bp,rho_buy,rho_sell,n_days,group"
    assert {l.split(",")[-1] for l in lines[1:]} == {"HFT", "MIX", "NON"}


def test_density_parallel_matches_sequential(tmp_path):
    paths = []
    for seed in (5, 6, 7):
        cfg = FlowConfig(seed=seed, shape="bell", total_shares_per_side=30_000,
                         peak_mass=0.2, n_levels=60)
        events, _, _ = generate(cfg)
        p = tmp_path / f"p{seed}.csv"
        write_events(p, events)
        paths.append(str(p))
    seq_dir, par_dir = tmp_path / "seq", tmp_path / "par"
    for out, threads in ((seq_dir, "1"), (par_dir, "2")):
        res = run(["density", *paths, "--tick", "0.01", "--ref", "100.0",
                   "--threads", threads, "--out-dir", str(out)])
        assert res.exit_code == 0, res.output
    assert (seq_dir / "density_profile.csv").read_bytes() == (
        par_dir / "density_profile.csv"
    ).read_bytes()


def test_exit_code_parse_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(CSV_HEADER) + "\n0,a,SUBMIT,B,LIMIT,nope,5,HFT,OWN\n")
    res = run(["replay", str(bad), "--tick", "0.1", "--ref", "10.0",
               "--out-dir", str(tmp_path)])
    assert res.exit_code == EXIT_PARSE
    assert "bad price" in res.output


def test_exit_code_no_cross(tmp_path):
    log = tmp_path / "nocross.csv"
    log.write_text(
        ",".join(CSV_HEADER)
        + "\n0,a,SUBMIT,B,LIMIT,9.9,5,HFT,OWN\n1,b,SUBMIT,S,LIMIT,10.1,5,HFT,OWN\n"
    )
    res = run(["replay", str(log), "--tick", "0.1", "--ref", "10.0",
               "--out-dir", str(tmp_path)])
    assert res.exit_code == EXIT_NOCROSS


def test_exit_code_too_few_points(tmp_path):
    log = tmp_path / "thin.csv"
    log.write_text(
        ",".join(CSV_HEADER)
        + "\n0,a,SUBMIT,B,LIMIT,10.0,5,HFT,OWN\n1,b,SUBMIT,S,LIMIT,10.0,5,HFT,OWN\n"
    )
    res = run(["regime", str(log), "--tick", "0.1", "--ref", "10.0",
               "--out-dir", str(tmp_path)])
    assert res.exit_code == EXIT_TOOFEW


def test_unknown_flag_values_enumerated(tmp_path):
    res = run(["impact", "--side", "X", "--tick", "0.1", "--ref", "10.0", "."])
    assert res.exit_code == 2
    assert "'B', 'S'" in res.output or "B, S" in res.output.replace("'", "")


def test_rerun_reproduces_bytes(workspace, tmp_path):
    # fresh run in one directory
    out1 = tmp_path / "run1"
    res = run(["impact", str(workspace / "day.csv"),
               "--grid", str(workspace / "day_meta.json"), "--out-dir", str(out1)])
    assert res.exit_code == 0, res.output
    # replay the manifest into a second directory
    out2 = tmp_path / "run2"
    res2 = run(["rerun", str(out1 / "impact.manifest.json"), "--out-dir", str(out2)])
    assert res2.exit_code == 0, res2.output
    rec = json.loads((out1 / "impact.manifest.json").read_text())
    for name in rec["outputs"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    # the rerun manifest differs only in its recorded output directory
    rec2 = json.loads((out2 / "impact.manifest.json").read_text())
    assert {k: v for k, v in rec.items() if k != "out_dir"} == {
        k: v for k, v in rec2.items() if k != "out_dir"
    }


def test_gen_determinism_via_rerun(tmp_path):
    cfg = FlowConfig(seed=11, shape="constant", total_shares_per_side=20_000,
                     peak_mass=0.3, n_levels=40, cancellation_rate=0.5)
    (tmp_path / "cfg.json").write_text(cfg.to_json())
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    res = run(["gen", str(tmp_path / "cfg.json"), "--out-dir", str(out1)])
    assert res.exit_code == 0, res.output
    res2 = run(["rerun", str(out1 / "gen.manifest.json"), "--out-dir", str(out2)])
    assert res2.exit_code == 0, res2.output
    for name in ("flow.csv", "flow_truth.json", "flow_meta.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
