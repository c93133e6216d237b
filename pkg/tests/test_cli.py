import csv
import subprocess
import sys
from pathlib import Path

import pytest

from liqgeom.cli import FIELD_FLAGS, main
from liqgeom.config import load_config

from oracles import naive_median
from synth import write_depth_csv

DATA = Path(__file__).parent / "data"
SMALL_SIM = ["--n-vertices", "50", "--n-steps", "200", "--snapshot-every", "20"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(Path(root).rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def depth(tmp_path_factory):
    return write_depth_csv(tmp_path_factory.mktemp("depth") / "SYN.csv")


def test_simulate_smoke(tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", *SMALL_SIM, "--out", str(out)]) == 0
    assert "10 snapshots" in capsys.readouterr().out
    for name in ("snapshots.csv.gz", "trajectory.csv", "profiles.csv", "differential_fit.csv",
                 "config.resolved.txt", "VERSION", "run_metadata.txt", "final_edges.txt"):
        assert (out / name).is_file(), name
    traj = read_csv(out / "trajectory.csv")
    assert len(traj) == 10
    assert max(float(r["residual"]) for r in traj) <= 1e-8


def test_simulate_is_byte_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", *SMALL_SIM, "--seed", "4", "--out", str(tmp_path / d)]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_seed_changes_output(tmp_path):
    for seed in ("1", "2"):
        main(["simulate", *SMALL_SIM, "--seed", seed, "--out", str(tmp_path / seed)])
    assert (tmp_path / "1" / "trajectory.csv").read_bytes() != \
        (tmp_path / "2" / "trajectory.csv").read_bytes()


def test_unknown_model_is_config_error(tmp_path, capsys):
    code = main(["fit", str(DATA / "depth_two_venues.csv"), "--models", "gaussian",
                 "--out", str(tmp_path)])
    assert code == 1
    assert "fit.models" in capsys.readouterr().err


def test_bad_argument_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--no-such-flag"])
    assert exc.value.code == 1


def test_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("simulation.seed = 5\nio.output_dir = from_file\n")
    monkeypatch.setenv("LIQGEOM_OUTPUT_DIR", "from_env")
    from liqgeom.cli import build_parser, resolve_config
    args = build_parser().parse_args(["simulate", "--config", str(cfg_file),
                                      "--set", "simulation.seed=6", "--seed", "7"])
    cfg = resolve_config(args)
    assert cfg.simulation.seed == 7 and cfg.io.output_dir == "from_env"
    args = build_parser().parse_args(["simulate", "--config", str(cfg_file), "--out", "flag"])
    assert resolve_config(args).io.output_dir == "flag"
    assert load_config(cfg_file).simulation.seed == 5


def test_every_field_has_a_flag():
    assert len({f for f, _ in FIELD_FLAGS}) == len(FIELD_FLAGS)
    assert ("--geometry-tick-size", "geometry.tick_size") in FIELD_FLAGS


def test_fit_depth_file(tmp_path, depth):
    out = tmp_path / "fit"
    assert main(["fit", str(depth), "--geometry-tick-size", "0.01", "--out", str(out)]) == 0
    rows = read_csv(out / "fit_report.csv")
    assert {(r["asset"], r["side"]) for r in rows} == {("SYN", "bid"), ("SYN", "ask")}
    assert {r["window"] for r in rows} == {"1700000000", "1700000010"}
    ig = [r for r in rows if r["model"] == "integrated_gamma"]
    assert all(r["converged"] == "true" and float(r["r2"]) > 0.99 for r in ig)
    assert all(float(r["delta_aic"]) == 0.0 for r in ig)
    assert len(list((out / "profiles").iterdir())) == 4
    mids = read_csv(out / "mids.csv")
    assert len(mids) == 20 and float(mids[0]["mid"]) == pytest.approx(100.01)


def test_fit_with_workers_matches_serial(tmp_path, depth):
    base = ["fit", str(depth), "--geometry-tick-size", "0.01"]
    assert main(base + ["--out", str(tmp_path / "s")]) == 0
    assert main(base + ["--jobs", "2", "--out", str(tmp_path / "p")]) == 0
    serial, parallel = tree(tmp_path / "s"), tree(tmp_path / "p")
    # the resolved config records io.jobs, everything else must match
    assert serial.pop("config.resolved.txt") != parallel.pop("config.resolved.txt")
    assert serial == parallel


def test_compare_medians(tmp_path, depth, capsys):
    other = write_depth_csv(tmp_path / "ALT.csv", gamma=(0.4, 2.0), seed=3)
    for src in (depth, other):
        assert main(["fit", str(src), "--geometry-tick-size", "0.01",
                     "--out", str(tmp_path / src.stem)]) == 0
    reports = [str(tmp_path / s / "fit_report.csv") for s in ("SYN", "ALT")]
    assert main(["compare", *reports, "--out", str(tmp_path / "cmp")]) == 0
    rows = read_csv(tmp_path / "cmp" / "comparison.csv")
    assert [(r["asset"], r["side"]) for r in rows] == [
        ("ALT", "bid"), ("ALT", "ask"), ("SYN", "bid"), ("SYN", "ask")]
    fit_rows = read_csv(tmp_path / "SYN" / "fit_report.csv")
    for r in rows[2:]:
        mine = [x for x in fit_rows if x["side"] == r["side"]]
        r2 = [float(x["r2"]) for x in mine if x["model"] == "integrated_gamma"]
        dl = [float(x["delta_aic"]) for x in mine if x["model"] == "cumulative_lognormal"]
        assert float(r["r2_integrated_gamma"]) == pytest.approx(naive_median(r2), rel=1e-15)
        assert float(r["delta_aic"]) == pytest.approx(naive_median(dl), rel=1e-15)
        assert int(r["n_windows"]) == 2


def test_compare_rejects_non_report(tmp_path):
    bogus = tmp_path / "x.csv"
    bogus.write_text("a,b\n1,2\n")
    assert main(["compare", str(bogus), "--out", str(tmp_path / "o")]) == 1


def test_ingest_check(capsys):
    assert main(["ingest-check", str(DATA / "depth_two_venues.csv")]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("records=12 venues=2 snapshots=2")


@pytest.mark.parametrize("name", ["depth_bad_size.csv", "depth_unsorted.csv",
                                  "depth_crossed.csv"])
def test_bad_data_exit_2(name, capsys):
    assert main(["ingest-check", str(DATA / name)]) == 2
    assert capsys.readouterr().err.startswith("liqgeom: ")


def test_missing_file_exit_2(tmp_path):
    assert main(["fit", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2


def test_config_value_error_exit_1(tmp_path, capsys):
    assert main(["simulate", "--n-vertices", "1", "--out", str(tmp_path)]) == 1
    assert "simulation.n_vertices" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    import liqgeom.cli as cli
    from liqgeom.errors import Disconnected

    def boom(cfg, out_dir):
        raise Disconnected("graph split")

    monkeypatch.setattr(cli, "simulate", boom)
    assert main(["simulate", "--out", str(tmp_path)]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "liqgeom", "--version"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("liqgeom ")
