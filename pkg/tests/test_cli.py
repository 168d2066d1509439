import csv
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from auvcage.bathymetry import DepthMap, read_depth_map, write_depth_map
from auvcage.cli import main
from auvcage.spherical_cage import read_cage

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def lagoon_file(tmp_path):
    d = np.full((14, 14), 3.0)
    d[2:10, 2:10] = 0.0
    d[4:8, 4:8] = 3.0
    d[5, 8:10] = 3.0
    path = tmp_path / "lagoon.txt"
    write_depth_map(path, DepthMap(14, 14, 2.0, d))
    return path


def open_file(tmp_path):
    path = tmp_path / "open.txt"
    write_depth_map(path, DepthMap(14, 14, 2.0, np.full((14, 14), 3.0)))
    return path


def counts(stdout):
    m = re.search(r"cut edges (\d+), wall segments (\d+)", stdout)
    return int(m.group(1)), int(m.group(2))


# gen-map


def test_gen_map_round_trip_is_bit_exact(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(capsys, "gen-map", "--seed", 4, "--size", "20x12", "--cell", 5, "--out", a)[0] == 0
    assert run(capsys, "gen-map", "--seed", 4, "--size", "20x12", "--cell", 5, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    m = read_depth_map(a)
    assert (m.width, m.height, m.cell_size) == (20, 12, 5.0)
    write_depth_map(tmp_path / "c.txt", m)
    assert (tmp_path / "c.txt").read_bytes() == a.read_bytes()


def test_gen_map_without_seed_is_a_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen-map", "--out", str(tmp_path / "m.txt")])
    assert exc.value.code == 2


def test_gen_map_negative_threshold_has_no_land(tmp_path, capsys):
    path = tmp_path / "m.txt"
    assert run(capsys, "gen-map", "--seed", 2, "--size", "16x16", "--island-threshold", -1, "--out", path)[0] == 0
    assert np.all(read_depth_map(path).depths > 0)


# plan-capture


def test_plan_capture_twelve_has_thirty_edges(tmp_path, capsys):
    code, out, _ = run(capsys, "plan-capture", "--n", 12, "--rs", 1.0, "--out", tmp_path / "c")
    assert code == 0
    assert "edges=30" in out
    cage, poses = read_cage(tmp_path / "c" / "cage.txt")
    assert len(cage.edges) == 30
    assert len(poses) == 12
    assert (tmp_path / "c" / "cage.obj").read_text().count("\nf ") + 1 >= 20


def test_plan_capture_rejects_three(tmp_path, capsys):
    code, _, err = run(capsys, "plan-capture", "--n", 3, "--rs", 1.0, "--out", tmp_path / "c")
    assert code == 2
    assert "n" in err


def test_plan_capture_is_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "plan-capture", "--n", 9, "--rs", 2.0, "--h", 1.0, "--seed", 5, "--out", tmp_path / name)
    for f in ("cage.txt", "cage.obj"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


# thomson-stats


def test_thomson_stats_single_trial_has_zero_spread(tmp_path, capsys):
    code, _, _ = run(capsys, "thomson-stats", "--n", "4,6", "--trials", 1, "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "table.csv").open()))
    assert [r["N"] for r in rows] == ["4", "6"]
    assert all(float(r["l_max_std"]) == 0.0 for r in rows)
    assert (tmp_path / "radius.csv").exists()


# simulate


def test_simulate_smoke_is_captured(tmp_path, capsys):
    log = tmp_path / "events.csv"
    code, out, _ = run(capsys, "simulate", SCENARIOS / "smoke.scn", "--out", log)
    assert code == 0
    assert "outcome captured" in out
    last = log.read_text().splitlines()[-1]
    assert ",captured," in last


def test_simulate_immobile_exhausts(capsys):
    assert run(capsys, "simulate", SCENARIOS / "immobile.scn")[0] == 8


def test_simulate_malformed_file_names_the_line(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[map]\nseed = 1\nsize = 8x8\ncell = ten\n")
    code, _, err = run(capsys, "simulate", bad)
    assert code == 2
    assert "line 4" in err


def test_simulate_override_is_validated(capsys):
    code, _, err = run(capsys, "simulate", SCENARIOS / "contain_then_capture.scn", "--ve", 0.1)
    assert code == 2
    assert "exceeds" in err


def test_simulate_missing_file_is_io_error(tmp_path, capsys):
    assert run(capsys, "simulate", tmp_path / "nope.scn")[0] == 1


# plan-contain


def test_plan_contain_island_omits_land_edges(tmp_path, capsys):
    path = lagoon_file(tmp_path)
    code, out, _ = run(
        capsys, "plan-contain", "--map", path, "--sighting", "11 11 -1.5",
        "--starts", "24 11 -1; 25 12 -1; 26 11 -1", "--rs", 3, "--ve", 0.1, "--vp", 1, "--out", tmp_path / "p",
    )
    assert code == 0, out
    edges, segments = counts(out)
    assert segments < edges
    rows = list(csv.DictReader((tmp_path / "p" / "cut.csv").open()))
    assert len(rows) == edges
    assert sum(r["on_land"] == "1" for r in rows) == edges - segments
    assert (tmp_path / "p" / "discs.csv").exists() and (tmp_path / "p" / "assignment.csv").exists()


def test_plan_contain_open_water_walls_every_edge(tmp_path, capsys):
    path = open_file(tmp_path)
    code, out, _ = run(
        capsys, "plan-contain", "--map", path, "--sighting", "14 14 -1.5",
        "--fleet", 40, "--rs", 3, "--ve", 0.1, "--vp", 1, "--out", tmp_path / "p",
    )
    assert code == 0, out
    edges, segments = counts(out)
    assert segments == edges


def test_plan_contain_insufficient_fleet_is_unreachable(tmp_path, capsys):
    path = open_file(tmp_path)
    code, out, _ = run(
        capsys, "plan-contain", "--map", path, "--sighting", "14 14 -1.5",
        "--starts", "1 1 -1", "--rs", 3, "--out", tmp_path / "p",
    )
    assert code == 3
    assert "insufficient agents" in out or "unreachable" in out


def test_plan_contain_ball_past_the_edge_is_impossible(tmp_path, capsys):
    path = open_file(tmp_path)
    code, _, err = run(
        capsys, "plan-contain", "--map", path, "--sighting", "3 3 -1.5", "--elapsed", 100,
        "--fleet", 10, "--out", tmp_path / "p",
    )
    assert code == 4
    assert "containment impossible" in err


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "auvcage.cli", "plan-capture", "--n", "4", "--rs", "1", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "N=4 edges=6" in proc.stdout
