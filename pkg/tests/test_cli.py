import json

import numpy as np

from contmatch.cli import main
from contmatch.families import save_tabulated, TabulatedFamily
from contmatch.linalg import orthonormal_columns


def run(argv):
    return main([str(a) for a in argv])


GAUSS_ARGS = ["--family", "gaussian", "--sigma", "0.05", "--range", "0:1",
              "--grid-count", "512"]


def read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


def test_surface_degenerate_lattice(tmp_path):
    out = tmp_path / "s.csv"
    code = run(["surface", *GAUSS_ARGS, "--lattice", "1", "--out", out, "--no-plot"])
    assert code == 0
    lines = [l for l in read_lines(out) if not l.startswith("#")]
    assert len(lines) == 2  # header + single row
    header = [l for l in read_lines(out) if l.startswith("#")]
    assert header[0].startswith("# contmatch 0.")
    assert "config" in header[1]


def test_missing_family_parameter_exits_2(tmp_path, capsys):
    code = run(["surface", "--family", "gaussian", "--range", "0:1",
                "--out", tmp_path / "x.csv"])
    assert code == 2
    assert "--sigma" in capsys.readouterr().err


def test_leakage_is_numerical_error(tmp_path):
    code = run(["surface", "--family", "gaussian", "--sigma", "0.05",
                "--range", "0:1", "--t-range", "0:0.5", "--grid-count", "256",
                "--out", tmp_path / "x.csv"])
    assert code == 3


def test_verify_m_below_k_exits_2(tmp_path, capsys):
    code = run(["verify", "--family", "gabor", "--sigma", "0.02",
                "--range=-0.05:0.05", "--omega-range", "565:690",
                "--grid-count", "512", "--m", "1", "--out", tmp_path / "v.csv"])
    assert code == 2
    assert "subspace dimension" in capsys.readouterr().err


def test_repeat_runs_are_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.csv"
        code = run(["surface", *GAUSS_ARGS, "--lattice", "9", "--m", "6",
                    "--seed", "42", "--out", out])
        assert code == 0
        outs.append(out)
    a, b = (p.read_bytes() for p in outs)
    # config embeds the user-chosen output path; normalize it before comparing
    a = a.replace(b"a.csv", b"o.csv")
    b = b.replace(b"b.csv", b"o.csv")
    assert a == b
    fa = (tmp_path / "a.png").read_bytes()
    fb = (tmp_path / "b.png").read_bytes()
    assert fa == fb


def test_cover_counts_below_bound(tmp_path):
    out = tmp_path / "c.json"
    code = run(["cover", "--family", "gaussian", "--sigma", "0.05", "--range", "0:0.5",
                "--grid-count", "2048", "--epsilon-list", "0.5,0.25,0.125",
                "--format", "json", "--out", out, "--no-plot"])
    assert code == 0
    rec = json.loads(out.read_text())
    res = rec["results"]
    assert rec["config"]["version"]
    for count, eps in zip(res["counts"], res["epsilons"]):
        assert count <= res["analytic"]["n0"] * eps ** (-res["analytic"]["alpha"])
    assert res["analytic"]["notes"]  # constant discrepancy is flagged in the report


def test_scaling_schema(tmp_path):
    out = tmp_path / "sc.csv"
    code = run(["scaling", *GAUSS_ARGS, "--m", "4,8", "--trials", "3",
                "--lattice", "17", "--signal", "atom:0.31", "--out", out, "--no-plot"])
    assert code == 0
    lines = [l for l in read_lines(out) if not l.startswith("#")]
    assert lines[0].split(",")[:4] == ["m", "trials", "median_gap", "median_sup_gap"]
    assert len(lines) == 3  # header + one row per M
    seeds = lines[1].split(",")[-1].strip('"').split(";")
    assert len(seeds) == 3


def test_match_tabulated_returns_grid_point(tmp_path, rng):
    bases = tuple(orthonormal_columns(rng.standard_normal((32, 2))) for _ in range(4))
    fam = TabulatedFamily(theta_grid=np.array([[0.0], [0.5], [1.0], [1.5]]), bases=bases)
    fam_path = tmp_path / "fam.json"
    save_tabulated(fam, str(fam_path))
    out = tmp_path / "m.json"
    code = run(["match", "--family", "tabulated", "--tabulated", fam_path,
                "--signal", "atom:2", "--format", "json", "--out", out, "--no-plot"])
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["results"]["direct"]["theta"][0] in [0.0, 0.5, 1.0, 1.5]
    assert rec["results"]["direct"]["objective"] <= 1e-10
    assert rec["results"]["timing_s"] is None


def test_match_reports_gap(tmp_path):
    out = tmp_path / "m.json"
    code = run(["match", *GAUSS_ARGS, "--lattice", "33", "--refine", "1", "--m", "8",
                "--seed", "7", "--signal", "atom:0.5", "--format", "json",
                "--out", out, "--no-plot"])
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["results"]["gap"] >= -1e-10
    assert rec["config"]["sketch"]["rows"] == 8


def test_holder_and_embed_and_verify_run(tmp_path):
    code = run(["holder", *GAUSS_ARGS, "--pairs", "32", "--max-separation", "0.05",
                "--out", tmp_path / "h.csv", "--no-plot"])
    assert code == 0
    rows = [l for l in read_lines(tmp_path / "h.csv") if not l.startswith("#")]
    assert rows[0].startswith("coordinate,rho,beta")

    code = run(["embed", *GAUSS_ARGS, "--m", "8,16", "--trials", "2", "--pairs", "20",
                "--out", tmp_path / "e.csv", "--no-plot"])
    assert code == 0
    rows = [l for l in read_lines(tmp_path / "e.csv") if not l.startswith("#")]
    assert len(rows) == 5  # header + 2 M values x 2 trials

    code = run(["verify", *GAUSS_ARGS, "--m", "6", "--trials", "3", "--lattice", "17",
                "--signal", "atom:0.4", "--out", tmp_path / "v.csv", "--no-plot"])
    assert code == 0
    rows = [l for l in read_lines(tmp_path / "v.csv") if not l.startswith("#")]
    assert rows[0].split(",")[:5] == ["trial", "seed", "delta1", "delta2", "bound"]
    assert len(rows) == 4


def test_figures_are_rendered(tmp_path):
    out = tmp_path / "s.csv"
    code = run(["surface", *GAUSS_ARGS, "--lattice", "9", "--out", out])
    assert code == 0
    png = tmp_path / "s.png"
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_surface_modulated_pulse_minimum_cell(tmp_path):
    # time-frequency surface of the modulated raised-cosine test signal:
    # the minimum cell must contain (0, 2*pi*128)
    out = tmp_path / "g.json"
    code = run(["surface", "--family", "gabor", "--sigma", "0.02",
                "--range=-0.25:0.25", "--omega-range", f"{2*np.pi*50}:{2*np.pi*250}",
                "--lattice", "33x33", "--signal", "raised-cosine",
                "--format", "json", "--out", out, "--no-plot"])
    assert code == 0
    rec = json.loads(out.read_text())
    theta = rec["results"]["minimizers"]["direct"]["theta"]
    spacing = (0.5 / 32, 2 * np.pi * 200 / 32)
    assert abs(theta[0] - 0.0) <= spacing[0]
    assert abs(theta[1] - 2 * np.pi * 128) <= spacing[1]


def test_rows_alias_for_m(tmp_path):
    out = tmp_path / "s.csv"
    code = run(["surface", *GAUSS_ARGS, "--lattice", "9", "--rows", "6",
                "--seed", "3", "--out", out, "--no-plot"])
    assert code == 0
    header = [l for l in read_lines(out) if not l.startswith("#")][0]
    assert header.endswith("direct,compressed")


def test_bad_flag_values_exit_2(tmp_path):
    assert run(["surface", "--family", "gaussian", "--sigma", "0.05",
                "--range", "zero:one", "--out", tmp_path / "x.csv"]) == 2
    assert run(["cover", *GAUSS_ARGS, "--epsilon-list", "0.5,big",
                "--out", tmp_path / "x.csv"]) == 2
