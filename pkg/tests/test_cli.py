import json
import re

import numpy as np
import pytest

from szfluct import cli
from szfluct.cli import (
    SUMMARY_KEYS,
    emit_csv,
    emit_histogram_svg,
    histogram_svg,
    main,
    parse_args,
    read_samples_csv,
)
from szfluct.symfun import MagicReport


def test_sinc_moments_table(capsys):
    assert main(["sinc-moments", "--kmax", "6"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()[1:]
    assert [int(r.split("\t")[0]) for r in rows] == [2, 3, 4, 5, 6]


def test_variance_rademacher_x2(capsys):
    assert main(["variance", "--phi", "x^2", "--dist", "rademacher"]) == 0
    assert "total: 0\n" in capsys.readouterr().out


def test_usage_errors(capsys):
    assert main(["simulate"]) == 2
    assert main(["simulate", "--n", "4", "--bogus", "1"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["simulate", "--n", "4", "--dist", "cauchy"]) == 2
    assert main(["simulate", "--n", "x"]) == 2
    assert main(["simulate", "--n", "4", "--replicas", "1"]) == 2


def test_csv_round_trip(tmp_path):
    path = tmp_path / "s.csv"
    emit_csv([0.1, -2.5], path)
    assert path.read_text().splitlines() == ["replica,value", "0,0.10000000000000001", "1,-2.5"]
    x = np.random.default_rng(0).standard_normal(500) * 1e-7
    x[3] = -0.0
    emit_csv(x, path)
    back = read_samples_csv(path)
    assert back.tobytes() == x.tobytes()


def test_simulate_writes_bundle(tmp_path, capsys):
    out, summ, svg = tmp_path / "s.csv", tmp_path / "s.json", tmp_path / "h.svg"
    argv = ["simulate", "--n", "32", "--replicas", "300", "--phi", "hermite:3", "--seed", "4", "--out", str(out), "--summary", str(summ), "--svg", str(svg)]
    assert main(argv) == 0
    assert len(out.read_text().splitlines()) == 301
    record = json.loads(summ.read_text())
    assert all(k in record for k in SUMMARY_KEYS)
    assert record["target_kind"] == "exact_finite_n"
    assert record["n"] == 32 and record["seed"] == 4 and record["phi"] == "hermite:3"
    first_svg = svg.read_bytes()
    first_csv = out.read_bytes()
    assert main(argv) == 0
    assert svg.read_bytes() == first_svg
    assert out.read_bytes() == first_csv


def test_report_directory(tmp_path, capsys):
    assert main(["report", "--n", "8", "--replicas", "50", "--out", str(tmp_path / "r")]) == 0
    assert {p.name for p in (tmp_path / "r").iterdir()} == {"samples.csv", "summary.json", "histogram.svg"}
    assert main(["report", "--n", "8"]) == 2


def test_degenerate_histogram(tmp_path, capsys):
    svg = tmp_path / "d.svg"
    assert main(["simulate", "--n", "16", "--replicas", "20", "--dist", "rademacher", "--phi", "x^2", "--svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.count('class="bar"') == 1
    assert "polyline" not in text


def test_histogram_layout():
    x = np.random.default_rng(1).standard_normal(2000)
    text = histogram_svg(x, 1.0)
    assert 'width="800" height="600"' in text
    assert text.count('class="bar"') == 60
    pts = re.search(r'<polyline class="overlay" points="([^"]+)"', text).group(1).split()
    assert len(pts) == 200
    assert histogram_svg(x, 1.0) == text
    assert "polyline" not in histogram_svg(x, None)


def test_histogram_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_histogram_svg([], 1.0, tmp_path / "e.svg")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nn = 16\nphi=x^4\nreplicas=40\n")
    cmd, opts = parse_args(["simulate", "--config", str(cfg), "--replicas", "12"])
    assert cmd == "simulate"
    assert opts["n"] == "16" and opts["phi"] == "x^4" and opts["replicas"] == 12
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    assert main(["simulate", "--config", str(bad)]) == 2


def test_verify_identities_exit_codes(monkeypatch, capsys):
    assert main(["verify-identities", "--n", "3", "--pmax", "5", "--trials", "5", "--seed", "1"]) == 0
    assert "ok" in capsys.readouterr().out
    monkeypatch.setattr(cli, "verify_identities_suite", lambda **kw: MagicReport(False, 1.0, 1, (("magic", 3, 1.0),)))
    assert main(["verify-identities"]) == 1


def test_scan_and_dirichlet_and_hermite(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    assert main(["scan", "--n", "8,16", "--replicas", "200", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert main(["dirichlet", "--n", "4", "--q", "2", "--trials", "2000"]) == 0
    assert main(["hermite", "--phi", "x^4", "--kmax", "4"]) == 0
    text = capsys.readouterr().out
    assert "4,1\n" in text and "2,6\n" in text
    assert main(["dirichlet", "--n", "4", "--trials", "10"]) == 2
