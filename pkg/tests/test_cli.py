import csv
import json
import os

import pytest

from liouville_steklov import cli
from liouville_steklov.cli import main, parse_grid
from liouville_steklov.errors import NotConverged
from liouville_steklov.verification import Certificate

FAST = ["--n-per-arc", "16"]


def run(tmp_path, *argv):
    return main([*argv, *FAST, "--out", str(tmp_path)])


# ---------------------------------------------------------------- spectrum


def test_spectrum_intersection(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--mode", "intersection", "--ell", "0.5", "--k", "6") == 0
    doc = json.loads((tmp_path / "spectrum-intersection-ell0.5.json").read_text())
    assert len(doc["eigenvalues"]) == 6
    assert abs(doc["eigenvalues"][1] - 1) <= 1e-6
    assert doc["multiplicities"][1] == 1
    assert json.loads(capsys.readouterr().out) == doc


def test_spectrum_disk_csv(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--disk", "--k", "7", "--format", "csv") == 0
    rows = list(csv.DictReader((tmp_path / "spectrum-disk.csv").open()))
    mus = [float(r["mu"]) for r in rows]
    assert max(abs(m - e) for m, e in zip(mus, [0, 1, 1, 2, 2, 3, 3])) <= 1e-8
    assert [int(r["multiplicity"]) for r in rows][1] == 2
    assert (tmp_path / "spectrum-disk.json").exists()


def test_spectrum_from_alpha(tmp_path):
    assert run(tmp_path, "spectrum", "--alpha", "1.5") == 0
    assert len(list(tmp_path.glob("spectrum-union-*.json"))) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--mode", "union", "--ell", "1.5"],
        ["spectrum", "--mode", "union"],
        ["spectrum", "--disk", "--ell", "0.5"],
        ["spectrum", "--alpha", "1.0"],
        ["spectrum", "--mode", "lens", "--ell", "0.5"],
        ["spectrum", "--disk", "--tol", "-1"],
    ],
)
def test_spectrum_usage_errors(tmp_path, capsys, argv):
    assert run(tmp_path, *argv) == 1
    assert "error" in capsys.readouterr().err


def test_spectrum_ell_range_message(tmp_path, capsys):
    run(tmp_path, "spectrum", "--mode", "union", "--ell", "1.5")
    assert "outside the supported range" in capsys.readouterr().err


def test_no_command(capsys):
    assert main([]) == 1


def test_not_converged_exit(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise NotConverged("no plateau")

    monkeypatch.setattr(cli, "solve", boom)
    assert run(tmp_path, "spectrum", "--disk") == 2
    assert "not converged" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


# ---------------------------------------------------------------- sweep


def test_sweep_empty_grid(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--mode", "intersection", "--grid", "") == 1
    assert "empty" in capsys.readouterr().err


def test_sweep_needs_mode(tmp_path):
    assert run(tmp_path, "sweep", "--grid", "0.5") == 1


def test_sweep_rows_and_rerun(tmp_path):
    argv = ["sweep", "--mode", "union", "--grid", "0.3,0.6", "--jobs", "1", "--svg", "--format", "csv"]
    assert run(tmp_path, *argv) == 0
    path = tmp_path / "sweep-union.csv"
    first = path.read_bytes()
    rows = list(csv.DictReader(path.open()))
    assert [r["ell"] for r in rows] == ["0.29999999999999999", "0.59999999999999998"]
    assert list(rows[0]) == ["ell", "mu_1", "mu_2", "mu_3", "mu_4", "gap_to_1", "verdict", "error"]
    for r in rows:
        assert r["verdict"] == "pass" and r["error"] == ""
        assert abs(float(r["mu_3"]) - 1) <= 1e-5
        assert float(r["gap_to_1"]) >= 1e-3
    assert (tmp_path / "sweep-union.svg").read_text().startswith("<?xml")
    assert run(tmp_path, *argv) == 0
    assert path.read_bytes() == first


def test_sweep_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["sweep", "--mode", "intersection", "--grid", "0.2:0.4:0.1"]
    assert run(a, *base, "--jobs", "1") == 0
    assert run(b, *base, "--jobs", "2") == 0
    assert (a / "sweep-intersection.csv").read_bytes() == (b / "sweep-intersection.csv").read_bytes()


def test_sweep_row_failure(tmp_path, monkeypatch, capsys):
    real = cli.check_eigenvalue_placement

    def flaky(ell, mode, settings):
        if ell == 0.4:
            raise NotConverged("forced")
        return real(ell, mode, settings)

    monkeypatch.setattr(cli, "check_eigenvalue_placement", flaky)
    assert run(tmp_path, "sweep", "--mode", "intersection", "--grid", "0.3,0.4", "--jobs", "1") == 2
    rows = list(csv.DictReader((tmp_path / "sweep-intersection.csv").open()))
    assert rows[0]["verdict"] == "pass"
    assert rows[1]["verdict"] == "fail" and rows[1]["error"].startswith("NotConverged")
    assert rows[1]["mu_1"] == "nan"
    assert "ell=0.4" in capsys.readouterr().err


# ---------------------------------------------------------------- verify


def test_verify_alpha(tmp_path, capsys):
    assert run(tmp_path, "verify", "--alpha", "0.5") == 0
    lines = (tmp_path / "certificates.jsonl").read_text().splitlines()
    docs = [json.loads(s) for s in lines]
    assert all(d["verdict"] == "pass" for d in docs)
    assert {"mu_alpha_identity", "morse_index"} <= {d["name"] for d in docs}
    assert capsys.readouterr().out.splitlines() == lines


def test_verify_alpha_one(tmp_path, capsys):
    assert run(tmp_path, "verify", "--alpha", "1.0") == 1
    assert "--regular-control" in capsys.readouterr().err


def test_verify_alpha_too_large(tmp_path, capsys):
    assert run(tmp_path, "verify", "--alpha", "2.5") == 1
    assert "for alpha >= 2 the equation has no solution" in capsys.readouterr().err


def test_verify_regular_control(tmp_path):
    assert run(tmp_path, "verify", "--regular-control") == 0
    (doc,) = [json.loads(s) for s in (tmp_path / "certificates.jsonl").read_text().splitlines()]
    assert doc["verdict"] == "pass"


def test_verify_failure_names_certificate(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "check_mu_alpha_identity", lambda a: Certificate("mu_alpha_identity", {"alpha": a}, 2.0, 1.0, 0.0))
    assert run(tmp_path, "verify", "--alpha", "0.5") == 2
    err = capsys.readouterr().err
    assert "certificate failed: mu_alpha_identity" in err
    assert (tmp_path / "certificates.jsonl").exists()


# ---------------------------------------------------------------- config and environment


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "from-config"
    cfg.write_text(f"# overrides\nn_per_arc = 12\nout = '{out}'\nformat = csv\nk = 3\n")
    assert main(["spectrum", "--disk", "--config", str(cfg)]) == 0
    doc = json.loads((out / "spectrum-disk.json").read_text())
    assert doc["n_per_arc"] == 12 and len(doc["eigenvalues"]) == 3
    assert (out / "spectrum-disk.csv").exists()
    # explicit flags win over the file
    assert main(["spectrum", "--disk", "--config", str(cfg), "--n-per-arc", "16", "--k", "2"]) == 0
    doc = json.loads((out / "spectrum-disk.json").read_text())
    assert doc["n_per_arc"] == 16 and len(doc["eigenvalues"]) == 2


@pytest.mark.parametrize("text", ["bogus = 1\n", "k = many\n", "no equals sign\n"])
def test_config_errors(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["spectrum", "--disk", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_missing_config(tmp_path):
    assert main(["spectrum", "--disk", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_env_out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    assert main(["spectrum", "--disk", *FAST]) == 0
    assert (tmp_path / "env" / "spectrum-disk.json").exists()


# ---------------------------------------------------------------- plot


def _spectrum(tmp_path, *argv):
    assert run(tmp_path, "spectrum", *argv) == 0
    return next(tmp_path.glob("spectrum-*.json"))


def _markers(svg):
    return svg.count('r="6"')


def test_plot_nodal_markers(tmp_path):
    src = _spectrum(tmp_path / "s", "--mode", "intersection", "--ell", "0.5")
    assert run(tmp_path, "plot", "--input", str(src), "--index", "2") == 0
    svg = (tmp_path / (src.stem + "-eig2.svg")).read_text()
    # the x-eigenfunction vanishes where the boundary meets the y axis
    assert _markers(svg) == 2
    size, ext = 480, 1.0 + 0.5 + 0.15
    x_axis = format(ext * size / (2 * ext), ".3f")
    assert svg.count(f'<circle cx="{x_axis}"') == 2


def test_plot_constant_has_no_markers(tmp_path):
    src = _spectrum(tmp_path / "s", "--disk", "--k", "3")
    assert run(tmp_path, "plot", "--input", str(src), "--index", "1") == 0
    assert _markers((tmp_path / "spectrum-disk-eig1.svg").read_text()) == 0


def test_plot_errors(tmp_path):
    assert run(tmp_path, "plot", "--input", str(tmp_path / "missing.json")) == 1
    assert run(tmp_path, "plot") == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(tmp_path, "plot", "--input", str(bad)) == 1
    src = _spectrum(tmp_path / "s", "--disk", "--k", "3")
    assert run(tmp_path, "plot", "--input", str(src), "--index", "9") == 1


def test_plot_sweep_csv(tmp_path):
    assert run(tmp_path, "sweep", "--mode", "union", "--grid", "0.4", "--jobs", "1") == 0
    assert run(tmp_path, "plot", "--input", str(tmp_path / "sweep-union.csv")) == 0
    assert (tmp_path / "sweep-union.svg").read_text().count("<circle") == 4
    empty = tmp_path / "empty.csv"
    empty.write_text("a,b\n")
    assert run(tmp_path, "plot", "--input", str(empty)) == 1


# ---------------------------------------------------------------- helpers


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.json"
    target.write_text("old")

    def fail(a, b):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", fail)
    with pytest.raises(OSError):
        cli.atomic_write(str(target), "new")
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.json"]


def test_parse_grid():
    assert parse_grid("0.1:0.9:0.1") == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    assert parse_grid("0.2, 0.5 0.7") == [0.2, 0.5, 0.7]
    assert parse_grid("  ") == []
    for bad in ("0.5,0.2", "a:b:c", "0:1:0", "0.1,nan"):
        with pytest.raises(cli.UsageError):
            parse_grid(bad)


def test_fmt():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(3) == "3" and cli.fmt(True) == "true" and cli.fmt("ee") == "ee"
