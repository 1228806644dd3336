import csv
import json
import hashlib
import os

import numpy as np
import pytest

from ncglab import linalg, triples
from ncglab.cli import run_command


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def manifest(outdir, n=1):
    name = "manifest.json" if n == 1 else f"manifest-{n}.json"
    return read_json(os.path.join(outdir, name))


FAST_ANNEAL = ["--t-final", "0.05", "--refine-iters", "2", "--n-measure", "3",
               "--measure-stride", "2", "--max-steps", "20000",
               "--schedule", "geometric", "--c-speed", "0.2"]


class TestTripleBuild:
    def test_sphere_build(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["triple", "build", "--model", "sphere",
                            "--cutoff", "2", "--out", out]) == 0
        d = linalg.load_matrix(tmp_path / "D.json")
        assert d.shape == (12, 12)
        basis = read_json(tmp_path / "basis.json")
        assert basis["model"] == "sphere"
        assert len(basis["labels"]) == 12
        man = manifest(out)
        assert man["headline"]["dim"] == 12
        assert set(man["outputs"]) == {"D.json", "a.json", "b.json",
                                       "gamma.json", "basis.json"}

    def test_circle_build(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "4", "--out", out]) == 0
        u = linalg.load_matrix(tmp_path / "U.json")
        assert u.shape == (9, 9)

    def test_cutoff_zero_rejected(self, tmp_path):
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "0", "--out", str(tmp_path)]) == 2

    def test_manifest_hashes_match(self, tmp_path):
        out = str(tmp_path)
        run_command(["triple", "build", "--model", "circle", "--cutoff", "3",
                     "--out", out])
        man = manifest(out)
        for name, digest in man["outputs"].items():
            raw = (tmp_path / name).read_bytes()
            assert hashlib.sha256(raw).hexdigest() == digest

    def test_collision_guard_and_force(self, tmp_path):
        out = str(tmp_path)
        args = ["triple", "build", "--model", "circle", "--cutoff", "3",
                "--out", out]
        assert run_command(args) == 0
        assert run_command(args) == 2
        assert run_command(args + ["--force"]) == 0
        # manifests are append-only
        assert (tmp_path / "manifest.json").exists()
        assert (tmp_path / "manifest-2.json").exists()


class TestOutResolution:
    def test_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NCGLAB_OUT", str(tmp_path / "envdir"))
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "3"]) == 0
        assert (tmp_path / "envdir" / "D.json").exists()

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NCGLAB_OUT", str(tmp_path / "envdir"))
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "3",
                            "--out", str(tmp_path / "flagdir")]) == 0
        assert (tmp_path / "flagdir" / "D.json").exists()
        assert not (tmp_path / "envdir").exists()

    def test_config_global_out(self, tmp_path, monkeypatch):
        monkeypatch.delenv("NCGLAB_OUT", raising=False)
        cfgdir = tmp_path / "cfgdir"
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(f'[global]\nout = "{cfgdir}"\n')
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "3", "--config", str(cfg)]) == 0
        assert (cfgdir / "D.json").exists()

    def test_missing_config_rejected(self, tmp_path):
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "3", "--out", str(tmp_path),
                            "--config", str(tmp_path / "nope.toml")]) == 2


class TestUsageErrors:
    def test_unknown_flag(self):
        assert run_command(["triple", "build", "--model", "circle",
                            "--cutoff", "3", "--bogus"]) == 2

    def test_unknown_command(self):
        assert run_command(["frobnicate"]) == 2

    def test_help_exits_zero(self):
        assert run_command(["--help"]) == 0


class TestDefectEval:
    @pytest.fixture()
    def sphere_dir(self, tmp_path):
        out = tmp_path / "triple"
        run_command(["triple", "build", "--model", "sphere", "--cutoff", "2",
                     "--out", str(out)])
        return out

    def test_round_dirac_defect(self, sphere_dir, tmp_path):
        out = tmp_path / "defect"
        assert run_command(["defect", "eval", "--triple", str(sphere_dir),
                            "--dirac", str(sphere_dir / "D.json"),
                            "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["model"] == "sphere"
        # boundary coefficient -27/50 at cutoff 2 on 8 top states
        assert rep["constraint"] == pytest.approx(8 * (27 / 50) ** 2, abs=1e-10)
        assert (out / "heatmap.csv").exists()

    def test_first_order(self, sphere_dir, tmp_path):
        out = tmp_path / "fo"
        assert run_command(["defect", "eval", "--triple", str(sphere_dir),
                            "--dirac", str(sphere_dir / "D.json"),
                            "--first-order", "3", "3",
                            "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["meta"]["first_order"] == [3, 3]

    def test_missing_dirac(self, sphere_dir, tmp_path):
        assert run_command(["defect", "eval", "--triple", str(sphere_dir),
                            "--dirac", str(tmp_path / "nope.json"),
                            "--out", str(tmp_path / "x")]) == 2

    def test_not_a_triple_dir(self, tmp_path):
        assert run_command(["defect", "eval", "--triple", str(tmp_path),
                            "--dirac", str(tmp_path / "nope.json"),
                            "--out", str(tmp_path / "x")]) == 2

    def test_circle_non_adjoint(self, tmp_path):
        tdir = tmp_path / "triple"
        run_command(["triple", "build", "--model", "circle", "--cutoff", "4",
                     "--out", str(tdir)])
        out = tmp_path / "defect"
        assert run_command(["defect", "eval", "--triple", str(tdir),
                            "--dirac", str(tdir / "D.json"),
                            "--non-adjoint", "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["meta"]["adjoint"] is False


class TestAnalytic:
    def test_optimal_c_printed(self, capsys):
        assert run_command(["analytic", "optimal-c", "--cutoff", "6"]) == 0
        assert capsys.readouterr().out.strip() == "0.5"
        assert run_command(["analytic", "optimal-c", "--cutoff", "5"]) == 0
        assert capsys.readouterr().out.strip() == "-0.5"

    def test_family_defaults_to_optimal(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["analytic", "family", "--cutoff", "4",
                            "--out", out]) == 0
        fam = read_json(tmp_path / "family.json")
        assert fam["c"] == 0.5
        assert abs(fam["boundary_coefficient"]) < 1e-12
        assert fam["defect_norm"] <= 1e-9
        assert fam["mu"] == [0.5, 2.5, 2.5, 4.5]

    def test_family_off_optimal(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["analytic", "family", "--cutoff", "4",
                            "--c", "0.0", "--out", out]) == 0
        fam = read_json(tmp_path / "family.json")
        assert fam["defect_norm"] == pytest.approx(
            abs(fam["boundary_coefficient"]) * np.sqrt(16), abs=1e-8)


class TestAnnealCli:
    def test_short_run_outputs(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["anneal", "run", "--model", "circle",
                            "--cutoff", "2", "--seed", "5", "--out", out]
                           + FAST_ANNEAL) == 0
        man = manifest(out)
        assert man["seed"] == 5
        assert man["config"]["param"] == "circle-real"
        assert "best_constraint" in man["headline"]
        with open(tmp_path / "trace.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "T", "E"]
        assert len(rows) > 2
        with open(tmp_path / "spectrum.csv") as fh:
            sources = {row["source"] for row in csv.DictReader(fh)}
        assert sources == {"best", "average", "exact"}

    def test_cutoff_validation(self, tmp_path):
        assert run_command(["anneal", "run", "--model", "circle",
                            "--cutoff", "0", "--out", str(tmp_path)]) == 2

    def test_param_model_mismatch(self, tmp_path):
        assert run_command(["anneal", "run", "--model", "circle",
                            "--cutoff", "2", "--param", "block-p",
                            "--out", str(tmp_path)]) == 2

    def test_from_manifest_replays_bitwise(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_command(["anneal", "run", "--model", "circle",
                            "--cutoff", "2", "--seed", "5", "--out", str(a)]
                           + FAST_ANNEAL) == 0
        assert run_command(["anneal", "run", "--model", "circle",
                            "--cutoff", "2",
                            "--from-manifest", str(a / "manifest.json"),
                            "--out", str(b)]) == 0
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "best.json").read_bytes() == (b / "best.json").read_bytes()


class TestEstimateCli:
    @pytest.fixture()
    def spectrum_csv(self, tmp_path):
        path = tmp_path / "spectrum.csv"
        eig = np.linalg.eigvalsh(triples.build_sphere(20).D)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "eigenvalue"])
            w.writerows([[i, repr(float(v))] for i, v in enumerate(eig)])
        return path

    def test_dimension(self, spectrum_csv, tmp_path):
        out = tmp_path / "est"
        assert run_command(["estimate", "--spectrum", str(spectrum_csv),
                            "--what", "dimension", "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["dimension"] == pytest.approx(2.0, abs=0.05)

    def test_volume_with_window(self, spectrum_csv, tmp_path):
        out = tmp_path / "est"
        assert run_command(["estimate", "--spectrum", str(spectrum_csv),
                            "--what", "volume", "--window", "1", "20",
                            "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["volume"] == pytest.approx(4 * np.pi, rel=0.05)
        assert rep["dim_used"] == 2

    def test_heat(self, spectrum_csv, tmp_path):
        out = tmp_path / "est"
        assert run_command(["estimate", "--spectrum", str(spectrum_csv),
                            "--what", "heat", "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["heat_leading"] == pytest.approx(2.0, rel=0.05)

    def test_missing_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("index,value\n0,1.0\n")
        assert run_command(["estimate", "--spectrum", str(bad),
                            "--what", "dimension",
                            "--out", str(tmp_path / "x")]) == 2

    def test_source_filter(self, tmp_path):
        path = tmp_path / "spectrum.csv"
        eig = np.linalg.eigvalsh(triples.build_sphere(12).D)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "eigenvalue", "source"])
            w.writerows([[i, repr(float(v)), "best"] for i, v in enumerate(eig)])
            w.writerow([0, "1000.0", "average"])
        out = tmp_path / "est"
        assert run_command(["estimate", "--spectrum", str(path),
                            "--what", "dimension", "--out", str(out)]) == 0
        rep = read_json(out / "report.json")
        assert rep["n_eigenvalues"] == len(eig)


class TestReportPipelines:
    def test_analytic_vs_sphere(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["report", "--experiment", "analytic-vs-sphere",
                            "--out", out]) == 0
        with open(tmp_path / "family_spectra.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["operator"] for r in rows} == {"sphere", "family"}
        with open(tmp_path / "boundary.csv") as fh:
            bound = list(csv.DictReader(fh))
        assert [int(r["cutoff"]) for r in bound] == [1, 2, 3, 4]
        for r in bound:
            assert abs(float(r["c"])) == 0.5
            assert abs(float(r["boundary_coefficient"])) < 1e-12
            assert float(r["defect_norm"]) <= 1e-9

    def test_asymptotics(self, tmp_path):
        out = str(tmp_path)
        assert run_command(["report", "--experiment", "asymptotics",
                            "--cutoffs", "10", "20", "--out", out]) == 0
        man = manifest(out)
        assert man["headline"]["dimension_sphere"] == pytest.approx(2.0, abs=0.05)
        assert man["headline"]["dimension_family"] == pytest.approx(2.0, abs=0.05)
        assert man["headline"]["volume_sphere"] == pytest.approx(4 * np.pi,
                                                                 rel=0.05)
        with open(tmp_path / "estimates.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
