import json
import math
import subprocess
import sys

import numpy as np
import pytest

from circlelab.diophantine import GOLDEN_MEAN
from circlelab.lab import (SweepSpec, csv_string, emit_figures, render_svg,
                           run_sweep, write_csv)
from circlelab.maps import Params, Perturbation
from circlelab.normalform import classify_region
from circlelab.utilexpr import parse_number


def gate_only_spec(**over):
    d = dict(eps_list=[1e-5], eta_range=(0.005, 0.05, 6),
             nu_range=(GOLDEN_MEAN - 0.02, GOLDEN_MEAN + 0.02, 7),
             alpha_expr="golden", pipeline="gate-only", seed=1)
    d.update(over)
    return SweepSpec(**d)


class TestExprParser:
    def test_golden_keyword(self):
        assert parse_number("golden") == pytest.approx(GOLDEN_MEAN, abs=1e-16)

    def test_arithmetic(self):
        assert parse_number("(sqrt(5)-1)/2") == pytest.approx(GOLDEN_MEAN,
                                                              abs=1e-16)
        assert parse_number("1/pi") == pytest.approx(1 / math.pi, abs=1e-16)
        assert parse_number(0.25) == 0.25

    def test_rejects_calls(self):
        with pytest.raises(ValueError):
            parse_number("__import__('os')")


class TestSweep:
    def test_deterministic_csv(self, tmp_path):
        spec = gate_only_spec()
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep(spec, out_csv=str(f1))
        run_sweep(spec, out_csv=str(f2))
        assert f1.read_bytes() == f2.read_bytes()
        sidecar = json.loads((tmp_path / "a.csv.spec.json").read_text())
        assert sidecar["spec_hash"] == spec.spec_hash()

    def test_resume_matches_uninterrupted(self, tmp_path):
        spec = gate_only_spec()
        full = tmp_path / "full.csv"
        run_sweep(spec, out_csv=str(full))
        partial = tmp_path / "part.csv"
        lines = full.read_text().splitlines(keepends=True)
        partial.write_text("".join(lines[: 1 + 17]))  # header + 17 cells
        run_sweep(spec, out_csv=str(partial), resume=True)
        assert partial.read_bytes() == full.read_bytes()

    def test_single_cell_equals_direct_classification(self, golden,
                                                      standard_pert):
        spec = SweepSpec(eps_list=[1e-5], eta_range=(0.03, 0.03, 2),
                         nu_range=(golden.alpha, golden.alpha, 2))
        reports = run_sweep(spec)
        p = Params(golden.alpha, 0.03, 1e-5, golden)
        direct = classify_region(p, standard_pert)
        assert all(r.tag == direct.tag for r in reports)

    def test_gate_region_upward_closed_in_eta(self):
        spec = gate_only_spec(eta_range=(0.001, 0.05, 25))
        reports = run_sweep(spec)
        by_nu = {}
        for r in reports:
            by_nu.setdefault(r.nu, []).append((r.eta, r.tag == "thm1_region"))
        for rows in by_nu.values():
            rows.sort()
            tags = [ok for _, ok in rows]
            first = tags.index(True) if True in tags else len(tags)
            assert all(tags[first:])

    def test_full_pipeline_eps_zero_curve_is_vertical(self, tmp_path):
        spec = SweepSpec(eps_list=[0.0], eta_range=(0.02, 0.06, 5),
                         nu_range=(GOLDEN_MEAN - 0.02, GOLDEN_MEAN + 0.02, 9),
                         pipeline="full")
        reports = run_sweep(spec)
        traced = [r for r in reports if r.tag == "on_c_alpha"]
        assert traced
        # the curve is the exact line nu = alpha at all eta
        for r in traced:
            assert r.nu == pytest.approx(GOLDEN_MEAN, abs=1e-12)
        svg = render_svg(reports)
        assert "<polyline" in svg and "<svg" in svg


class TestFigures:
    def test_empty_reports_csv_header_only(self):
        assert csv_string([]).strip() == "nu,eta,eps,tag,residual,lambda,error"

    def test_emit_files(self, tmp_path):
        reports = run_sweep(gate_only_spec())
        csv_path = tmp_path / "out.csv"
        svg_path = tmp_path / "out.svg"
        written = emit_figures(reports, str(csv_path), str(svg_path))
        assert len(written) == 2
        assert csv_path.read_text().startswith("nu,eta,eps,tag")
        assert svg_path.read_text().startswith("<svg")


class TestCli:
    def run(self, *argv):
        return subprocess.run([sys.executable, "-m", "circlelab.cli"],
                              capture_output=True)

    def test_dioph_certify(self):
        out = subprocess.run(
            ["dioph", "certify", "--alpha", "(sqrt(5)-1)/2", "--q", "1",
             "--K", "128"], capture_output=True, text=True)
        assert out.returncode == 0
        d = json.loads(out.stdout)
        assert set(d) == {"alpha", "gamma", "q", "K"}
        assert d["gamma"] > 0.3

    def test_dioph_rejects_rational(self):
        out = subprocess.run(["dioph", "certify", "--alpha", "0.5"],
                             capture_output=True, text=True)
        assert out.returncode == 2

    def test_circle_russmann_and_c_alpha(self, tmp_path):
        cfg = {"nu": "golden + 0.01", "eta": 0.1, "eps": 1e-4,
               "alpha": "golden"}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = subprocess.run(["circle", "russmann", "--config", str(path)],
                             capture_output=True, text=True)
        assert out.returncode == 0
        d = json.loads(out.stdout)
        assert d["defect"] <= 1e-9
        assert set(d) >= {"lambda", "defect", "iterations", "gamma", "h"}
        out = subprocess.run(
            ["circle", "c-alpha", "--config", str(path),
             "--bracket", "golden-0.01,golden+0.01"],
            capture_output=True, text=True)
        assert out.returncode == 0
        d = json.loads(out.stdout)
        assert abs(d["lambda"]) <= 1e-11

    def test_circle_solve_gt(self, tmp_path):
        cfg = {"nu": 0.3, "eta": 0.1, "eps": 1e-4, "alpha": "golden",
               "gate_cap": 0.35, "grid": 512}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        csv_out = tmp_path / "graph.csv"
        out = subprocess.run(
            ["circle", "solve-gt", "--config", str(path), "--tol", "1e-8",
             "--csv", str(csv_out)], capture_output=True, text=True)
        assert out.returncode == 0
        d = json.loads(out.stdout)
        assert d["residual"] <= 1e-7
        assert len(d["graph"]) == 512
        assert csv_out.read_text().startswith("theta,phi")

    def test_circle_sweep_and_classify(self, tmp_path):
        spec = {"eps_list": [1e-5], "eta_range": [0.01, 0.04, 4],
                "nu_range": [GOLDEN_MEAN - 0.01, GOLDEN_MEAN + 0.01, 5],
                "pipeline": "gate-only"}
        spath = tmp_path / "spec.json"
        spath.write_text(json.dumps(spec))
        out_csv = tmp_path / "sweep.csv"
        out_svg = tmp_path / "sweep.svg"
        out = subprocess.run(
            ["circle", "sweep", "--spec", str(spath), "--out", str(out_csv),
             "--svg", str(out_svg)], capture_output=True, text=True)
        assert out.returncode == 0
        assert out_csv.exists() and out_svg.exists()
        out = subprocess.run(["circle", "classify", "--grid", str(spath)],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert out.stdout.startswith("nu,eta,eps,tag")
        assert len(out.stdout.splitlines()) == 1 + 4 * 5
