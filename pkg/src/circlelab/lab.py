"""Parameter-space sweeps, persistence, and figure emission.

A sweep walks a (nu, eta) grid for each requested perturbation size,
classifies every cell into the hyperbolicity regions, and (in the full
pipeline) traces the zero-translation curve through the grid by
continuation in eta, warm-starting each root solve from its neighbor.
Results are persisted as append-only CSV with a JSON sidecar carrying the
spec hash, so long sweeps are resumable and auditable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diophantine import certify
from .errors import CircleLabError
from .maps import Params, Perturbation
from .normalform import RegionReport, classify_region, default_c2
from .russmann import find_c_alpha
from .utilexpr import parse_number

_TAG_COLORS = {
    "thm1_region": "#2b6cb0",
    "thm2_region": "#68a0d8",
    "on_c_alpha": "#c53030",
    "unresolved": "#d9d9d9",
}


@dataclass(frozen=True)
class SweepSpec:
    """Grid description: eps values, eta and nu ranges, perturbation, pipeline."""

    eps_list: tuple
    eta_range: tuple            # (lo, hi, steps)
    nu_range: tuple             # (lo, hi, steps)
    alpha_expr: str = "golden"
    alpha_q: float = 1.0
    pert: dict = None           # inline perturbation JSON
    pert_ref: str = None        # or a file path
    pipeline: str = "gate-only"  # gate-only | full
    seed: int = 0

    def __post_init__(self):
        if not self.eps_list:
            raise ValueError("eps_list must be nonempty")
        for rng in (self.eta_range, self.nu_range):
            if len(rng) != 3 or int(rng[2]) < 2:
                raise ValueError("ranges are (lo, hi, steps) with steps >= 2")
        if self.pipeline not in ("gate-only", "full"):
            raise ValueError("pipeline must be gate-only or full")

    @staticmethod
    def from_json_dict(d: dict) -> "SweepSpec":
        return SweepSpec(
            eps_list=tuple(d["eps_list"]),
            eta_range=tuple(d["eta_range"]),
            nu_range=tuple(d["nu_range"]),
            alpha_expr=d.get("alpha", "golden"),
            alpha_q=float(d.get("alpha_q", 1.0)),
            pert=d.get("perturbation"),
            pert_ref=d.get("perturbation_path"),
            pipeline=d.get("pipeline", "gate-only"),
            seed=int(d.get("seed", 0)),
        )

    def canonical_json(self) -> str:
        d = {
            "eps_list": list(self.eps_list),
            "eta_range": list(self.eta_range),
            "nu_range": list(self.nu_range),
            "alpha": self.alpha_expr,
            "alpha_q": self.alpha_q,
            "perturbation": self.pert,
            "perturbation_path": self.pert_ref,
            "pipeline": self.pipeline,
            "seed": self.seed,
        }
        return json.dumps(d, sort_keys=True)

    def spec_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def load_perturbation(self) -> Perturbation:
        if self.pert is not None:
            return Perturbation.from_json_dict(self.pert)
        if self.pert_ref:
            with open(self.pert_ref) as fh:
                return Perturbation.from_json_dict(json.load(fh))
        return Perturbation.standard()

    def grids(self):
        eta = np.linspace(self.eta_range[0], self.eta_range[1],
                          int(self.eta_range[2]))
        nu = np.linspace(self.nu_range[0], self.nu_range[1],
                         int(self.nu_range[2]))
        return eta, nu


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


CSV_HEADER = ["nu", "eta", "eps", "tag", "residual", "lambda", "error"]


def report_row(r: RegionReport) -> list:
    return [_fmt(r.nu), _fmt(r.eta), _fmt(r.eps), r.tag,
            _fmt(r.residual), _fmt(r.lam), r.error or ""]


def _thread_cap() -> int:
    env = os.environ.get("CIRCLE_LAB_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_sweep(spec: SweepSpec, out_csv: str = None, resume: bool = False,
              svg_path: str = None):
    """Classify every grid cell; returns the list of RegionReports.

    The full pipeline also traces the zero-translation curve by
    continuation in eta and tags the containing cells.  Per-cell errors are
    recorded in the cell, never aborting the sweep.  With out_csv the rows
    are persisted incrementally in grid order; an existing compatible file
    is extended when resume is set.
    """
    alpha = certify(parse_number(spec.alpha_expr), spec.alpha_q)
    pert = spec.load_perturbation()
    eta_grid, nu_grid = spec.grids()

    cells = [(eps, eta, nu)
             for eps in spec.eps_list for eta in eta_grid for nu in nu_grid]

    traced = {}
    if spec.pipeline == "full":
        for eps in spec.eps_list:
            traced.update(_trace_curve(spec, alpha, pert, eps, eta_grid,
                                       nu_grid))

    def classify_cell(cell):
        eps, eta, nu = cell
        try:
            p = Params(nu, eta, eps, alpha)
        except ValueError as exc:
            return RegionReport(nu, eta, eps, "unresolved", error=str(exc))
        lam = None
        residual = None
        key = (eps, eta)
        if key in traced and traced[key] is not None:
            nu_star, lam_star, defect = traced[key]
            half = 0.5 * abs(nu_grid[1] - nu_grid[0])
            if abs(nu - nu_star) <= half:
                lam, residual = lam_star, defect
        try:
            return classify_region(p, pert, lam=lam, residual=residual)
        except CircleLabError as exc:
            return RegionReport(nu, eta, eps, "unresolved", error=str(exc))

    n_done = 0
    if out_csv and resume and os.path.exists(out_csv):
        with open(out_csv) as fh:
            n_done = max(0, sum(1 for _ in fh) - 1)

    reports = [None] * len(cells)
    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        for i, rep in enumerate(pool.map(classify_cell, cells)):
            reports[i] = rep

    if out_csv:
        mode = "a" if (resume and n_done > 0) else "w"
        with open(out_csv, mode, newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if mode == "w":
                w.writerow(CSV_HEADER)
                n_done = 0
            for rep in reports[n_done:]:
                w.writerow(report_row(rep))
        sidecar = out_csv + ".spec.json"
        with open(sidecar, "w") as fh:
            json.dump({"spec_hash": spec.spec_hash(),
                       "spec": json.loads(spec.canonical_json())}, fh, indent=2)
    if svg_path:
        with open(svg_path, "w") as fh:
            fh.write(render_svg(reports))
    return reports


def _trace_curve(spec: SweepSpec, alpha, pert, eps, eta_grid, nu_grid):
    """nu*(eta) along one eps slice, by warm-started continuation in eta."""
    out = {}
    c2 = default_c2(pert)
    nu_lo, nu_hi = float(nu_grid[0]), float(nu_grid[-1])
    prev_nu = alpha.alpha
    width = max(0.25 * (nu_hi - nu_lo), 4.0 * abs(nu_hi - nu_lo)
                / max(len(nu_grid) - 1, 1))
    for eta in eta_grid:
        key = (eps, float(eta))
        if eta <= 0.0 or eta < 0.25 * c2 * eps:
            out[key] = None
            continue
        try:
            p0 = Params(prev_nu, float(eta), float(eps), alpha)
            lo = max(nu_lo, prev_nu - width)
            hi = min(nu_hi, prev_nu + width)
            nu_star, curve = find_c_alpha(p0, pert, (lo, hi))
            out[key] = (nu_star, curve.lam, curve.defect)
            prev_nu = nu_star
        except CircleLabError as exc:
            out[key] = None
    return out


def write_csv(reports, path_or_buf):
    """Plain CSV dump of reports (header + one row per cell)."""
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rep in reports:
            w.writerow(report_row(rep))
    finally:
        if own:
            fh.close()


def csv_string(reports) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()


def render_svg(reports, width: int = 640, height: int = 480) -> str:
    """Hand-emitted SVG scatter of region tags in the (nu, eta) plane with
    the traced zero-translation cells overlaid as a polyline."""
    if not reports:
        raise ValueError("no reports to draw")
    nus = sorted({r.nu for r in reports})
    etas = sorted({r.eta for r in reports})
    pad = 40.0
    w_cell = (width - 2 * pad) / max(len(nus), 1)
    h_cell = (height - 2 * pad) / max(len(etas), 1)
    x_of = {v: pad + i * w_cell for i, v in enumerate(nus)}
    y_of = {v: height - pad - (i + 1) * h_cell for i, v in enumerate(etas)}

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    curve_pts = []
    for r in reports:
        color = _TAG_COLORS.get(r.tag, "#000000")
        parts.append(
            f'<rect x="{x_of[r.nu]:.2f}" y="{y_of[r.eta]:.2f}" '
            f'width="{w_cell:.2f}" height="{h_cell:.2f}" fill="{color}"/>')
        if r.tag == "on_c_alpha":
            curve_pts.append((r.eta, x_of[r.nu] + 0.5 * w_cell,
                              y_of[r.eta] + 0.5 * h_cell))
    if curve_pts:
        curve_pts.sort()
        pts = " ".join(f"{x:.2f},{y:.2f}" for _, x, y in curve_pts)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="#1a1a1a" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_figures(reports, csv_path: str = None, svg_path: str = None):
    """Persist reports as CSV and/or an SVG region plot; returns the paths."""
    written = []
    if csv_path:
        write_csv(reports, csv_path)
        written.append(csv_path)
    if svg_path:
        with open(svg_path, "w") as fh:
            fh.write(render_svg(reports))
        written.append(svg_path)
    return written
