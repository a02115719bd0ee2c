"""Command-line front ends: `circle` for the solvers and sweeps, `dioph`
for Diophantine certification."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import graphflow, lab, normalform, russmann
from .diophantine import certify
from .errors import CircleLabError
from .maps import Params, Perturbation
from .utilexpr import parse_number


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _params_from_config(cfg: dict, overrides: dict = None) -> tuple:
    merged = dict(cfg)
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val
    alpha = certify(parse_number(merged.get("alpha", "golden")),
                    float(merged.get("alpha_q", 1.0)))
    p = Params(nu=parse_number(merged["nu"]), eta=float(merged["eta"]),
               eps=float(merged["eps"]), alpha=alpha)
    if "perturbation" in merged and merged["perturbation"] is not None:
        pert = Perturbation.from_json_dict(merged["perturbation"])
    elif merged.get("perturbation_path"):
        with open(merged["perturbation_path"]) as fh:
            pert = Perturbation.from_json_dict(json.load(fh))
    else:
        pert = Perturbation.standard()
    return p, pert, merged


def _emit(obj, out: str = None):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_solve_gt(args) -> int:
    cfg = _load_config(args.config)
    p, pert, merged = _params_from_config(cfg, {
        "nu": args.nu, "eta": args.eta, "eps": args.eps, "alpha": args.alpha})
    k = merged.get("k")
    cap = float(merged.get("gate_cap", graphflow.GATE_CAP))
    res = graphflow.solve_invariant_circle(
        p, pert, k=float(k) if k is not None else None,
        tol=args.tol, M=int(merged.get("grid", graphflow.DEFAULT_GRID)),
        cap=cap)
    _emit({
        "residual": res.residual,
        "iterations": res.iterations,
        "k": res.gate_report.k,
        "C": res.contraction,
        "coincidence": res.coincidence,
        "graph": [float(v) for v in res.graph.values],
    }, args.out)
    if args.csv:
        theta = 2.0 * np.pi * np.arange(res.graph.M) / res.graph.M
        with open(args.csv, "w") as fh:
            fh.write("theta,phi\n")
            for t, v in zip(theta, res.graph.values):
                fh.write(f"{t:.17g},{v:.17g}\n")
    return 0


def cmd_russmann(args) -> int:
    cfg = _load_config(args.config)
    p, pert, merged = _params_from_config(cfg, {
        "nu": args.nu, "eta": args.eta, "eps": args.eps, "alpha": args.alpha})
    curve, trace = russmann.solve_translated_curve(
        p, pert, tol=args.tol,
        modes=int(merged.get("modes", russmann.DEFAULT_CURVE_MODES)))
    _emit({
        "lambda": curve.lam,
        "defect": curve.defect,
        "iterations": trace.iterations,
        "gamma_mean": curve.gamma_mean,
        "gamma": curve.gamma.to_json_dict(),
        "h": curve.h.periodic.to_json_dict(),
    }, args.out)
    return 0


def cmd_c_alpha(args) -> int:
    cfg = _load_config(args.config)
    p, pert, _ = _params_from_config(cfg, {
        "eta": args.eta, "eps": args.eps, "alpha": args.alpha})
    lo, hi = (parse_number(tok) for tok in args.bracket.split(","))
    nu_star, curve = russmann.find_c_alpha(p, pert, (lo, hi))
    _emit({"nu_star": nu_star, "lambda": curve.lam,
           "defect": curve.defect}, args.out)
    return 0


def cmd_normal_form(args) -> int:
    cfg = _load_config(args.config)
    p, pert, merged = _params_from_config(cfg, {
        "nu": args.nu, "eta": args.eta, "eps": args.eps, "alpha": args.alpha})
    curve, _ = russmann.solve_translated_curve(p, pert, tol=1e-12)
    lm = normalform.localize(p, pert, curve, k_max=args.k)
    res = normalform.reduce(lm, p.alpha, args.k)
    _emit({
        "alpha_bar": list(res.alpha_bar),
        "beta_bar": list(res.beta_bar),
        "lambda": res.lam,
        "residual_report": {key: [float(v) for v in vals]
                            for key, vals in res.residual_report.items()},
    }, args.out)
    return 0


def cmd_classify(args) -> int:
    spec = lab.SweepSpec.from_json_dict(_load_config(args.grid))
    reports = lab.run_sweep(spec)
    text = lab.csv_string(reports)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r.error is None for r in reports) else 1


def cmd_sweep(args) -> int:
    spec = lab.SweepSpec.from_json_dict(_load_config(args.spec))
    reports = lab.run_sweep(spec, out_csv=args.out, resume=args.resume,
                            svg_path=args.svg)
    return 0 if all(r.error is None for r in reports) else 1


def _add_param_overrides(sp):
    sp.add_argument("--nu", default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--out", default=None, help="write JSON here instead of stdout")


def main_circle(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="circle",
        description="Attracting invariant circles of dissipative twist maps")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-gt", help="graph-transform fixed point")
    sp.add_argument("--config", required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--csv", default=None, help="also write the graph as CSV")
    _add_param_overrides(sp)
    sp.set_defaults(fn=cmd_solve_gt)

    sp = sub.add_parser("russmann", help="translated-curve solve")
    sp.add_argument("--config", required=True)
    sp.add_argument("--tol", type=float, default=1e-11)
    _add_param_overrides(sp)
    sp.set_defaults(fn=cmd_russmann)

    sp = sub.add_parser("c-alpha", help="trace the zero-translation frequency")
    sp.add_argument("--config", required=True)
    sp.add_argument("--bracket", required=True, help="nu_lo,nu_hi")
    _add_param_overrides(sp)
    sp.set_defaults(fn=cmd_c_alpha)

    sp = sub.add_parser("normal-form", help="order-k normal form constants")
    sp.add_argument("--config", required=True)
    sp.add_argument("--k", type=int, default=normalform.DEFAULT_ORDER)
    _add_param_overrides(sp)
    sp.set_defaults(fn=cmd_normal_form)

    sp = sub.add_parser("classify", help="region classification over a grid")
    sp.add_argument("--grid", required=True, help="sweep-spec JSON")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("sweep", help="full parameter sweep with persistence")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--svg", default=None)
    sp.add_argument("--resume", action="store_true")
    sp.set_defaults(fn=cmd_sweep)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CircleLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main_dioph(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dioph",
                                 description="Diophantine certification")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("certify", help="brute-force (gamma, q) certificate")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--K", type=int, default=1024)
    args = ap.parse_args(argv)
    try:
        rec = certify(parse_number(args.alpha), args.q, args.K)
    except CircleLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"alpha": rec.alpha, "gamma": rec.gamma,
                      "q": rec.q, "K": rec.cutoff_K}))
    return 0


if __name__ == "__main__":
    sys.exit(main_circle())
