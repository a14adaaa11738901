"""Command-line front end: ``sasakipmc <command> [options]``.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 for usage or parameter errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import expr, models, report, suites, theorems
from . import qdiff as qd
from . import surfaces as sf
from .report import CheckRecord, VerificationReport

OUTPUT_ENV = "SASAKIPMC_OUTPUT_DIR"
DEFAULT_OUTPUT = "sasakipmc-output"

CSV_HELP = """CSV outputs (one header row, one row per sample):
  curve files      s, x0..x{m-1}, kappa1, kappa2, kappa3, eta_tangent
  q-grid files     u, v, re_q1, im_q1, abs_dbar_q1, re_q2, im_q2, abs_dbar_q2
  surface files    u, v, K, K_intrinsic, abs_H, a, pmc
  theorem5 scan    c, t, P
The JSON report has schema_version, title, config, seed, checks[{name,
max_residual, mean_residual, tolerance, pass}] and pass; timing goes to a
sibling .timing.json file."""


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return vals


def _common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON file with parameters; explicit flags override it")
    p.add_argument("--out", type=Path, help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")


def _model_flags(p: argparse.ArgumentParser, kind_default: str | None = None) -> None:
    p.add_argument("--model", dest="kind", choices=models.KINDS, help=f"model kind (default {kind_default})")
    p.add_argument("--n", type=int, help="complex dimension of the orbit space")
    p.add_argument("--a", type=float, help="deformation constant for deformed_sphere (> 0)")
    p.add_argument("--k", type=float, help="holomorphic curvature of the ball for ball_times_line (< 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sasakipmc",
        description="Numerical verification of pmc surfaces in Sasakian space forms.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, epilog=CSV_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = add("verify-model", "structure, curvature and phi-symmetry residuals of a model at random points")
    _model_flags(p, "heisenberg")
    p.add_argument("--perturb", type=float, help="metric perturbation amplitude (breaks the identities)")
    p.add_argument("--points", type=int, help="number of random points (default 100)")
    _common(p)

    p = add("theorem2", "build and verify the flat product surface for (c, |H|)")
    p.add_argument("--c", type=float, help="phi-sectional curvature (!= 1)")
    p.add_argument("--h", type=float, help="mean curvature norm (> 0)")
    p.add_argument("--grid", type=int, help="grid points per axis (default 64)")
    p.add_argument("--extent", type=_pair, help="patch side lengths u,v (default 1,1)")
    p.add_argument("--a-scale", type=float, help="scale the structure constant a (detector runs)")
    p.add_argument("--holomorphicity-grids", type=_floats, help="grids for the dbar study (default 32,64,128); empty to skip")
    _common(p)

    p = add("hopf-cylinder", "preimage of a base curve: mean curvature, pmc and Q-form checks")
    _model_flags(p, "standard_sphere")
    p.add_argument("--kappa", type=float, help="base curvature (0 for a geodesic)")
    p.add_argument("--tau", type=float, help="complex torsion of the base circle")
    p.add_argument("--length", type=float, help="base arclength (default 1)")
    p.add_argument("--fiber-length", type=float, help="fiber parameter span (default 0.5)")
    p.add_argument("--grid", type=int, help="grid points per axis (default 64)")
    p.add_argument("--modulation", type=float, help="make the base curvature kappa (1 + m sin 2 pi s)")
    _common(p)

    p = add("helix", "synthesize a curve with constant curvatures and re-extract them")
    _model_flags(p, "heisenberg")
    p.add_argument("--curvatures", type=_floats, help="comma-separated positive curvatures")
    p.add_argument("--length", type=float, help="arclength (default 5)")
    p.add_argument("--steps-per-unit", type=int, help="RK4 steps per unit length (>= 1000)")
    p.add_argument("--no-legendre", action="store_true", default=None, help="do not force the tangent orthogonal to xi")
    _common(p)

    p = add("theorem5-scan", "sign of (1-c)t^4 + (c-5)t^2 - 16 on a (c, t) grid")
    p.add_argument("--c-min", type=float, help="default -50")
    p.add_argument("--c-max", type=float, help="default 0.999")
    p.add_argument("--t-steps", type=int, help="interior t samples in (0, 1) (default 100)")
    p.add_argument("--c-steps", type=int, help="c samples (default 100)")
    p.add_argument("--bound", type=float, help="required upper bound for the maximum (default -14)")
    _common(p, seed=False)

    p = add("surface", "invariants of a user immersion given by expressions in u, v")
    _model_flags(p, "heisenberg")
    p.add_argument("--x", dest="expressions", help="comma-separated chart coordinates, e.g. 'u,v,u*v'")
    p.add_argument("--u-range", type=_pair, help="default 0,1")
    p.add_argument("--v-range", type=_pair, help="default 0,1")
    p.add_argument("--grid", type=int, help="grid points per axis (default 64)")
    _common(p, seed=False)
    return parser


# -- parameter merging ----------------------------------------------------------

def _settings(args: argparse.Namespace, keys: list[str], defaults: dict) -> dict:
    """defaults < JSON config < explicit flags."""
    merged = dict(defaults)
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(data) - set(keys) - {"seed", "out"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(data)
    for k in keys + ["seed"]:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _output_dir(args, merged: dict) -> Path:
    if args.out is not None:
        return args.out
    if merged.get("out"):
        return Path(merged["out"])
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def _split(merged: dict, cls) -> tuple[dict, int | None]:
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in merged.items() if k in names}, merged.get("seed")


def _finish(rep: VerificationReport, out: Path, name: str) -> int:
    path = rep.write(out / f"{name}.json")
    for line in rep.summary_lines():
        print(line)
    print(f"report: {path}")
    return 0 if rep.passed else 1


# -- commands -------------------------------------------------------------------

def cmd_verify_model(args) -> int:
    keys = ["kind", "n", "a", "k", "perturb", "points"]
    merged = _settings(args, keys, {"kind": "heisenberg", "n": 1, "seed": 0})
    fields, seed = _split(merged, suites.ModelSuiteConfig)
    cfg = suites.ModelSuiteConfig(**fields)
    rep = suites.verify_model(cfg, seed=seed if seed is not None else 0)
    return _finish(rep, _output_dir(args, merged), "verify-model")


def cmd_theorem2(args) -> int:
    keys = ["c", "h", "grid", "extent", "a_scale", "holomorphicity_grids"]
    merged = _settings(args, keys, {"seed": 0})
    if "holomorphicity_grids" in merged and merged["holomorphicity_grids"] is not None:
        merged["holomorphicity_grids"] = tuple(int(g) for g in merged["holomorphicity_grids"]) or None
    if "extent" in merged:
        merged["extent"] = tuple(merged["extent"])
    fields, seed = _split(merged, theorems.Theorem2Config)
    cfg = theorems.Theorem2Config(**fields)
    rep = theorems.verify_theorem2(None, cfg, seed=seed)
    out = _output_dir(args, merged)
    curves = rep.artifacts.get("curves", {})
    model = rep.artifacts["surface"].model if "surface" in rep.artifacts else None
    for name, item in curves.items():
        report.curve_csv(out / f"theorem2_{name}.csv", item["curve"], model)
    geom = rep.artifacts.get("geometry")
    if geom is not None:
        sf.export_csv(geom, out / "theorem2_surface.csv")
        try:
            qd.q_forms(qd.isothermal_patch(geom)).export_csv(out / "theorem2_qgrid.csv")
        except models.PreconditionError as exc:
            rep.notes.append(f"q-grid not written: {exc}")
    return _finish(rep, out, "theorem2")


def cmd_hopf_cylinder(args) -> int:
    keys = ["kind", "n", "a", "k", "kappa", "tau", "length", "fiber_length", "grid", "modulation"]
    merged = _settings(args, keys, {})
    fields, seed = _split(merged, suites.CylinderConfig)
    cfg = suites.CylinderConfig(**fields)
    rep = suites.verify_cylinder(cfg, seed=seed)
    out = _output_dir(args, merged)
    sf.export_csv(rep.artifacts["geometry"], out / "hopf_cylinder_surface.csv")
    if "qgrid" in rep.artifacts:
        rep.artifacts["qgrid"].export_csv(out / "hopf_cylinder_qgrid.csv")
    return _finish(rep, out, "hopf-cylinder")


def cmd_helix(args) -> int:
    keys = ["kind", "n", "a", "k", "curvatures", "length", "steps_per_unit"]
    merged = _settings(args, keys + ["legendre_start"], {})
    if args.no_legendre:
        merged["legendre_start"] = False
    fields, seed = _split(merged, suites.HelixConfig)
    cfg = suites.HelixConfig(**fields)
    rep = suites.verify_helix(cfg, seed=seed)
    out = _output_dir(args, merged)
    if "extracted" in rep.artifacts:
        model = models.make_model(cfg.kind, cfg.n, a=cfg.a, k=cfg.k)
        report.curve_csv(out / "helix.csv", rep.artifacts["extracted"], model)
    return _finish(rep, out, "helix")


def cmd_theorem5_scan(args) -> int:
    keys = ["c_min", "c_max", "t_steps", "c_steps", "bound"]
    merged = _settings(args, keys, {"c_min": -50.0, "c_max": 0.999, "t_steps": 100, "c_steps": 100, "bound": -14.0})
    for k in ("t_steps", "c_steps"):
        if int(merged[k]) < 1:
            raise models.ModelParameterError(f"{k} must be >= 1")
    scan = theorems.theorem5_polynomial_scan((merged["c_min"], merged["c_max"]), int(merged["t_steps"]), int(merged["c_steps"]))
    rep = VerificationReport("theorem5-scan", {k: merged[k] for k in keys})
    rep.data.update(scan)
    rep.add_flag("all_negative", scan["all_negative"])
    rep.checks.append(CheckRecord("max_value", scan["max_value"], scan["max_value"], float(merged["bound"])))
    out = _output_dir(args, merged)
    c = np.linspace(merged["c_min"], merged["c_max"], int(merged["c_steps"]))
    t = np.linspace(0.0, 1.0, int(merged["t_steps"]) + 2)[1:-1]
    C, T = np.meshgrid(c, t, indexing="ij")
    report.write_csv(out / "theorem5_scan.csv", {"c": C, "t": T, "P": theorems.theorem5_polynomial(C, T)})
    print(f"all_negative: {str(scan['all_negative']).lower()}  max_value: {scan['max_value']:.6g}")
    return _finish(rep, out, "theorem5-scan")


def cmd_surface(args) -> int:
    keys = ["kind", "n", "a", "k", "expressions", "u_range", "v_range", "grid"]
    merged = _settings(args, keys, {"kind": "heisenberg", "n": 1, "u_range": (0.0, 1.0), "v_range": (0.0, 1.0), "grid": 64})
    if not merged.get("expressions"):
        raise UsageError("surface needs --x with one expression per chart coordinate")
    model = models.make_model(merged["kind"], int(merged["n"]), a=merged.get("a"), k=merged.get("k"))
    fn = expr.compile_immersion(merged["expressions"])
    if fn.count != model.dim:
        raise UsageError(f"{model.label()} needs {model.dim} coordinate expressions, got {fn.count}")
    if int(merged["grid"]) < 16:
        raise models.ModelParameterError("grid must be >= 16")
    config = {k: merged.get(k) for k in keys}
    rep = suites.verify_surface(model, fn, tuple(merged["u_range"]), tuple(merged["v_range"]), int(merged["grid"]), config=config)
    out = _output_dir(args, merged)
    sf.export_csv(rep.artifacts["geometry"], out / "surface.csv")
    return _finish(rep, out, "surface")


COMMANDS = {
    "verify-model": cmd_verify_model,
    "theorem2": cmd_theorem2,
    "hopf-cylinder": cmd_hopf_cylinder,
    "helix": cmd_helix,
    "theorem5-scan": cmd_theorem5_scan,
    "surface": cmd_surface,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except expr.ExpressionSyntaxError as exc:
        print(f"sasakipmc {args.command}: parse error: {exc}", file=sys.stderr)
        return 2
    except theorems.InfeasibleBranchError as exc:
        print(f"sasakipmc {args.command}: infeasible parameters: {exc}", file=sys.stderr)
        return 2
    except (UsageError, models.ModelParameterError, TypeError) as exc:
        print(f"sasakipmc {args.command}: {exc}", file=sys.stderr)
        return 2
    except (models.PreconditionError, expr.ExpressionEvaluationError, ValueError) as exc:
        print(f"sasakipmc {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
