"""Verification suites that turn module-level residuals into reports."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import curves as cv
from . import fd
from . import fibration as fb
from . import models as md
from . import qdiff as qd
from . import riemann as rc
from . import surfaces as sf
from .report import VerificationReport


# -- model axioms ----------------------------------------------------------------

@dataclass
class ModelSuiteConfig:
    kind: str = "heisenberg"
    n: int = 1
    a: float | None = None
    k: float | None = None
    perturb: float = 0.0
    points: int = 100
    symmetry_points: int = 30
    sectional_points: int = 10
    directions: int = 20
    structure_tol: float = 1e-8
    formula_tol: float = 1e-7
    symmetry_tol: float = 1e-6
    sectional_tol: float = 1e-7

    def __post_init__(self):
        if self.points < 1:
            raise md.ModelParameterError("points must be >= 1")
        md.make_model(self.kind, self.n, a=self.a, k=self.k, perturb=self.perturb)


def verify_model(cfg: ModelSuiteConfig, seed: int = 0) -> VerificationReport:
    t0 = time.perf_counter()
    model = md.make_model(cfg.kind, cfg.n, a=cfg.a, k=cfg.k, perturb=cfg.perturb)
    rep = VerificationReport("verify-model", {"model": model.label(), "c": model.c, **asdict(cfg)}, seed)
    P = md.sample(model, cfg.points, seed)
    per_point = [md.structure_residuals(model, p) for p in P]
    for key in per_point[0]:
        rep.add(f"structure_{key}", [r[key] for r in per_point], cfg.structure_tol)
    rep.add("curvature_formula", md.curvature_formula_residual(model, P), cfg.formula_tol)
    Q = P[: cfg.symmetry_points]
    rep.add("phi_symmetry", md.phi_symmetry_residual(model, Q), cfg.symmetry_tol)

    rng = np.random.default_rng(seed)
    spreads, means = [], []
    for p in P[: cfg.sectional_points]:
        pts = np.broadcast_to(p, (cfg.directions, model.dim))
        U = md.random_horizontal_unit(model, pts, rng)
        sd = md.structure_data(model, pts, level=2)
        K = md.phi_sectional(model, pts, U, sd)
        spreads.append(np.max(K) - np.min(K))
        means.append(np.mean(K))
    rep.add("phi_sectional_spread", spreads, cfg.sectional_tol)
    rep.add("phi_sectional_mean", np.asarray(means) - model.c, cfg.sectional_tol, note=f"c = {model.c:.12g}")

    V = md.random_horizontal_unit(model, P[: cfg.sectional_points], rng)
    rep.add("okumura_geodesic", md.okumura_geodesic_check(model, P[: cfg.sectional_points], V), cfg.structure_tol)
    if model.kind == "ball_times_line":
        rep.add("ball_exactness", md.ball_exactness_residual(model, P), cfg.structure_tol)
    rep.timing = {"total": time.perf_counter() - t0}
    return rep


# -- Hopf cylinders --------------------------------------------------------------

@dataclass
class CylinderConfig:
    kind: str = "standard_sphere"
    n: int = 1
    a: float | None = None
    k: float | None = None
    kappa: float = 1.0
    tau: float = 1.0
    length: float = 1.0
    fiber_length: float = 0.5
    grid: int = 64
    fd_order: int = 6
    modulation: float = 0.0
    mean_tol: float = 1e-5
    pmc_tol: float = 1e-5
    pmc_fail_threshold: float = 1e-2
    equation_tol: float = 1e-6
    commutator_tol: float = 1e-6
    q_floor: float = 1e-3

    def __post_init__(self):
        if self.kappa < 0:
            raise md.ModelParameterError("kappa must be >= 0")
        if abs(self.tau) > 1:
            raise md.ModelParameterError("complex torsion must satisfy |tau| <= 1")
        if self.grid < 16:
            raise md.ModelParameterError("grid must be >= 16")
        md.make_model(self.kind, self.n, a=self.a, k=self.k)

    def curvature(self):
        """Constant kappa, or kappa (1 + modulation sin s) for a non-constant base."""
        if self.modulation == 0 or self.kappa == 0:
            return self.kappa
        k, m = self.kappa, self.modulation
        return lambda s: k * (1.0 + m * np.sin(2.0 * np.pi * s))


def build_cylinder(cfg: CylinderConfig):
    model = md.make_model(cfg.kind, cfg.n, a=cfg.a, k=cfg.k)
    fib = fb.make_fibration(model)
    base = fb.base_curve_for_cylinder(fib, cfg.curvature(), cfg.tau, cfg.length, cfg.grid)
    patch = fb.hopf_cylinder(fib, base, (0.0, cfg.fiber_length), (cfg.grid, cfg.grid), fd_order=cfg.fd_order)
    return fib, base, patch


def commutator_residual(patch: sf.SurfacePatch) -> float:
    """max |d_t E1^H - d_s xi| in the chart: the bracket [xi, E1^H] of the
    two sampled fields, by finite differences over the interior."""
    dt = fd.derivative(patch.fu, patch.dv, axis=1, accuracy=patch.fd_order)
    ds = fd.derivative(patch.fv, patch.du, axis=0, accuracy=patch.fd_order)
    mask = patch.interior()
    return float(np.max(np.abs(dt - ds)[mask]))


def verify_cylinder(cfg: CylinderConfig, seed: int | None = None) -> VerificationReport:
    t0 = time.perf_counter()
    fib, base, patch = build_cylinder(cfg)
    geom = sf.surface_geometry(patch)
    rep = VerificationReport("hopf-cylinder", {"model": fib.model.label(), "c": fib.model.c, **asdict(cfg)}, seed)
    if fib.model.kind == "ball_times_line":
        rep.notes.append("the fibration of ball_times_line is a product projection")
    rep.artifacts.update(geometry=geom, base=base, fibration=fib)
    mask = geom.interior()
    kap = cfg.curvature()
    kappa_s = kap(patch.u) if callable(kap) else np.full(patch.u.shape, float(kap))
    Hn = geom.mean_norm()
    rep.add("mean_curvature_identity", (2.0 * Hn - kappa_s[:, None])[mask], cfg.mean_tol, note="2|H| - kappa(base)")
    pmc = sf.pmc_residual(geom)
    constant = not callable(kap)
    expect_pmc = constant and (abs(abs(cfg.tau) - 1.0) < 1e-12 or cfg.kappa == 0)
    if expect_pmc:
        rep.add("pmc", pmc, cfg.pmc_tol)
    else:
        rep.add("pmc_fails", pmc, cfg.pmc_fail_threshold, kind="above", note="pmc expected to fail")
    for k, v in sf.fundamental_equation_residuals(geom).items():
        rep.add(k, v, cfg.equation_tol)
    rep.add("commutator_xi_E1H", commutator_residual(patch), cfg.commutator_tol)
    rep.add("verticality", fb.verticality_residual(fib, patch.points[::8, ::8].reshape(-1, fib.model.dim)), 1e-10)
    rep.add("lift_legendre", cv.legendre_residual(
        cv.CurveSample(patch.u, patch.points[:, 0], patch.fu[:, 0][:, None], np.zeros((len(patch.u), 0)), 1, fib.model.chart),
        fib.model), 1e-6)
    cls = sf.classify_surface(geom)
    rep.data["classification"] = cls
    rep.data["pmc_residual"] = pmc
    if expect_pmc and cfg.kappa > 0:
        q = qd.q_forms(qd.isothermal_patch(geom))
        rep.artifacts["qgrid"] = q
        rep.add("q1_nonvanishing", np.abs(q.q1_values), cfg.q_floor, kind="above")
        rep.add("q2_nonvanishing", np.abs(q.q2_values), cfg.q_floor, kind="above")
        rep.add("q2_square_identity", q.identity_residual, 1e-10)
    if cfg.kappa > 0:
        k = _torsion_stride(base)
        try:
            ext = cv.frenet_apparatus(base.positions[::k], fib.base_chart, s=base.s[::k], max_order=3)
            tt = cv.torsions_of(ext, fib.J)
            if (1, 2) in tt.tau:
                rep.data["tau12"] = tt.tau[(1, 2)]
                if constant:
                    rep.add("tau12_round_trip", tt.tau[(1, 2)] - cfg.tau, 1e-5)
        except ValueError as exc:
            rep.notes.append(f"torsion extraction skipped: {exc}")
    rep.timing = {"total": time.perf_counter() - t0}
    return rep


def _torsion_stride(curve: cv.CurveSample) -> int:
    step = curve.s[1] - curve.s[0]
    return max(1, int(round(0.01 / step)))


# -- helices ---------------------------------------------------------------------

@dataclass
class HelixConfig:
    kind: str = "heisenberg"
    n: int = 3
    a: float | None = None
    k: float | None = None
    curvatures: tuple = (2.0, 1.0, 0.5)
    length: float = 5.0
    steps_per_unit: int = 1000
    legendre_start: bool = True
    curvature_tol: float = 1e-5
    frame_tol: float = 1e-7
    speed_tol: float = 1e-6
    spread_tol: float = 1e-6

    def __post_init__(self):
        self.curvatures = tuple(float(k) for k in self.curvatures)
        if any(k <= 0 for k in self.curvatures):
            raise md.ModelParameterError("curvatures must be positive")
        if self.length <= 0:
            raise md.ModelParameterError("length must be positive")
        if self.steps_per_unit < cv.MIN_STEPS_PER_UNIT:
            raise md.ModelParameterError(f"steps_per_unit must be >= {cv.MIN_STEPS_PER_UNIT}")
        model = md.make_model(self.kind, self.n, a=self.a, k=self.k)
        if len(self.curvatures) + 1 > model.dim:
            raise md.ModelParameterError(f"order {len(self.curvatures) + 1} exceeds dimension {model.dim}")


def helix_start(model: md.ModelSpace, r: int, legendre: bool = True) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.zeros(model.dim)
    first = cv.horizontal_frame(model, p0, 1) if legendre else np.eye(model.dim)[:1]
    return p0, cv.complete_frame(model.chart, p0, first, r)


def verify_helix(cfg: HelixConfig, seed: int | None = None) -> VerificationReport:
    t0 = time.perf_counter()
    model = md.make_model(cfg.kind, cfg.n, a=cfg.a, k=cfg.k)
    rep = VerificationReport("helix", {"model": model.label(), **asdict(cfg)}, seed)
    r = len(cfg.curvatures) + 1
    p0, F0 = helix_start(model, r, cfg.legendre_start)
    rep.notes.append("start frame: " + ("first leg orthogonal to xi, " if cfg.legendre_start else "") + "orthonormal completion of coordinate vectors")
    step = 1.0 / cfg.steps_per_unit
    stride = cv.extraction_stride(cfg.curvatures, step)
    steps = int(math.ceil(cfg.length / step / stride)) * stride
    try:
        curve = cv.synthesize_curve(model, p0, F0, cfg.curvatures, steps * step, steps=steps)
    except rc.ChartDomainError as exc:
        rep.add_flag("synthesis_in_chart", False, str(exc))
        return rep
    rep.artifacts["synthesized"] = curve
    rep.add("frame_orthonormality", curve.orthonormality_residual(), cfg.frame_tol)
    rep.add("unit_speed", curve.speed_residual(), cfg.speed_tol)
    ext = cv.frenet_apparatus(curve.positions[::stride], model, s=curve.s[::stride], max_order=min(r + 1, model.dim))
    rep.artifacts["extracted"] = ext
    rep.add_flag("osculating_order", ext.osculating_order == r, f"extracted {ext.osculating_order}, prescribed {r}")
    got = ext.mean_curvatures()
    for i, k in enumerate(cfg.curvatures):
        err = abs(got[i] - k) if i < len(got) else float("inf")
        rep.add(f"kappa{i + 1}", err, cfg.curvature_tol, note=f"prescribed {k:g}")
    if ext.curvatures.size:
        rep.add("curvature_spread", ext.curvature_spread(), cfg.spread_tol)
    rep.data["extracted_curvatures"] = got.tolist()
    rep.data["flags"] = list(ext.flags)
    rep.data["legendre_residual"] = cv.legendre_residual(curve, model)
    rep.timing = {"total": time.perf_counter() - t0}
    return rep


# -- user surfaces ---------------------------------------------------------------

def verify_surface(model: md.ModelSpace, fn, u_range, v_range, grid: int = 64, fd_order: int = 4,
                   config: dict | None = None, seed: int | None = None) -> VerificationReport:
    """Invariants and classification of a user-supplied immersion."""
    t0 = time.perf_counter()
    patch = sf.SurfacePatch.from_function(model, fn, u_range, v_range, (grid, grid), fd_order, "user_surface")
    geom = sf.surface_geometry(patch)
    rep = VerificationReport("surface", {"model": model.label(), **(config or {})}, seed)
    rep.artifacts["geometry"] = geom
    for k, v in sf.invariant_residuals(geom).items():
        rep.add(k, v, 1e-7)
    for k, v in sf.fundamental_equation_residuals(geom).items():
        rep.add(k, v, 1e-4, note="grid-limited")
    cls = sf.classify_surface(geom)
    rep.data["classification"] = cls
    rep.data["pmc_residual"] = sf.pmc_residual(geom) if grid >= 16 else None
    mask = geom.interior()
    K = sf.gaussian_curvature(geom)
    rep.add("K_routes_agree", (K["via_gauss_eq"] - K["intrinsic"])[mask], 1e-4, note="grid-limited")
    rep.data["mean_curvature_range"] = [float(geom.mean_norm()[mask].min()), float(geom.mean_norm()[mask].max())]
    rep.timing = {"total": time.perf_counter() - t0}
    return rep
