"""Acceptance criteria 1-11, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import json
import math
import time

import numpy as np
import pytest

from sasakipmc import models as md
from sasakipmc import qdiff as qd
from sasakipmc import riemann as rc
from sasakipmc import suites as su
from sasakipmc import theorems as th

from oracles import fd_christoffel, fd_riemann, observed_order

MODEL_CASES = [
    dict(kind="standard_sphere"),
    dict(kind="deformed_sphere", a=0.5),
    dict(kind="deformed_sphere", a=2.0),
    dict(kind="heisenberg", n=1),
    dict(kind="heisenberg", n=3),
    dict(kind="ball_times_line", k=-4.0),
]
EXPECTED_C = [1.0, 4 / 0.5 - 3, 4 / 2.0 - 3, -3.0, -3.0, -7.0]


def case_id(kw):
    return "-".join(f"{v}" for v in kw.values())


@pytest.fixture(scope="module")
def model_reports():
    t0 = time.perf_counter()
    reps = [su.verify_model(su.ModelSuiteConfig(**kw), seed=42) for kw in MODEL_CASES]
    return reps, time.perf_counter() - t0


@pytest.mark.criterion(1, "model axioms: structure residuals < 1e-8 at 100 points, runtime < 30 s")
def test_criterion_01_model_axioms(model_reports):
    reps, elapsed = model_reports
    for kw, rep in zip(MODEL_CASES, reps):
        checks = [c for c in rep.checks if c.name.startswith("structure_")]
        assert checks
        for c in checks:
            print(case_id(kw), c.name, f"{c.max_residual:.2e}")
            assert c.max_residual < 1e-8, (kw, c.name)
        assert rep.config["points"] == 100
    assert elapsed < 30.0


@pytest.mark.criterion(2, "curvature formula residual < 1e-7 at 100 points per model")
def test_criterion_02_curvature_formula(model_reports):
    for kw, rep in zip(MODEL_CASES, model_reports[0]):
        c = rep.check("curvature_formula")
        print(case_id(kw), f"{c.max_residual:.2e}")
        assert c.max_residual < 1e-7


@pytest.mark.criterion(3, "phi-symmetry residual < 1e-6 at 30 points per model")
def test_criterion_03_phi_symmetry(model_reports):
    for kw, rep in zip(MODEL_CASES, model_reports[0]):
        c = rep.check("phi_symmetry")
        print(case_id(kw), f"{c.max_residual:.2e}")
        assert c.max_residual < 1e-6
        assert rep.config["symmetry_points"] == 30


@pytest.mark.criterion(4, "phi-sectional curvature: spread < 1e-7 over 20 directions, mean = c within 1e-7")
def test_criterion_04_phi_sectional(model_reports):
    for kw, c_exp, rep in zip(MODEL_CASES, EXPECTED_C, model_reports[0]):
        assert rep.config["c"] == pytest.approx(c_exp, abs=1e-15)
        assert rep.config["directions"] == 20
        spread, mean = rep.check("phi_sectional_spread"), rep.check("phi_sectional_mean")
        print(case_id(kw), f"spread {spread.max_residual:.2e}", f"mean-c {mean.max_residual:.2e}")
        assert spread.max_residual < 1e-7
        assert mean.max_residual < 1e-7


N3_MODELS = [dict(kind="standard_sphere"), dict(kind="deformed_sphere", a=2.0), dict(kind="heisenberg"), dict(kind="ball_times_line", k=-4.0)]


@pytest.fixture(scope="module")
def cylinder_reports():
    out = {}
    for kw in N3_MODELS:
        for kappa in (0.5, 1.0, 2.0):
            for tau, mod in ((1.0, 0.0), (-1.0, 0.0), (1.0, 0.3)):
                cfg = su.CylinderConfig(n=1, kappa=kappa, tau=tau, modulation=mod, **kw)
                out[(case_id(kw), kappa, tau, mod)] = su.verify_cylinder(cfg, seed=0)
    return out


@pytest.mark.criterion(5, "Hopf cylinders: kappa1 = 2|H| within 1e-5; pmc < 1e-5 iff tau = +-1 and kappa constant, > 1e-2 otherwise")
def test_criterion_05_hopf_cylinders(cylinder_reports):
    for key, rep in cylinder_reports.items():
        _, kappa, tau, mod = key
        ident = rep.check("mean_curvature_identity").max_residual
        pmc = rep.data["pmc_residual"]
        print(key, f"2|H|-kappa {ident:.2e}", f"pmc {pmc:.2e}")
        assert ident < 1e-5
        if mod == 0.0:
            assert pmc < 1e-5
        else:
            assert pmc > 1e-2


@pytest.mark.criterion(8, "pmc Hopf cylinders: min |Q1(Z,Z)|, min |Q2(Z,Z)| > 1e-3")
def test_criterion_08_q_nonvanishing(cylinder_reports):
    for key, rep in cylinder_reports.items():
        if key[3] != 0.0:
            continue
        q = rep.artifacts["qgrid"]
        q1, q2 = np.min(np.abs(q.q1_values)), np.min(np.abs(q.q2_values))
        print(key, f"min|Q1| {q1:.3e}", f"min|Q2| {q2:.3e}")
        assert q1 > 1e-3 and q2 > 1e-3


@pytest.fixture(scope="module")
def product_run():
    cfg = th.Theorem2Config(c=-3.0, h=1.0, grid=64, holomorphicity_grids=None)
    t0 = time.perf_counter()
    rep = th.verify_theorem2(None, cfg, seed=0)
    return rep, time.perf_counter() - t0


@pytest.mark.criterion(6, "product surface reconstruction at (c=-3, h=1), grid 64, within tolerances and < 2 min")
def test_criterion_06_product_surface(product_run):
    rep, elapsed = product_run
    for line in rep.summary_lines():
        print(line)
    below = {
        "integral": 1e-5, "pmc": 1e-5, "pseudo_umbilical": 1e-5,
        "K_gauss_equation": 1e-5, "K_intrinsic": 1e-5, "K_formula": 1e-5,
        "gamma1_legendre": 1e-5, "gamma2_legendre": 1e-5,
    }
    for name, tol in below.items():
        assert rep.check(name).max_residual < tol, name
    assert rep.check("gamma1_osculating_order").passed
    assert rep.check("gamma2_osculating_order").passed
    g1 = rep.data["gamma1_curvatures"]
    g2 = rep.data["gamma2_curvatures"]
    want1 = (math.sqrt(1.5), math.sqrt(2 / 3), math.sqrt(4 / 3))
    assert len(g1) == 3 and len(g2) == 1
    np.testing.assert_allclose(g1, want1, atol=1e-4)
    assert abs(g2[0] - math.sqrt(1.5)) < 1e-4
    assert rep.passed, [c.name for c in rep.failed()]
    assert elapsed < 120.0


@pytest.mark.criterion(7, "holomorphicity: dbar Q1, dbar Q2 decrease with order >= 1.8 over grids 32/64/128")
def test_criterion_07_holomorphicity():
    cfg = th.Theorem2Config(c=-3.0, h=1.0, grid=64, holomorphicity_grids=None)

    def build(n):
        return th._geometry(th.build_product_surface(None, cfg, grid=n, check=False))

    study = qd.holomorphicity_study(build, (32, 64, 128), gate=True)
    for lv in study["levels"]:
        print(lv)
    for q in ("q1", "q2"):
        errs = [lv[f"max_dbar_{q}"] for lv in study["levels"]]
        print(q, "order", study[f"order_{q}"])
        assert all(b < a for a, b in zip(errs, errs[1:])), q
        assert study[f"order_{q}"] >= 1.8, q


@pytest.mark.criterion(9, "polynomial scan: P(c,t) < 0 on 10^4 points, max_value < -14")
def test_criterion_09_polynomial_scan():
    scan = th.theorem5_polynomial_scan((-50.0, 0.999), t_steps=100, c_steps=100)
    print(scan["max_value"], scan["argmax"])
    assert scan["points"] == 10_000
    assert scan["all_negative"]
    assert scan["max_value"] < -14.0
    cs = np.linspace(-50.0, 0.999, 100)
    ts = np.linspace(0.0, 1.0, 102)[1:-1]
    C, T = np.meshgrid(cs, ts, indexing="ij")
    brute = (1 - C) * T**4 + (C - 5) * T**2 - 16
    assert scan["max_value"] == pytest.approx(brute.max(), abs=1e-12)


ORACLE_MODELS = [
    dict(kind="standard_sphere", n=1), dict(kind="deformed_sphere", n=1, a=0.5), dict(kind="deformed_sphere", n=2, a=2.0),
    dict(kind="heisenberg", n=1), dict(kind="heisenberg", n=3), dict(kind="ball_times_line", n=1, k=-4.0),
    dict(kind="ball_times_line", n=2, k=-4.0),
]


@pytest.mark.criterion(10, "cross-oracle: jets match central differences with O(h^2) convergence on all model metrics")
@pytest.mark.parametrize("kw", ORACLE_MODELS, ids=case_id)
def test_criterion_10_cross_oracle(kw):
    model = md.make_model(**kw)
    p = md.sample(model, 1, seed=11)[0]
    hs = [2e-3, 1e-3, 5e-4, 2.5e-4]  # three halvings
    G, R = rc.christoffel(model.chart, p), rc.riemann(model.chart, p)
    for name, exact, oracle in (("christoffel", G, fd_christoffel), ("riemann", R, fd_riemann)):
        errs = [np.max(np.abs(oracle(model.chart, p, h) - exact)) for h in hs]
        print(name, [f"{e:.2e}" for e in errs])
        if max(errs) < 1e-10:
            # polynomial metric: central differences are exact up to rounding
            continue
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert observed_order(hs, errs) == pytest.approx(2.0, abs=0.15), name
        assert all(3.4 < r < 4.6 for r in ratios), (name, ratios)


@pytest.mark.criterion(11, "determinism: repeated seeded runs give bit-identical residual statistics")
def test_criterion_11_determinism():
    def run():
        a = su.verify_model(su.ModelSuiteConfig(kind="deformed_sphere", a=2.0, points=50), seed=7).to_dict()
        b = su.verify_cylinder(su.CylinderConfig(kind="heisenberg", kappa=1.0, grid=32), seed=7).to_dict()
        c = th.verify_theorem2(None, th.Theorem2Config(c=-3.0, h=1.0, grid=16, holomorphicity_grids=None), seed=7).to_dict()
        return json.dumps([a, b, c], sort_keys=True)

    assert run() == run()
