import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasakipmc import curves as cv
from sasakipmc import fibration as fb
from sasakipmc import models as md
from sasakipmc import riemann as rc
from sasakipmc import suites as su

STEP = 1e-3


def _extract(model, curve, kap, step=STEP):
    steps = len(curve.s) - 1
    stride = max(1, min(cv.extraction_stride(kap, step), steps // 90))
    return cv.frenet_apparatus(curve.positions[::stride], model, s=curve.s[::stride], max_order=min(len(kap) + 2, model.dim))


def test_great_circle_matches_closed_form(rng):
    m = md.make_model("standard_sphere", 1)
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    c = cv.synthesize_curve(m, np.zeros(3), v[None], [], 1.2, steps=1200)
    want = np.sin(c.s)[:, None] * v
    assert np.max(np.abs(c.positions - want)) < 1e-10
    amb = md.sphere_ambient(c.positions)
    np.testing.assert_allclose(amb[:, -1], np.cos(c.s), atol=1e-10)
    ext = cv.frenet_apparatus(c.positions[::20], m, s=c.s[::20])
    assert ext.osculating_order == 1 and ext.curvatures.size == 0


def test_heisenberg_helix_round_trip():
    rep = su.verify_helix(su.HelixConfig(kind="heisenberg", n=3, curvatures=(2.0, 1.0, 0.5), length=5.0))
    assert rep.passed, [c.to_dict() for c in rep.failed()]
    np.testing.assert_allclose(rep.data["extracted_curvatures"][:3], [2.0, 1.0, 0.5], atol=1e-5)


@pytest.mark.parametrize("kind,kw", [("heisenberg", {}), ("deformed_sphere", {"a": 2.0}), ("ball_times_line", {"k": -4.0})])
def test_legendre_circle(kind, kw):
    m = md.make_model(kind, 3, **kw)
    p0 = np.zeros(7)
    c = cv.synthesize_curve(m, p0, cv.legendre_circle_frame(m, p0), [1.5], 0.8, steps=800)
    assert cv.legendre_residual(c, m) < 1e-5
    ext = _extract(m, c, [1.5])
    assert ext.osculating_order == 2
    assert abs(ext.mean_curvatures()[0] - 1.5) < 1e-5


def test_fiber_curve_is_maximally_non_legendre():
    m = md.make_model("heisenberg", 1)
    fib = fb.make_fibration(m)
    p0 = np.array([0.3, -0.2, 0.1])
    t = np.linspace(0, 1, 11)
    pts = np.array([fib.flow(p0, ti) for ti in t])
    _, _, xi, _ = md.structure_values(m, pts)
    c = cv.CurveSample(t, pts, xi[:, None], np.zeros((11, 0)), 1, m.chart)
    assert cv.legendre_residual(c, m) == pytest.approx(1.0, abs=1e-12)


def test_horizontal_lift_is_legendre():
    m = md.make_model("standard_sphere", 1)
    fib = fb.make_fibration(m)
    base = fb.base_curve_for_cylinder(fib, lambda s: 1.0 + 0.5 * np.sin(3 * s), 1.0, 1.0, 33)
    s, pts, vel = fb.lift_curve(fib, base)
    c = cv.CurveSample(s, pts, vel[:, None], np.zeros((len(s), 0)), 1, m.chart)
    assert cv.legendre_residual(c, m) < 1e-6


@pytest.mark.parametrize("tau", [1.0, -1.0])
def test_base_circle_torsion_pm_one(tau):
    fib = fb.make_fibration(md.make_model("standard_sphere", 1))
    base = fb.base_curve_for_cylinder(fib, 1.0, tau, 1.0, 33)
    ext = cv.frenet_apparatus(base.positions[::10], fib.base_chart, s=base.s[::10], max_order=3)
    tt = cv.torsions_of(ext, fib.J)
    assert tt[(1, 2)] == pytest.approx(tau, abs=1e-5)


def test_base_circle_torsion_zero():
    fib = fb.make_fibration(md.make_model("heisenberg", 2))
    base = fb.base_curve_for_cylinder(fib, 1.0, 0.0, 1.0, 33)
    ext = cv.frenet_apparatus(base.positions[::10], fib.base_chart, s=base.s[::10], max_order=3)
    tt = cv.torsions_of(ext, fib.J)
    assert abs(tt[(1, 2)]) < 1e-5


def test_complex_torsions_bounded():
    m = md.make_model("standard_sphere", 2)
    p0 = np.zeros(5)
    F = cv.complete_frame(m.chart, p0, cv.horizontal_frame(m, p0, 1), 3)
    c = cv.synthesize_curve(m, p0, F, [1.0, 0.7], 0.8, steps=800)
    tt = cv.complex_torsions(c, m, max_order=3)
    for v in tt.tau.values():
        assert abs(v) <= 1 + 1e-8


def test_non_orthonormal_frame_rejected():
    m = md.make_model("heisenberg", 1)
    with pytest.raises(md.PreconditionError):
        cv.synthesize_curve(m, np.zeros(3), np.array([[2.0, 0, 0], [0, 1.0, 0]]), [1.0], 1.0)


def test_nonpositive_curvature_rejected():
    m = md.make_model("heisenberg", 1)
    with pytest.raises(md.PreconditionError):
        cv.synthesize_curve(m, np.zeros(3), np.eye(3)[:2], [0.0], 1.0)


def test_too_few_steps_rejected():
    m = md.make_model("heisenberg", 1)
    with pytest.raises(md.PreconditionError):
        cv.synthesize_curve(m, np.zeros(3), np.eye(3)[:2], [1.0], 1.0, steps=100)


def test_chart_exit_reports_location():
    m = md.make_model("standard_sphere", 1)
    with pytest.raises(rc.ChartDomainError, match="left the chart"):
        cv.synthesize_curve(m, np.zeros(3), np.eye(3)[:1], [], 2.0)


def test_non_unit_speed_input_is_reparametrized():
    m = md.make_model("heisenberg", 1)
    p0 = np.zeros(3)
    F = cv.complete_frame(m.chart, p0, cv.horizontal_frame(m, p0, 1), 2)
    c = cv.synthesize_curve(m, p0, F, [1.0], 2.0, steps=2000)
    # sample the same curve at twice the arclength step while claiming unit spacing
    ext = cv.frenet_apparatus(c.positions[::40], m, s=0.5 * c.s[::40], max_order=3)
    assert "reparametrized" in ext.flags
    assert abs(ext.mean_curvatures()[0] - 1.0) < 1e-4


def _tuples():
    kap = st.floats(0.1, 3.0, allow_nan=False)
    return st.lists(st.lists(kap, min_size=1, max_size=3), min_size=20, max_size=20)


# sphere and ball charts are bounded coordinate boxes, so their curves are shorter
ROUND_TRIP = [(dict(kind="heisenberg", n=2), 5.0), (dict(kind="standard_sphere", n=2), 0.75),
              (dict(kind="deformed_sphere", n=2, a=0.5), 0.75), (dict(kind="ball_times_line", n=2, k=-4.0), 1.0)]


@pytest.mark.parametrize("kw,length", ROUND_TRIP, ids=lambda x: x["kind"] if isinstance(x, dict) else str(x))
@settings(max_examples=2)
@given(tuples=_tuples())
def test_synthesis_extraction_round_trip(kw, length, tuples):
    m = md.make_model(**kw)
    K = np.zeros((20, 3))
    for i, t in enumerate(tuples):
        K[i, : len(t)] = t
    p0, F0 = su.helix_start(m, 4)
    steps = int(round(length / STEP))
    curves = cv.synthesize_batch(m, np.repeat(p0[None], 20, 0), np.repeat(F0[None], 20, 0), K, length, steps=steps)
    for c, t in zip(curves, tuples):
        assert c.orthonormality_residual() < 1e-7
        assert c.speed_residual() < 1e-6
        ext = _extract(m, c, t)
        assert ext.osculating_order == len(t) + 1, (t, ext.flags)
        np.testing.assert_allclose(ext.mean_curvatures(), t, atol=1e-5)
        assert np.max(ext.curvature_spread()) < 1e-6
