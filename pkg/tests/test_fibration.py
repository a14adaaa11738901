import numpy as np
import pytest

from sasakipmc import curves as cv
from sasakipmc import fibration as fb
from sasakipmc import jets
from sasakipmc import models as md
from sasakipmc import riemann as rc
from sasakipmc import suites as su
from sasakipmc import surfaces as sf


def test_fibration_per_model(model_n1, rng):
    fib = fb.make_fibration(model_n1)
    P = md.sample(model_n1, 30, seed=2)
    assert fib.base_dim == 2
    assert fb.submersion_residual(fib, P, rng) < 1e-8
    assert fb.verticality_residual(fib, P) < 1e-10
    cs = fb.complex_structure_residuals(fib, P)
    assert cs["J_squared"] < 1e-10
    assert cs["J_isometry"] < 1e-10
    assert cs["phi_intertwines"] < 1e-8


def test_fibration_n2(model_n2, rng):
    fib = fb.make_fibration(model_n2)
    P = md.sample(model_n2, 10, seed=3)
    assert fb.submersion_residual(fib, P, rng) < 1e-8
    assert fb.verticality_residual(fib, P) < 1e-10


def test_heisenberg_base_is_flat():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    q = np.array([0.3, -0.7])
    assert not np.any(rc.riemann(fib.base_chart, q))
    assert fb.base_holomorphic_curvature(fib, q, np.array([1.0, 0.0])) == 0.0


def test_hopf_base_sectional_curvature_four(rng):
    fib = fb.make_fibration(md.make_model("standard_sphere", 1))
    Q = rng.uniform(-1, 1, size=(20, 2))
    K = rc.sectional_curvature(fib.base_chart, Q, np.tile([1.0, 0.0], (20, 1)), np.tile([0.0, 1.0], (20, 1)))
    np.testing.assert_allclose(K, 4.0, atol=1e-10)


@pytest.mark.parametrize("kind,kw,c", [("deformed_sphere", {"a": 2.0}, -1.0), ("ball_times_line", {"k": -4.0}, -7.0)])
def test_base_holomorphic_curvature(kind, kw, c, rng):
    fib = fb.make_fibration(md.make_model(kind, 2, **kw))
    q = fib.project(md.sample(fib.model, 1, seed=1)[0])
    X = rng.normal(size=4)
    X /= np.sqrt(X @ fib.base_chart.metric(q) @ X)
    assert fb.base_holomorphic_curvature(fib, q, X) == pytest.approx(c + 3.0, abs=1e-6)


def test_horizontal_lift_properties(model_n1, rng):
    fib = fb.make_fibration(model_n1)
    p = md.sample(model_n1, 1, seed=4)[0]
    q = fib.project(p)
    gb = fib.base_chart.metric(q)
    X = rng.normal(size=2)
    X /= np.sqrt(X @ gb @ X)
    XH = fb.horizontal_lift(fib, X, p, base_point=q)
    g, _, _, eta = md.structure_values(model_n1, p)
    assert abs(eta @ XH) < 1e-10
    assert abs(np.sqrt(XH @ g @ XH) - 1.0) < 1e-8
    np.testing.assert_allclose(fib.dproject(p) @ XH, X, atol=1e-12)
    assert not np.any(fb.horizontal_lift(fib, np.zeros(2), p))


def test_horizontal_lift_base_mismatch():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    with pytest.raises(md.PreconditionError):
        fb.horizontal_lift(fib, np.array([1.0, 0.0]), np.zeros(3), base_point=np.array([1.0, 0.0]))


def _coord_field(i, dim):
    e = np.eye(dim)[i]
    return lambda q: np.broadcast_to(e, np.shape(jets.value_of(q)))


def test_oneill_heisenberg_coordinate_fields():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    p = np.array([0.2, 0.1, -0.3])
    parts = fb.oneill_parts(fib, _coord_field(0, 2), _coord_field(1, 2), p)
    assert parts["residual"] < 1e-7
    assert parts["vertical_lhs"] == pytest.approx(parts["vertical_expected"], abs=1e-7)


def test_oneill_same_field_vertical_part_vanishes():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    p = np.array([0.2, 0.1, -0.3])
    parts = fb.oneill_parts(fib, _coord_field(0, 2), _coord_field(0, 2), p)
    assert abs(parts["vertical_lhs"]) < 1e-8
    assert abs(parts["vertical_expected"]) < 1e-14


@pytest.mark.parametrize("kind,kw", [("standard_sphere", {}), ("deformed_sphere", {"a": 2.0}), ("ball_times_line", {"k": -4.0})])
def test_oneill_curved_models(kind, kw):
    fib = fb.make_fibration(md.make_model(kind, 1, **kw))
    p = md.sample(fib.model, 1, seed=5)[0]

    def Y(q):
        return jets.stack([jets.sin(q[..., 0]) + q[..., 1], q[..., 0] * q[..., 1]], axis=-1)

    assert fb.oneill_residual(fib, _coord_field(0, 2), Y, p) < 1e-6


def test_geodesic_base_gives_minimal_cylinder():
    fib = fb.make_fibration(md.make_model("standard_sphere", 1))
    base = fb.base_curve_for_cylinder(fib, 0.0, 1.0, 1.0, 33)
    geom = sf.surface_geometry(fb.hopf_cylinder(fib, base, grid=(33, 33)))
    assert np.max(geom.mean_norm()[geom.interior()]) < 1e-6


def test_pmc_cylinder_in_n3():
    rep = su.verify_cylinder(su.CylinderConfig(kind="standard_sphere", kappa=1.0, tau=1.0))
    assert rep.passed
    geom = rep.artifacts["geometry"]
    np.testing.assert_allclose(geom.mean_norm()[geom.interior()], 0.5, atol=1e-5)
    assert rep.data["pmc_residual"] < 1e-5
    cls = rep.data["classification"]
    assert cls["integral_residual"] == pytest.approx(1.0, abs=1e-8)
    assert cls["anti_invariant_residual"] < 1e-6


def test_zero_torsion_circle_is_not_pmc():
    rep = su.verify_cylinder(su.CylinderConfig(kind="heisenberg", n=2, kappa=1.0, tau=0.0, grid=32))
    assert rep.check("mean_curvature_identity").max_residual < 1e-5
    assert rep.data["pmc_residual"] > 1e-2


def test_commutator_and_curvature_equations():
    rep = su.verify_cylinder(su.CylinderConfig(kind="deformed_sphere", a=2.0, kappa=2.0, tau=-1.0))
    for name in ("commutator_xi_E1H", "gauss", "codazzi", "ricci", "verticality", "lift_legendre", "q2_square_identity"):
        assert rep.check(name).passed, name


def test_cylinder_grid_mismatch():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    base = fb.base_curve_for_cylinder(fib, 1.0, 1.0, 1.0, 33)
    with pytest.raises(md.PreconditionError):
        fb.hopf_cylinder(fib, base, grid=(30, 30))


def test_small_tau_needs_complex_dimension_two():
    fib = fb.make_fibration(md.make_model("heisenberg", 1))
    with pytest.raises(md.PreconditionError):
        fb.base_circle_frame(fib, np.zeros(2), 0.5)
