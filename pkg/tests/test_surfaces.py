import dataclasses

import numpy as np
import pytest

from sasakipmc import jets
from sasakipmc import models as md
from sasakipmc import riemann as rc
from sasakipmc import suites as su
from sasakipmc import surfaces as sf
from sasakipmc import theorems as th


def great_sphere(x):
    """A totally geodesic 2-sphere of S^3: the hyperplane section x_2 = 0."""
    u, v = x[..., 0], x[..., 1]
    return jets.stack([u, v, 0.0 * u], axis=-1)


@pytest.fixture(scope="module")
def sphere_geom():
    m = md.make_model("standard_sphere", 1)
    patch = sf.SurfacePatch.from_function(m, great_sphere, (-0.4, 0.4), (-0.4, 0.4), (48, 48))
    return sf.surface_geometry(patch)


@pytest.fixture(scope="module")
def product_geom():
    cfg = th.Theorem2Config(c=-3.0, h=1.0, grid=32, holomorphicity_grids=None)
    surf = th.build_product_surface(None, cfg)
    return surf, th._geometry(surf)


def flat_model():
    chart = rc.euclidean_chart(3)
    zero = lambda shape: (lambda x: np.zeros(np.shape(jets.value_of(x))[:-1] + shape))  # noqa: E731
    return md.ModelSpace("euclidean", 1, 0.0, chart, zero((3, 3)), zero((3,)), zero((3,)))


def test_great_sphere_totally_geodesic(sphere_geom):
    g = sphere_geom
    assert np.max(np.abs(g.sigma)) < 1e-12
    assert np.max(g.mean_norm()) < 1e-12
    K = sf.gaussian_curvature(g)
    mask = g.interior()
    np.testing.assert_allclose(K["via_gauss_eq"][mask], 1.0, atol=1e-10)
    np.testing.assert_allclose(K["intrinsic"][mask], 1.0, atol=1e-5)
    assert K["formula"] is None


def test_invariants(sphere_geom, product_geom):
    for g in (sphere_geom, product_geom[1]):
        res = sf.invariant_residuals(g)
        assert res["sigma_symmetry"] < 1e-12
        assert res["mean_trace"] < 1e-10
        assert res["sigma_normality"] < 1e-9


def test_flat_plane_in_flat_chart():
    m = flat_model()
    patch = sf.SurfacePatch.from_function(m, lambda x: jets.stack([x[..., 0], x[..., 1], 0.0 * x[..., 0]], axis=-1),
                                          (0, 1), (0, 1), (16, 16))
    geom = sf.surface_geometry(patch)
    assert np.max(np.abs(geom.sigma)) == 0.0
    for k, v in sf.fundamental_equation_residuals(geom).items():
        assert v < 1e-20, k
    assert sf.pmc_residual(geom) < 1e-20


def test_zeroed_sigma_breaks_gauss():
    m = md.make_model("standard_sphere", 1)

    def cap(x):
        u, v = x[..., 0], x[..., 1]
        return jets.stack([u, v, 0.3 + 0.0 * u], axis=-1)

    geom = sf.surface_geometry(sf.SurfacePatch.from_function(m, cap, (-0.3, 0.3), (-0.3, 0.3), (24, 24)))
    assert sf.fundamental_equation_residuals(geom)["gauss"] < 1e-4
    broken = dataclasses.replace(geom, sigma=np.zeros_like(geom.sigma), _cache={})
    assert sf.fundamental_equation_residuals(broken)["gauss"] > 1e-2


def test_rank_deficient_immersion_rejected():
    m = md.make_model("heisenberg", 1)
    patch = sf.SurfacePatch.from_function(m, lambda x: jets.stack([x[..., 0], x[..., 0], 0.0 * x[..., 0]], axis=-1),
                                          (0, 1), (0, 1), (16, 16))
    with pytest.raises(sf.ImmersionError):
        sf.surface_geometry(patch)


def test_product_surface_mean_curvature(product_geom):
    _, g = product_geom
    np.testing.assert_allclose(g.mean_norm()[g.interior()], 1.0, atol=1e-5)


def test_shape_operator_properties(product_geom):
    _, g = product_geom
    at = (10, 12)
    H = g.mean_curvature[at]
    A = sf.shape_operator(g, H, at)
    I = g.induced_metric[at]
    # g-self-adjoint: I A is symmetric and equals <sigma, H>
    S = np.einsum("ab,ija,b->ij", g.g[at], g.sigma[at], H)
    np.testing.assert_allclose(I @ A, S, atol=1e-10)
    assert abs((I @ A)[0, 1] - (I @ A)[1, 0]) < 1e-8
    assert np.max(np.abs(sf.shape_operator(g, g.xi[at], at))) < 1e-5  # grid-limited
    with pytest.raises(md.PreconditionError):
        sf.shape_operator(g, g.tangents[at][0], at)


def test_shape_operator_orthogonal_to_sigma(sphere_geom):
    g = sphere_geom
    at = (5, 5)
    N = g.normal_frame[at][0]
    assert np.max(np.abs(sf.shape_operator(g, N, at))) < 1e-12


def test_adapted_shape_operators(product_geom):
    _, g = product_geom
    res = sf.adapted_shape_residuals(g)
    for k, v in res.items():
        assert v < 1e-5, k
    a = g.a_value[g.interior()]
    np.testing.assert_allclose(a, np.sqrt(0.5), atol=1e-5)


def test_product_surface_classification(product_geom):
    _, g = product_geom
    cls = sf.classify_surface(g)
    assert cls["integral_residual"] < 1e-6
    for k in ("anti_invariant_residual", "eta_H", "phiH_tangency", "pseudo_umbilical_residual"):
        assert cls[k] < 1e-5, k
    assert sf.pmc_residual(g) < 1e-5


def test_commuting_shape(product_geom):
    _, g = product_geom
    at = (8, 9)
    assert sf.commuting_shape_check(g, at) < 1e-6
    H = g.mean_curvature[at]
    AH = sf.shape_operator(g, H, at)
    assert np.max(np.abs(AH @ AH - AH @ AH)) == 0.0


def test_commuting_shape_not_applicable_in_n3():
    rep = su.verify_cylinder(su.CylinderConfig(kind="heisenberg", kappa=1.0, tau=1.0, grid=32))
    assert sf.commuting_shape_check(rep.artifacts["geometry"], (10, 10)) is None


def test_product_surface_is_flat(product_geom):
    _, g = product_geom
    K = sf.gaussian_curvature(g)
    mask = g.interior()
    for key in ("via_gauss_eq", "intrinsic", "formula"):
        assert np.max(np.abs(K[key][mask])) < 1e-5, key


def test_normal_and_a_derivatives(product_geom):
    _, g = product_geom
    for k, v in sf.normal_derivative_residuals(g).items():
        assert v < 1e-5, k
    for k, v in sf.deriv_a_residuals(g).items():
        assert v < 1e-5, k


def test_a_zero_branch_curvature():
    cfg = th.Theorem2Config(c=-7.0, h=1.0, grid=32, holomorphicity_grids=None)
    assert cfg.umbilical_branch
    g = th._geometry(th.build_product_surface(None, cfg))
    K = sf.gaussian_curvature(g)
    mask = g.interior()
    want = (cfg.c + 3) / 4 + cfg.h**2
    np.testing.assert_allclose(K["formula"][mask], want, atol=1e-5)
    np.testing.assert_allclose(K["via_gauss_eq"][mask], want, atol=1e-5)


def test_fundamental_equations_on_suite_surfaces(product_geom):
    _, g = product_geom
    for k, v in sf.fundamental_equation_residuals(g).items():
        assert v < 1e-6, k


def test_pmc_needs_grid():
    m = md.make_model("standard_sphere", 1)
    geom = sf.surface_geometry(sf.SurfacePatch.from_function(m, great_sphere, (-0.2, 0.2), (-0.2, 0.2), (10, 10)))
    with pytest.raises(md.PreconditionError):
        sf.pmc_residual(geom)


def test_export_csv(tmp_path, sphere_geom):
    path = tmp_path / "sub" / "surface.csv"
    sf.export_csv(sphere_geom, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:4] == ["u", "v", "K", "K_intrinsic"]
    assert len(lines) == 1 + 48 * 48
