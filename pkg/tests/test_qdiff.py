import numpy as np
import pytest

from sasakipmc import fibration as fb
from sasakipmc import jets
from sasakipmc import models as md
from sasakipmc import qdiff as qd
from sasakipmc import suites as su
from sasakipmc import surfaces as sf
from sasakipmc import theorems as th


@pytest.fixture(scope="module")
def product_geom():
    cfg = th.Theorem2Config(c=-3.0, h=1.0, grid=32, holomorphicity_grids=None)
    return th._geometry(th.build_product_surface(None, cfg))


def legendre_plane(x):
    """The (x1, x2) coordinate plane of the five-dimensional Heisenberg group."""
    u, v = x[..., 0], x[..., 1]
    z = 0.0 * u
    return jets.stack([u, v, z, z, z], axis=-1)


def test_minimal_integral_surface_has_zero_q1():
    m = md.make_model("heisenberg", 2)
    geom = sf.surface_geometry(sf.SurfacePatch.from_function(m, legendre_plane, (-0.5, 0.5), (-0.5, 0.5), (16, 16)))
    cls = sf.classify_surface(geom)
    assert cls["integral_residual"] < 1e-14
    assert np.max(geom.mean_norm()) < 1e-12
    q = qd.q_forms(qd.isothermal_patch(geom))
    assert np.max(np.abs(q.q1_values)) < 1e-12
    assert cls["pseudo_umbilical_residual"] < 1e-12


def test_dbar_of_constant_is_zero():
    f = np.full((20, 20), 2.0 - 3.0j)
    assert np.max(np.abs(qd.dbar(f, 0.1, 0.1))) == 0.0


def test_dbar_of_holomorphic_function():
    u = np.linspace(0, 1, 41)
    U, V = np.meshgrid(u, u, indexing="ij")
    z = U + 1j * V
    d = qd.dbar(z**2, u[1], u[1])
    assert np.max(np.abs(d[1:-1, 1:-1])) < 1e-12
    d = qd.dbar(np.conj(z), u[1], u[1])
    np.testing.assert_allclose(d[1:-1, 1:-1], 1.0, atol=1e-12)


def test_non_isothermal_patch_rejected():
    m = md.make_model("heisenberg", 2)

    def stretched(x):
        u, v = x[..., 0], x[..., 1]
        z = 0.0 * u
        return jets.stack([2.0 * u, v, z, z, z], axis=-1)

    geom = sf.surface_geometry(sf.SurfacePatch.from_function(m, stretched, (0, 0.5), (0, 0.5), (16, 16)))
    with pytest.raises(md.PreconditionError, match="not isothermal"):
        qd.isothermal_patch(geom)


def test_product_surface_q_forms(product_geom):
    q = qd.q_forms(qd.isothermal_patch(product_geom))
    assert q.q1_values.shape == product_geom.shape
    assert q.identity_residual < 1e-10
    geom = product_geom
    Z = qd.isothermal_patch(geom).z_frame
    etaZ = np.einsum("...a,...a->...", geom.eta, Z)
    assert np.max(np.abs(etaZ)) < 1e-6


def test_q_vanishing_equivalence(product_geom):
    res = qd.q_vanishing_equivalence(product_geom)
    assert res["q1_zero"] and res["pseudo_umbilical"] and res["agree"]


def test_q_vanishing_equivalence_perturbed():
    cfg = th.Theorem2Config(c=-3.0, h=1.0, grid=32, holomorphicity_grids=None)
    surf = th.build_product_surface(None, cfg)
    geom = th._geometry(surf)
    # remove the H-part of sigma(E2, E2): umbilicity in the H direction breaks
    broken = sf.surface_geometry(sf.SurfacePatch.from_samples(
        geom.model, geom.patch.u, geom.patch.v, geom.patch.points, geom.patch.fu, geom.patch.fv,
        geom.patch.fuu, geom.patch.fuv, geom.patch.fvv - 0.5 * geom.mean_curvature * 1.0, fd_order=4))
    res = qd.q_vanishing_equivalence(broken)
    assert not res["q1_zero"] and not res["pseudo_umbilical"] and res["agree"]


def test_q_vanishing_needs_integral_surface():
    rep = su.verify_cylinder(su.CylinderConfig(kind="heisenberg", kappa=1.0, tau=1.0, grid=32))
    with pytest.raises(md.PreconditionError, match="not integral"):
        qd.q_vanishing_equivalence(rep.artifacts["geometry"])


def _cylinder_builder(modulation):
    def build(n):
        cfg = su.CylinderConfig(kind="heisenberg", kappa=1.0, tau=1.0, grid=n, modulation=modulation)
        _, _, patch = su.build_cylinder(cfg)
        return sf.surface_geometry(patch)

    return build


def test_pmc_cylinder_holomorphicity():
    study = qd.holomorphicity_study(_cylinder_builder(0.0), (17, 33, 65))
    for lv in study["levels"]:
        assert lv["max_dbar_q1"] < 1e-6 and lv["max_dbar_q2"] < 1e-6


def test_non_pmc_cylinder_fails_gate_and_does_not_converge():
    build = _cylinder_builder(0.3)
    with pytest.raises(md.PreconditionError, match="not pmc"):
        qd.holomorphicity_study(build, (17, 33, 65))
    study = qd.holomorphicity_study(build, (17, 33, 65), gate=False)
    errs = [lv["max_dbar_q1"] for lv in study["levels"]]
    assert min(errs) > 1e-2
    assert abs(study["order_q1"]) < 0.5


def test_qgrid_export(tmp_path, product_geom):
    q = qd.q_forms(qd.isothermal_patch(product_geom))
    path = tmp_path / "q.csv"
    q.export_csv(path)
    head = path.read_text().splitlines()[0]
    assert head == "u,v,re_q1,im_q1,abs_dbar_q1,re_q2,im_q2,abs_dbar_q2"
