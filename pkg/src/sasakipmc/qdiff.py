"""The quadratic forms Q1, Q2 on isothermal patches and the holomorphicity of their (2,0)-parts.

Complexified tangent vectors are paired complex-bilinearly (no conjugation),
and ``Z = (d_u - i d_v) / sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import fd
from . import surfaces as sf
from .models import PreconditionError

ISOTHERMAL_TOL = 1e-7
ANTI_INVARIANT_GATE = 1e-6
PMC_GATE = 1e-4


@dataclass
class IsothermalPatch:
    geom: sf.SurfaceGeometry
    lambda_sq: np.ndarray
    z_frame: np.ndarray

    @property
    def h(self) -> tuple:
        return self.geom.patch.du, self.geom.patch.dv


def isothermal_patch(geom: sf.SurfaceGeometry, tol: float = ISOTHERMAL_TOL) -> IsothermalPatch:
    I = geom.induced_metric
    lam2 = 0.5 * (I[..., 0, 0] + I[..., 1, 1])
    dev = np.maximum(np.abs(I[..., 0, 0] - I[..., 1, 1]), np.abs(I[..., 0, 1])) / lam2
    if np.max(dev) >= tol:
        idx = tuple(int(i) for i in np.unravel_index(np.argmax(dev), dev.shape))
        raise PreconditionError(f"patch is not isothermal: relative defect {np.max(dev):.3g} at grid point {idx}")
    T = geom.tangents
    Z = (T[..., 0, :] - 1j * T[..., 1, :]) / math.sqrt(2.0)
    return IsothermalPatch(geom, lam2, Z)


@dataclass
class QGrid:
    u: np.ndarray
    v: np.ndarray
    q1_values: np.ndarray
    q2_values: np.ndarray
    dbar_q1: np.ndarray
    dbar_q2: np.ndarray
    identity_residual: float

    def export_csv(self, path) -> None:
        U, V = np.meshgrid(self.u, self.v, indexing="ij")
        cols = {
            "u": U,
            "v": V,
            "re_q1": self.q1_values.real,
            "im_q1": self.q1_values.imag,
            "abs_dbar_q1": np.abs(self.dbar_q1),
            "re_q2": self.q2_values.real,
            "im_q2": self.q2_values.imag,
            "abs_dbar_q2": np.abs(self.dbar_q2),
        }
        from .report import write_csv

        write_csv(path, cols)


def dbar(f: np.ndarray, hu: float, hv: float) -> np.ndarray:
    """(1/2)(d_u + i d_v) with second-order central differences."""
    return 0.5 * (fd.derivative(f, hu, axis=0, accuracy=2) + 1j * fd.derivative(f, hv, axis=1, accuracy=2))


def q_forms(patch: IsothermalPatch) -> QGrid:
    geom = patch.geom
    g, phi, eta = geom.g, geom.phi, geom.eta
    sig, H = geom.sigma, geom.mean_curvature
    c = geom.model.c
    Z = patch.z_frame
    sZZ = 0.5 * (sig[..., 0, 0, :] - sig[..., 1, 1, :] - 2j * sig[..., 0, 1, :])
    sH = np.einsum("...ab,...a,...b->...", g, sZZ, H)
    etaZ = np.einsum("...a,...a->...", eta, Z)
    phiZ = np.einsum("...ab,...b->...a", phi, Z)
    phiZ_H = np.einsum("...ab,...a,...b->...", g, phiZ, H)
    q1 = 8.0 * sH - (c - 1.0) * etaZ**2
    q2 = phiZ_H**2 + etaZ**2 - 2.0 * etaZ * phiZ_H
    ident = float(np.max(np.abs(q2 - (etaZ - phiZ_H) ** 2)))
    hu, hv = patch.h
    p = geom.patch
    return QGrid(p.u, p.v, q1, q2, dbar(q1, hu, hv), dbar(q2, hu, hv), ident)


def hypothesis_residuals(geom: sf.SurfaceGeometry) -> dict:
    cls = sf.classify_surface(geom)
    return {"anti_invariant": cls["anti_invariant_residual"], "pmc": sf.pmc_residual(geom)}


def check_hypotheses(geom: sf.SurfaceGeometry, anti_tol: float = ANTI_INVARIANT_GATE, pmc_tol: float = PMC_GATE) -> dict:
    res = hypothesis_residuals(geom)
    if res["anti_invariant"] >= anti_tol:
        raise PreconditionError(f"surface is not anti-invariant (residual {res['anti_invariant']:.3g})")
    if res["pmc"] >= pmc_tol:
        raise PreconditionError(f"surface is not pmc (residual {res['pmc']:.3g})")
    return res


def holomorphicity_residual(qgrid: QGrid, margin: int = 1) -> dict:
    """Max |dbar Q_i(Z, Z)| away from a ``margin``-cell boundary strip."""
    mask = fd.interior(qgrid.q1_values.shape, margin)
    return {
        "max_dbar_q1": float(np.max(np.abs(qgrid.dbar_q1[mask]))),
        "max_dbar_q2": float(np.max(np.abs(qgrid.dbar_q2[mask]))),
        "convergence_order": None,
    }


def holomorphicity_study(
    build: Callable[[int], sf.SurfaceGeometry],
    grids: Sequence[int] = (32, 64, 128),
    gate: bool = True,
    margin_cells: int | None = None,
) -> dict:
    """dbar residuals across refinements and their empirical order.

    ``build(n)`` returns the geometry on an ``n x n`` grid over a fixed
    domain.  Statistics use the points at least ``margin_cells`` coarsest-grid
    cells away from the boundary so that all levels measure the same region.
    """
    rows = []
    for n in grids:
        geom = build(n)
        hyp = check_hypotheses(geom) if gate else hypothesis_residuals(geom)
        q = q_forms(isothermal_patch(geom))
        mc = margin_cells if margin_cells is not None else geom.patch.margin
        scale = (n - 1) // (grids[0] - 1)
        res = holomorphicity_residual(q, margin=max(1, mc * scale))
        res.update(n=n, h=geom.patch.du, hypotheses=hyp)
        rows.append(res)
    hs = [r["h"] for r in rows]
    o1 = fd.convergence_order(hs, [r["max_dbar_q1"] for r in rows])
    o2 = fd.convergence_order(hs, [r["max_dbar_q2"] for r in rows])
    return {"levels": rows, "order_q1": o1, "order_q2": o2}


def q_vanishing_equivalence(geom: sf.SurfaceGeometry, tol: float = 1e-5) -> dict:
    model = geom.model
    cls = sf.classify_surface(geom)
    if cls["integral_residual"] >= 1e-6:
        raise PreconditionError(f"surface is not integral (residual {cls['integral_residual']:.3g})")
    if model.n != 3:
        raise PreconditionError("the equivalence is stated for seven-dimensional models")
    q = q_forms(isothermal_patch(geom))
    mask = geom.interior()
    q1max = float(np.max(np.abs(q.q1_values[mask])))
    q1_zero = q1max < tol
    pu = cls["pseudo_umbilical_residual"] < tol
    return {"q1_zero": q1_zero, "pseudo_umbilical": pu, "agree": q1_zero == pu, "max_q1": q1max,
            "pseudo_umbilical_residual": cls["pseudo_umbilical_residual"]}
