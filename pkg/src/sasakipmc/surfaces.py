"""Second-order geometry of parametrized surfaces in a model space.

A :class:`SurfacePatch` holds an immersion sampled on a rectangular (u, v)
grid together with its first and second partial derivatives.  Everything
pointwise (second fundamental form, mean curvature, shape operators, the
normal frame) is evaluated exactly from those samples and the ambient
connection; quantities that need derivatives of normal fields (the normal
connection, Codazzi, R-perp, pmc) use finite differences along grid lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fd
from . import jets
from . import riemann as rc
from .models import ModelSpace, PreconditionError, structure_values

IMMERSION_TOL = 1e-10
NORMAL_SKIP_TOL = 1e-6
CURVATURE_CHUNK = 1024


class ImmersionError(ValueError):
    """The differential of the immersion is rank deficient somewhere."""


def _dot(g, X, Y):
    return np.einsum("...ab,...a,...b->...", g, X, Y)


def _lower(g, X):
    return np.einsum("...ab,...b->...a", g, X)


@dataclass
class SurfacePatch:
    """An immersion sampled on the grid ``u x v`` (indexing ``ij``).

    ``points``/``fu``/``fv``/``fuu``/``fuv``/``fvv`` have shape ``(nu, nv, m)``.
    """

    model: ModelSpace
    u: np.ndarray
    v: np.ndarray
    points: np.ndarray
    fu: np.ndarray
    fv: np.ndarray
    fuu: np.ndarray
    fuv: np.ndarray
    fvv: np.ndarray
    fd_order: int = 4
    label: str = "surface"
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.points.shape[:2]

    @property
    def du(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def dv(self) -> float:
        return float(self.v[1] - self.v[0])

    @property
    def margin(self) -> int:
        """Grid cells excluded from statistics near the boundary."""
        return self.fd_order

    def interior(self) -> np.ndarray:
        return fd.interior(self.shape, self.margin)

    @classmethod
    def from_function(
        cls,
        model: ModelSpace,
        fn: Callable,
        u_range=(0.0, 1.0),
        v_range=(0.0, 1.0),
        grid=(32, 32),
        fd_order: int = 4,
        label: str = "surface",
    ) -> "SurfacePatch":
        """Sample ``fn`` exactly: it maps a jet (or array) ``(..., 2)`` of (u, v)
        to chart coordinates ``(..., m)`` built from jet-aware operations."""
        u = np.linspace(*u_range, grid[0])
        v = np.linspace(*v_range, grid[1])
        U, V = np.meshgrid(u, v, indexing="ij")
        x = jets.seed_vector(np.stack([U, V], axis=-1), order=2)
        out = fn(x)
        m = model.dim
        shape = U.shape + (m,)
        if isinstance(out, jets.Jet):
            out = out.broadcast_to(shape)
            P, d1, d2 = np.asarray(out.value), out.first, out.second
        else:
            P = np.broadcast_to(np.asarray(out, dtype=float), shape)
            d1 = np.zeros(shape + (2,))
            d2 = np.zeros(shape + (2, 2))
        model.chart.check(P)
        return cls(
            model, u, v, np.array(P), d1[..., 0].copy(), d1[..., 1].copy(),
            d2[..., 0, 0].copy(), d2[..., 0, 1].copy(), d2[..., 1, 1].copy(), fd_order, label,
        )

    @classmethod
    def from_samples(
        cls,
        model: ModelSpace,
        u,
        v,
        points,
        fu=None,
        fv=None,
        fuu=None,
        fuv=None,
        fvv=None,
        fd_order: int = 4,
        label: str = "surface",
    ) -> "SurfacePatch":
        """Build a patch from sampled positions; missing derivatives come from
        finite differences of the next lower order that is available."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        P = np.asarray(points, dtype=float)
        model.chart.check(P)
        hu, hv = u[1] - u[0], v[1] - v[0]
        D = lambda f, ax: fd.derivative(f, hu if ax == 0 else hv, axis=ax, accuracy=fd_order)  # noqa: E731
        fu = D(P, 0) if fu is None else np.asarray(fu, dtype=float)
        fv = D(P, 1) if fv is None else np.asarray(fv, dtype=float)
        if fuu is None:
            fuu = D(fu, 0)
        if fvv is None:
            fvv = D(fv, 1)
        if fuv is None:
            fuv = 0.5 * (D(fu, 1) + D(fv, 0))
        return cls(model, u, v, P, fu, fv, np.asarray(fuu), np.asarray(fuv), np.asarray(fvv), fd_order, label)


@dataclass
class SurfaceGeometry:
    """Per-grid-point geometry of a patch.

    Tangential quantities are stored both in coordinates (``tangents``,
    ``induced_metric``) and in the orthonormal frame ``E1 = f_u/|f_u|``,
    ``E2`` = Gram-Schmidt of ``f_v`` (``frame``, with coefficients
    ``frame_coeffs[..., a, i]`` so that ``E_a = sum_i frame_coeffs[a, i] d_i``).
    """

    patch: SurfacePatch
    g: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    tangents: np.ndarray
    induced_metric: np.ndarray
    induced_inverse: np.ndarray
    induced_gamma: np.ndarray
    frame: np.ndarray
    frame_coeffs: np.ndarray
    sigma: np.ndarray
    mean_curvature: np.ndarray
    normal_frame: np.ndarray
    normal_labels: list
    eta_top: np.ndarray
    conformal_factor: np.ndarray
    a_value: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def model(self) -> ModelSpace:
        return self.patch.model

    @property
    def shape(self) -> tuple:
        return self.patch.shape

    def interior(self) -> np.ndarray:
        return self.patch.interior()

    def sigma_frame(self) -> np.ndarray:
        """sigma(E_a, E_b), shape ``(nu, nv, 2, 2, m)``."""
        e = self.frame_coeffs
        return np.einsum("...ai,...bj,...ijk->...abk", e, e, self.sigma)

    def mean_norm(self) -> np.ndarray:
        return np.sqrt(np.abs(_dot(self.g, self.mean_curvature, self.mean_curvature)))

    def ambient_riemann(self) -> np.ndarray:
        if "riem" not in self._cache:
            P = self.patch.points.reshape(-1, self.model.dim)
            parts = [
                rc.connection_data(self.model.chart, P[i : i + CURVATURE_CHUNK], level=2).riem
                for i in range(0, len(P), CURVATURE_CHUNK)
            ]
            self._cache["riem"] = np.concatenate(parts).reshape(self.shape + parts[0].shape[1:])
        return self._cache["riem"]


def _normal_frame(g, tangents_on, candidates, labels, m):
    """Gram-Schmidt of candidate fields against the tangent plane.

    A candidate is used (everywhere) only if its projected relative norm
    exceeds ``NORMAL_SKIP_TOL`` at every grid point and its normalized
    projection keeps its sign between neighbouring grid points (a zero
    crossing between samples would otherwise go unseen); the frame is
    completed from coordinate vectors, taking the best conditioned
    continuous one next.
    """
    basis = [tangents_on[..., 0, :], tangents_on[..., 1, :]]
    used = []

    def project(c):
        out = c.copy()
        for _ in range(2):
            for b in basis:
                out = out - _dot(g, out, b)[..., None] * b
        return out

    def rel_norm(c, r):
        cn = np.sqrt(np.abs(_dot(g, c, c)))
        rn = np.sqrt(np.abs(_dot(g, r, r)))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(cn > 1e-14, rn / np.maximum(cn, 1e-300), 0.0), rn

    def continuous(n):
        if n.ndim < 3:
            return True
        du = _dot(g[1:], n[1:], n[:-1])
        dv = _dot(g[:, 1:], n[:, 1:], n[:, :-1])
        return bool(np.min(du) > 0 and np.min(dv) > 0)

    for c, lab in zip(candidates, labels):
        if len(basis) == m:
            break
        r = project(c)
        rel, rn = rel_norm(c, r)
        if np.min(rel) > NORMAL_SKIP_TOL and continuous(r / rn[..., None]):
            basis.append(r / rn[..., None])
            used.append(lab)
    eye = np.eye(m)
    while len(basis) < m:
        best, best_key, best_r = None, (False, -1.0), None
        for i in range(m):
            c = np.broadcast_to(eye[i], g.shape[:-1]).copy()
            r = project(c)
            rel, rn = rel_norm(c, r)
            key = (continuous(r / np.maximum(rn, 1e-300)[..., None]), float(np.min(rel)))
            if key > best_key:
                best, best_key, best_r = i, key, (r, rn)
        r, rn = best_r
        basis.append(r / rn[..., None])
        used.append(f"e{best}")
    return np.stack(basis[2:], axis=-2), used


def surface_geometry(patch: SurfacePatch) -> SurfaceGeometry:
    model = patch.model
    m = model.dim
    P = patch.points
    model.chart.check(P)
    flat = P.reshape(-1, m)
    gamma = np.concatenate(
        [rc.connection_data(model.chart, flat[i : i + 4 * CURVATURE_CHUNK], 1).gamma for i in range(0, len(flat), 4 * CURVATURE_CHUNK)]
    ).reshape(P.shape[:-1] + (m, m, m))
    g, phi, xi, eta = structure_values(model, P)
    T = np.stack([patch.fu, patch.fv], axis=-2)
    I = np.einsum("...ab,...ia,...jb->...ij", g, T, T)
    det = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    scale = np.maximum(I[..., 0, 0] * I[..., 1, 1], 1e-300)
    bad = det / scale < IMMERSION_TOL
    if np.any(bad) or np.any(I[..., 0, 0] <= 0):
        idx = tuple(int(i) for i in np.argwhere(bad | (I[..., 0, 0] <= 0))[0])
        raise ImmersionError(f"{patch.label}: induced metric degenerate at grid point {idx}")
    Iinv = np.linalg.inv(I)
    second = np.stack([np.stack([patch.fuu, patch.fuv], -2), np.stack([patch.fuv, patch.fvv], -2)], -3)
    # ambient covariant derivative of d_j along d_i
    D = second + np.einsum("...kab,...ia,...jb->...ijk", gamma, T, T)
    coef = np.einsum("...kl,...ijl->...ijk", Iinv, np.einsum("...ab,...ija,...lb->...ijl", g, D, T))
    sigma = D - np.einsum("...ijk,...ka->...ija", coef, T)
    H = 0.5 * np.einsum("...ij,...ija->...a", Iinv, sigma)

    # orthonormal tangent frame
    e = np.zeros(I.shape)
    e[..., 0, 0] = 1.0 / np.sqrt(I[..., 0, 0])
    w = np.stack([-I[..., 0, 1] / I[..., 0, 0], np.ones(I.shape[:-2])], axis=-1)
    e[..., 1, :] = w / np.sqrt(np.einsum("...i,...ij,...j->...", w, I, w))[..., None]
    E = np.einsum("...ai,...ik->...ak", e, T)

    phiE = np.einsum("...ab,...kb->...ka", phi, E)
    phiH = np.einsum("...ab,...b->...a", phi, H)
    cands = [phiE[..., 0, :], phiE[..., 1, :], H, phiH, xi]
    N, labels = _normal_frame(g, E, cands, ["phiE1", "phiE2", "H", "phiH", "xi"], m)

    eta_top = np.einsum("...a,...ka->...k", eta, E)
    lam2 = 0.5 * (I[..., 0, 0] + I[..., 1, 1])
    sig_f = np.einsum("...ai,...bj,...ijk->...abk", e, e, sigma)
    C111 = _dot(g, sig_f[..., 0, 0, :], phiE[..., 0, :])
    C112 = _dot(g, sig_f[..., 0, 0, :], phiE[..., 1, :])
    a_val = np.sqrt(C111**2 + C112**2)
    return SurfaceGeometry(
        patch, g, gamma, phi, xi, eta, T, I, Iinv, coef, E, e, sigma, H, N, labels, eta_top, lam2, a_val
    )


# -- shape operators and the normal connection -----------------------------------

def shape_operator(geom: SurfaceGeometry, V, at=None) -> np.ndarray:
    """Matrix of A_V in the coordinate basis (``A[i, j]`` = d_i-component of
    A_V d_j), at grid index ``at`` or on the whole grid."""
    g, T, sigma, Iinv = geom.g, geom.tangents, geom.sigma, geom.induced_inverse
    if at is not None:
        g, T, sigma, Iinv = g[at], T[at], sigma[at], Iinv[at]
    V = np.asarray(V, dtype=float)
    tang = np.einsum("...ab,...ia,...b->...i", g, T, V)
    Vn = np.sqrt(np.abs(_dot(g, V, V)))
    Tn = np.sqrt(np.abs(np.einsum("...ab,...ia,...ib->...i", g, T, T)))
    if np.max(np.abs(tang) / np.maximum(Tn * np.maximum(Vn, 1.0), 1e-300)) > 1e-9:
        raise PreconditionError("shape operator needs a normal vector")
    S = np.einsum("...ab,...ija,...b->...ij", g, sigma, V)
    return np.einsum("...ik,...kj->...ij", Iinv, S)


def shape_operator_frame(geom: SurfaceGeometry, V) -> np.ndarray:
    """A_V in the orthonormal tangent frame: ``<sigma(E_a, E_b), V>``."""
    return np.einsum("...ab,...ija,...b->...ij", geom.g, geom.sigma_frame(), V)


def ambient_derivative(geom: SurfaceGeometry, V: np.ndarray) -> np.ndarray:
    """nabla^N_{d_i} V for a field sampled on the grid, shape ``(nu, nv, 2, m)``."""
    p = geom.patch
    dV = np.stack(
        [fd.derivative(V, p.du, axis=0, accuracy=p.fd_order), fd.derivative(V, p.dv, axis=1, accuracy=p.fd_order)],
        axis=-2,
    )
    return dV + np.einsum("...kab,...ia,...b->...ik", geom.gamma, geom.tangents, V)


def normal_part(geom: SurfaceGeometry, W: np.ndarray) -> np.ndarray:
    """Normal projection of ambient vectors ``W[..., m]`` (extra axes allowed
    between the grid and the component axis)."""
    g, T, Iinv = geom.g, geom.tangents, geom.induced_inverse
    extra = W.ndim - g.ndim + 1
    exp = (slice(None), slice(None)) + (None,) * extra
    c = np.einsum("...ab,...a->...b", g[exp], W)
    t = np.einsum("...ib,...b->...i", T[exp], c)
    coef = np.einsum("...ij,...j->...i", Iinv[exp], t)
    return W - np.einsum("...i,...ia->...a", coef, T[exp])


def normal_derivative(geom: SurfaceGeometry, V: np.ndarray) -> np.ndarray:
    """nabla-perp_{d_i} V, shape ``(nu, nv, 2, m)``."""
    return normal_part(geom, ambient_derivative(geom, V))


def normal_derivative_frame(geom: SurfaceGeometry, V: np.ndarray) -> np.ndarray:
    """nabla-perp_{E_a} V."""
    return np.einsum("...ai,...ik->...ak", geom.frame_coeffs, normal_derivative(geom, V))


def connection_forms(geom: SurfaceGeometry) -> np.ndarray:
    """omega[..., i, a, b] = <nabla-perp_{d_i} N_a, N_b>."""
    if "omega" not in geom._cache:
        N = geom.normal_frame
        dN = np.stack([ambient_derivative(geom, N[..., a, :]) for a in range(N.shape[-2])], axis=-2)
        geom._cache["omega"] = np.einsum("...xy,...iax,...by->...iab", geom.g, dN, N)
    return geom._cache["omega"]


def normal_curvature(geom: SurfaceGeometry) -> np.ndarray:
    """<R-perp(d_u, d_v) N_a, N_c> from the connection forms."""
    om = connection_forms(geom)
    p = geom.patch
    d_u = fd.derivative(om[..., 1, :, :], p.du, axis=0, accuracy=p.fd_order)
    d_v = fd.derivative(om[..., 0, :, :], p.dv, axis=1, accuracy=p.fd_order)
    wu, wv = om[..., 0, :, :], om[..., 1, :, :]
    return d_u - d_v + wv @ wu - wu @ wv


def intrinsic_frame_terms(geom: SurfaceGeometry) -> dict:
    """Connection coefficients of the orthonormal tangent frame from the
    induced metric alone (finite differences of I and of the frame).

    ``k1 = <nabla_{E1} E1, E2>``, ``k2 = <nabla_{E2} E2, E1>`` and the
    induced Christoffel symbols ``Gamma[k, i, j]``.
    """
    if "intrinsic" in geom._cache:
        return geom._cache["intrinsic"]
    p = geom.patch
    I, Iinv, e = geom.induced_metric, geom.induced_inverse, geom.frame_coeffs
    dI = np.stack(
        [fd.derivative(I, p.du, axis=0, accuracy=p.fd_order), fd.derivative(I, p.dv, axis=1, accuracy=p.fd_order)],
        axis=-1,
    )
    low = np.einsum("...jli->...lij", dI) + np.einsum("...ilj->...lij", dI) - np.einsum("...ijl->...lij", dI)
    Gam = 0.5 * np.einsum("...kl,...lij->...kij", Iinv, low)
    de = np.stack(
        [fd.derivative(e, p.du, axis=0, accuracy=p.fd_order), fd.derivative(e, p.dv, axis=1, accuracy=p.fd_order)],
        axis=-1,
    )  # de[..., b, k, i] = d_i e_b^k

    def nab(a, b):
        # components of nabla_{E_a} E_b
        return np.einsum("...i,...ki->...k", e[..., a, :], de[..., b, :, :]) + np.einsum(
            "...kij,...i,...j->...k", Gam, e[..., a, :], e[..., b, :]
        )

    def pair(X, Y):
        return np.einsum("...ij,...i,...j->...", I, X, Y)

    conn = np.zeros(I.shape[:-2] + (2, 2, 2))
    for a in range(2):
        for b in range(2):
            Xab = nab(a, b)
            for c in range(2):
                conn[..., a, b, c] = pair(Xab, e[..., c, :])
    out = {"gamma": Gam, "conn": conn, "k1": conn[..., 0, 0, 1], "k2": conn[..., 1, 1, 0]}
    geom._cache["intrinsic"] = out
    return out


def frame_derivative(geom: SurfaceGeometry, f: np.ndarray) -> np.ndarray:
    """E_a(f) for a scalar grid function, shape ``(nu, nv, 2)``."""
    p = geom.patch
    df = np.stack(
        [fd.derivative(f, p.du, axis=0, accuracy=p.fd_order), fd.derivative(f, p.dv, axis=1, accuracy=p.fd_order)],
        axis=-1,
    )
    return np.einsum("...ai,...i->...a", geom.frame_coeffs, df)


# -- residual suites -------------------------------------------------------------

def _stat(x: np.ndarray, mask: np.ndarray | None) -> float:
    x = np.abs(np.asarray(x))
    if mask is not None:
        x = x[mask]
    return float(np.max(x)) if x.size else 0.0


def invariant_residuals(geom: SurfaceGeometry) -> dict:
    """sigma symmetry, H as half the trace, and normality of sigma."""
    g, T, sig, I = geom.g, geom.tangents, geom.sigma, geom.induced_metric
    tang = np.einsum("...ab,...ija,...kb->...ijk", g, sig, T)
    Tn = np.sqrt(np.einsum("...ii->...i", I))
    trace = np.einsum("...ij,...ija->...a", geom.induced_inverse, sig)
    return {
        "sigma_symmetry": float(np.max(np.abs(sig[..., 0, 1, :] - sig[..., 1, 0, :]))),
        "mean_trace": float(np.max(np.abs(2.0 * geom.mean_curvature - trace))),
        "sigma_normality": float(np.max(np.abs(tang) / Tn[..., None, None, :])),
    }


def pmc_field(geom: SurfaceGeometry) -> np.ndarray:
    """|nabla-perp_{E_a} H| maximized over a, on the grid."""
    dH = normal_derivative_frame(geom, geom.mean_curvature)
    n = np.sqrt(np.abs(np.einsum("...ab,...ka,...kb->...k", geom.g, dH, dH)))
    return n.max(axis=-1)


def pmc_residual(geom: SurfaceGeometry) -> float:
    if min(geom.shape) < 16:
        raise PreconditionError("pmc residual needs at least 16 grid points per axis")
    return _stat(pmc_field(geom), geom.interior())


def gaussian_curvature(geom: SurfaceGeometry) -> dict:
    """K by the Gauss equation, by the frame formula of the induced
    connection, and (integral surfaces in dimension 7) by
    ``(c + 3)/4 - 2 a^2 + |H|^2``."""
    sf = geom.sigma_frame()
    E = geom.frame
    riem = geom.ambient_riemann()
    RN = np.einsum("...lijk,...i,...j,...k->...l", riem, E[..., 0, :], E[..., 1, :], E[..., 1, :])
    g = geom.g
    K_gauss = _dot(g, RN, E[..., 0, :]) + _dot(g, sf[..., 0, 0, :], sf[..., 1, 1, :]) - _dot(g, sf[..., 0, 1, :], sf[..., 0, 1, :])
    it = intrinsic_frame_terms(geom)
    k1, k2 = it["k1"], it["k2"]
    dk1 = frame_derivative(geom, k1)
    dk2 = frame_derivative(geom, k2)
    K_int = dk2[..., 0] + dk1[..., 1] - k1**2 - k2**2
    out = {"via_gauss_eq": K_gauss, "intrinsic": K_int, "formula": None}
    model = geom.model
    if model.n == 3 and np.max(np.abs(geom.eta_top)) < 1e-6:
        out["formula"] = (model.c + 3.0) / 4.0 - 2.0 * geom.a_value**2 + geom.mean_norm() ** 2
    return out


def fundamental_equation_residuals(geom: SurfaceGeometry, at=None) -> dict:
    """Max residuals of the Gauss, Codazzi and Ricci equations in the
    orthonormal frame, over the interior (or at the grid index ``at``)."""
    g, e, sig = geom.g, geom.frame_coeffs, geom.sigma
    E = geom.frame
    riem = geom.ambient_riemann()
    K = gaussian_curvature(geom)
    gauss = K["intrinsic"] - K["via_gauss_eq"]

    # Codazzi: (nabla-perp_i sigma)(j, k) in coordinates
    Gam = geom.induced_gamma
    dsig = np.stack(
        [
            np.stack([normal_derivative(geom, sig[..., j, k, :]) for k in range(2)], axis=-2)
            for j in range(2)
        ],
        axis=-3,
    )  # (..., i, j, k, m): nabla-perp_{d_i} sigma_jk
    # induced_gamma[..., i, j, l] is Gamma^l_ij
    corr = np.einsum("...ijl,...lkm->...ijkm", Gam, sig) + np.einsum("...ikl,...jlm->...ijkm", Gam, sig)
    nsig = dsig - corr
    nsig_f = np.einsum("...ai,...bj,...ck,...ijkm->...abcm", e, e, e, nsig)
    cod = []
    for c in range(2):
        RN = np.einsum("...lijk,...i,...j,...k->...l", riem, E[..., 0, :], E[..., 1, :], E[..., c, :])
        res = normal_part(geom, RN) - nsig_f[..., 0, 1, c, :] + nsig_f[..., 1, 0, c, :]
        cod.append(np.sqrt(np.abs(_dot(g, res, res))))
    codazzi = np.maximum(*cod)

    # Ricci
    N = geom.normal_frame
    Rp = normal_curvature(geom)
    # convert from (d_u, d_v) to (E1, E2): divide by the frame area element
    area = np.sqrt(geom.induced_metric[..., 0, 0] * geom.induced_metric[..., 1, 1] - geom.induced_metric[..., 0, 1] ** 2)
    Rp = Rp / area[..., None, None]
    A = np.einsum("...xy,...ijx,...ay->...aij", g, geom.sigma_frame(), N)
    Aa = A[..., :, None, :, :]
    Ab = A[..., None, :, :, :]
    comm = np.einsum("...ij,...jk->...ik", Aa, Ab) - np.einsum("...ij,...jk->...ik", Ab, Aa)
    comm12 = comm[..., 1, 0]
    RNn = np.einsum("...lijk,...i,...j,...ak->...al", riem, E[..., 0, :], E[..., 1, :], N)
    RN_ab = np.einsum("...xy,...ax,...by->...ab", g, RNn, N)
    ricci = np.max(np.abs(Rp - comm12 - RN_ab), axis=(-2, -1))

    if at is not None:
        return {"gauss": float(abs(gauss[at])), "codazzi": float(codazzi[at]), "ricci": float(ricci[at])}
    mask = geom.interior()
    return {"gauss": _stat(gauss, mask), "codazzi": _stat(codazzi, mask), "ricci": _stat(ricci, mask)}


def classify_surface(geom: SurfaceGeometry, interior: bool = True) -> dict:
    """Integral, anti-invariant and pseudo-umbilical residuals plus the
    eta(H) and tangential phi H quantities, which vanish together on
    integral pseudo-umbilical pmc surfaces."""
    g, E, phi, H = geom.g, geom.frame, geom.phi, geom.mean_curvature
    mask = geom.interior() if interior else None
    phiE = np.einsum("...ab,...kb->...ka", phi, E)
    anti = _dot(g, phiE[..., 0, :], E[..., 1, :])
    h2 = _dot(g, H, H)
    AH = shape_operator_frame(geom, H)
    dev = AH - h2[..., None, None] * np.eye(2)
    pu = np.linalg.norm(dev, ord=2, axis=(-2, -1))
    phiH = np.einsum("...ab,...b->...a", phi, H)
    tang = np.einsum("...ab,...ka,...b->...k", g, E, phiH)
    return {
        "integral_residual": _stat(np.abs(geom.eta_top).max(axis=-1), mask),
        "anti_invariant_residual": _stat(anti, mask),
        "pseudo_umbilical_residual": _stat(pu, mask),
        "eta_H": _stat(np.einsum("...a,...a->...", geom.eta, H), mask),
        "phiH_tangency": _stat(np.linalg.norm(tang, axis=-1), mask),
    }


def qualifying_normals(geom: SurfaceGeometry, at) -> np.ndarray:
    """Orthonormal basis (rows) of normals orthogonal to phi(T) and phi H at ``at``."""
    g, N = geom.g[at], geom.normal_frame[at]
    phi, E, H = geom.phi[at], geom.frame[at], geom.mean_curvature[at]
    cons = np.stack([phi @ E[0], phi @ E[1], phi @ H])
    M = np.einsum("ab,ia,jb->ji", g, N, cons)  # constraint rows in normal-frame coordinates
    _, s, vt = np.linalg.svd(M)
    scale = max(1.0, float(s.max()) if s.size else 1.0)
    rank = int(np.sum(s > 1e-8 * scale))
    null = vt[rank:]
    return null @ N


def commuting_shape_check(geom: SurfaceGeometry, at=None):
    """max ||[A_H, A_V]|| over qualifying normals V; None when none exist."""
    idx = [at] if at is not None else [tuple(i) for i in np.argwhere(geom.interior())]
    worst = None
    for ix in idx:
        Vs = qualifying_normals(geom, ix)
        if not len(Vs):
            continue
        sf = geom.sigma_frame()[ix] if at is not None else None
        if sf is None:
            sf = np.einsum("ai,bj,ijk->abk", geom.frame_coeffs[ix], geom.frame_coeffs[ix], geom.sigma[ix])
        g = geom.g[ix]
        AH = np.einsum("xy,ijx,y->ij", g, sf, geom.mean_curvature[ix])
        for V in Vs:
            AV = np.einsum("xy,ijx,y->ij", g, sf, V)
            c = float(np.linalg.norm(AH @ AV - AV @ AH, ord=2))
            worst = c if worst is None else max(worst, c)
    return worst


# -- integral surfaces in dimension 7 -------------------------------------------

def adapted_frame(geom: SurfaceGeometry) -> dict:
    """Tangent frame rotated to diagonalize A_{phi E1} with a >= 0, and the
    normal frame (phi E1, phi E2, H/|H|, phi H/|H|, xi)."""
    g, phi = geom.g, geom.phi
    E = geom.frame
    sf = geom.sigma_frame()
    phiE = np.einsum("...ab,...kb->...ka", phi, E)
    C111 = _dot(g, sf[..., 0, 0, :], phiE[..., 0, :])
    C112 = _dot(g, sf[..., 0, 0, :], phiE[..., 1, :])
    th = np.arctan2(C112, C111) / 3.0
    c, s = np.cos(th), np.sin(th)
    R = np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)
    E_rot = np.einsum("...ab,...bk->...ak", R, E)
    sf_rot = np.einsum("...ac,...bd,...cdk->...abk", R, R, sf)
    H = geom.mean_curvature
    hn = geom.mean_norm()
    E5 = H / hn[..., None]
    phiE_rot = np.einsum("...ab,...kb->...ka", phi, E_rot)
    normals = np.stack([phiE_rot[..., 0, :], phiE_rot[..., 1, :], E5, np.einsum("...ab,...b->...a", phi, E5), geom.xi], -2)
    return {"E": E_rot, "sigma": sf_rot, "normals": normals, "rotation": R, "a": geom.a_value, "h": hn}


def adapted_shape_residuals(geom: SurfaceGeometry) -> dict:
    """Shape operators of the adapted normals against their normal forms."""
    ad = adapted_frame(geom)
    g, sf, Nn, a, h = geom.g, ad["sigma"], ad["normals"], ad["a"], ad["h"]
    A = np.einsum("...xy,...ijx,...ny->...nij", g, sf, Nn)
    eye = np.eye(2)
    z = np.zeros_like(a)
    target3 = np.stack([np.stack([a, z], -1), np.stack([z, -a], -1)], -2)
    target4 = np.stack([np.stack([z, -a], -1), np.stack([-a, z], -1)], -2)
    res = {
        "int1_A_xi": np.abs(A[..., 4, :, :]).max(axis=(-2, -1)),
        "int2_A_H": np.abs(A[..., 2, :, :] - h[..., None, None] * eye).max(axis=(-2, -1)),
        "int3_A_phiE1": np.abs(A[..., 0, :, :] - target3).max(axis=(-2, -1)),
        "int4_A_phiE2": np.abs(A[..., 1, :, :] - target4).max(axis=(-2, -1)),
        "int5_A_phiH": np.abs(A[..., 3, :, :]).max(axis=(-2, -1)),
    }
    phiE = np.einsum("...ab,...kb->...ka", geom.phi, geom.frame)
    C = np.einsum("...xy,...ijx,...ky->...ijk", g, geom.sigma_frame(), phiE)
    res["int0_symmetry"] = np.abs(C - np.swapaxes(C, -1, -2)).max(axis=(-3, -2, -1))
    return {k: float(np.max(v)) for k, v in res.items()}


def normal_derivative_residuals(geom: SurfaceGeometry) -> dict:
    """Normal derivatives of phi E_i, phi H and xi against the closed forms,
    in the frame E1, E2 of the geometry, over the interior."""
    g, phi, E, H, xi = geom.g, geom.phi, geom.frame, geom.mean_curvature, geom.xi
    phiE = np.einsum("...ab,...kb->...ka", phi, E)
    phiH = np.einsum("...ab,...b->...a", phi, H)
    conn = intrinsic_frame_terms(geom)["conn"]  # conn[a, b, c] = <nabla_{E_a} E_b, E_c>
    h2 = _dot(g, H, H)
    mask = geom.interior()

    def nrm(x):
        return np.sqrt(np.abs(_dot(g, x, x)))

    dphiE = [normal_derivative_frame(geom, phiE[..., i, :]) for i in range(2)]  # [i][..., a, m]
    r1 = r2 = 0.0
    for i in range(2):
        j = 1 - i
        t1 = dphiE[i][..., i, :] - conn[..., i, i, j, None] * phiE[..., j, :] - phiH - xi
        r1 = max(r1, _stat(nrm(t1), mask))
        t2 = dphiE[j][..., i, :] - conn[..., i, j, i, None] * phiE[..., i, :]
        r2 = max(r2, _stat(nrm(t2), mask))
    dphiH = normal_derivative_frame(geom, phiH)
    dxi = normal_derivative_frame(geom, xi)
    r3 = max(_stat(nrm(dphiH[..., a, :] + h2[..., None] * phiE[..., a, :]), mask) for a in range(2))
    r4 = max(_stat(nrm(dxi[..., a, :] + phiE[..., a, :]), mask) for a in range(2))
    return {"phiE_ii": r1, "phiE_ij": r2, "phiH": r3, "xi": r4}


def deriv_a_residuals(geom: SurfaceGeometry) -> dict:
    """E1(a) - 3a<nabla_{E2}E2, E1> and E2(a) - 3a<nabla_{E1}E1, E2>."""
    it = intrinsic_frame_terms(geom)
    a = geom.a_value
    da = frame_derivative(geom, a)
    mask = geom.interior()
    return {
        "E1_a": _stat(da[..., 0] - 3 * a * it["k2"], mask),
        "E2_a": _stat(da[..., 1] - 3 * a * it["k1"], mask),
        "E1_a_value": _stat(da[..., 0], mask),
        "E2_a_value": _stat(da[..., 1], mask),
    }


def sigma_umbilic_residual(geom: SurfaceGeometry) -> float:
    """max |sigma(E_a, E_b) - delta_ab H| (totally umbilical test)."""
    sf = geom.sigma_frame()
    H = geom.mean_curvature
    dev = sf - np.eye(2)[..., None] * H[..., None, None, :]
    n = np.sqrt(np.abs(np.einsum("...xy,...abx,...aby->...ab", geom.g, dev, dev)))
    return float(np.max(n))


# -- export ---------------------------------------------------------------------

def export_csv(geom: SurfaceGeometry, path, extra: dict | None = None, curvature: bool = True) -> None:
    """Write one row per grid point: u, v, K, |H|, a, then any extra grids."""
    p = geom.patch
    U, V = np.meshgrid(p.u, p.v, indexing="ij")
    cols = {"u": U, "v": V}
    if curvature:
        K = gaussian_curvature(geom)
        cols["K"] = K["via_gauss_eq"]
        cols["K_intrinsic"] = K["intrinsic"]
    cols["abs_H"] = geom.mean_norm()
    cols["a"] = geom.a_value
    cols["pmc"] = pmc_field(geom)
    for k, v in (extra or {}).items():
        cols[k] = np.broadcast_to(v, U.shape)
    from .report import write_csv

    write_csv(path, cols)
