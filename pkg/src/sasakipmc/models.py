"""Coordinate models of the simply connected Sasakian space forms.

Four families are provided:

``standard_sphere``  S^{2n+1} with its canonical structure, c = 1
``deformed_sphere``  the D-homothetic deformation with parameter a, c = 4/a - 3
``heisenberg``       the generalized Heisenberg group, c = -3
``ball_times_line``  B^{2n} x R over a complex hyperbolic ball of holomorphic
                     curvature k < 0, c = k - 3

Sphere kinds use the graph chart over the open hemisphere where the last
ambient coordinate is positive; chart coordinates are the first 2n+1 ambient
coordinates, so chart components of a tangent vector are simply the first
2n+1 ambient components.  R^{2n+2} is identified with C^{n+1} through
z_j = x_{2j} + i x_{2j+1}.

Heisenberg and ball models order coordinates as (x^1..x^n, y^1..y^n, last).

``d eta`` is used with the halved convention
d eta(U, V) = 1/2 (U eta(V) - V eta(U) - eta([U, V])); with it the contact
condition d eta(U, V) = <U, phi V> holds on every model here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from . import riemann as rc
from .riemann import MetricChart

KINDS = ("standard_sphere", "deformed_sphere", "heisenberg", "ball_times_line")

# chart domains (spheres and balls also need a radius bound)
SPHERE_HALF_WIDTH = 0.97
SPHERE_RADIUS = 0.97
HEISENBERG_HALF_WIDTH = 50.0
BALL_HALF_WIDTH = 0.95
BALL_RADIUS = 0.95
T_HALF_WIDTH = 12.0

# random sampling regions, well inside the chart domains
SAMPLE_HALF_WIDTH = {"sphere": 0.6, "heisenberg": 2.0, "ball": 0.6}
SAMPLE_RADIUS = {"sphere": 0.8, "ball": 0.85}


class ModelParameterError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpace:
    kind: str
    n: int
    c: float
    chart: MetricChart
    phi_fn: Callable
    xi_fn: Callable
    eta_fn: Callable
    deform_a: float | None = None
    k: float | None = None
    perturb: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def label(self) -> str:
        bits = [self.kind, f"n={self.n}"]
        if self.deform_a is not None:
            bits.append(f"a={self.deform_a:g}")
        if self.k is not None:
            bits.append(f"k={self.k:g}")
        return " ".join(bits)


# -- helpers -------------------------------------------------------------------

def _full(v, batch: tuple, tail: tuple) -> np.ndarray:
    return np.broadcast_to(np.asarray(jets.value_of(v), dtype=float), batch + tail)


def _const_field(arr: np.ndarray):
    """A constant tensor field, returned as an array of the right batch shape."""

    def fn(x):
        batch = np.shape(jets.value_of(x))[:-1]
        return np.broadcast_to(arr, batch + arr.shape)

    return fn


# -- sphere family ----------------------------------------------------------

def _sphere_complex_matrix(m: int) -> np.ndarray:
    """J restricted to the first m = 2n+1 ambient slots: J e_{2j} = e_{2j+1}."""
    J = np.zeros((m, m))
    for a in range(0, m - 1, 2):
        J[a + 1, a] = 1.0
        J[a, a + 1] = -1.0
    return J


def _sphere_pieces(x, m: int):
    """``(q, xi_chart, eta0)`` for the graph chart; q = p / s with s the last ambient coordinate."""
    s = jets.sqrt(1.0 - jets.vsum(x * x))
    q = x / s[..., None]
    J = _sphere_complex_matrix(m)
    last = np.zeros(m)
    last[-1] = 1.0
    # xi0 = -J X; its chart part picks up the last ambient coordinate in slot m-1
    xi_chart = -jets.matvec(J, x) + s[..., None] * last
    xi_last = -x[..., m - 1]
    eta0 = xi_chart - q * xi_last[..., None]
    return q, xi_chart, eta0


def _sphere_model(n: int, a: float, kind: str, perturb: float) -> ModelSpace:
    m = 2 * n + 1
    J = _sphere_complex_matrix(m)
    last = np.zeros(m)
    last[-1] = 1.0
    eye = np.eye(m)

    def metric(x):
        q, _, eta0 = _sphere_pieces(x, m)
        g = a * (jets.outer(q, q) + eye)
        if a != 1.0:
            g = g + (a * (a - 1.0)) * jets.outer(eta0, eta0)
        return _perturbed(g, x, perturb)

    def phi(x):
        # (J W) on the chart part; the last row is (p . V)/s
        q, _, eta0 = _sphere_pieces(x, m)
        return jets.outer(last, q) + J - jets.outer(x, eta0)

    def xi(x):
        _, xi_chart, _ = _sphere_pieces(x, m)
        return xi_chart * (1.0 / a)

    def eta(x):
        _, _, eta0 = _sphere_pieces(x, m)
        return eta0 * a

    chart = MetricChart(
        m,
        metric,
        -SPHERE_HALF_WIDTH * np.ones(m),
        SPHERE_HALF_WIDTH * np.ones(m),
        inside=lambda p: np.sum(np.asarray(p) ** 2, axis=-1) < SPHERE_RADIUS**2,
        name=f"{kind}(n={n})",
    )
    c = 4.0 / a - 3.0
    return ModelSpace(
        kind=kind,
        n=n,
        c=c,
        chart=chart,
        phi_fn=phi,
        xi_fn=xi,
        eta_fn=eta,
        deform_a=None if kind == "standard_sphere" else a,
        perturb=perturb,
    )


def sphere_ambient(p) -> np.ndarray:
    """Embed chart points of a sphere model into R^{2n+2}."""
    p = np.asarray(p, dtype=float)
    s = np.sqrt(1.0 - np.sum(p * p, axis=-1))
    return np.concatenate([p, s[..., None]], axis=-1)


# -- Heisenberg ---------------------------------------------------------------

def _heisenberg_model(n: int, perturb: float) -> ModelSpace:
    m = 2 * n + 1
    L = np.zeros((m, m))
    Y = np.zeros((m, m))
    phi0 = np.zeros((m, m))
    for i in range(n):
        L[i, n + i] = -0.5
        Y[n + i, n + i] = 1.0
        phi0[i, n + i] = 1.0
        phi0[n + i, i] = -1.0
    last = np.zeros(m)
    last[-1] = 1.0
    flat = np.diag(np.r_[0.25 * np.ones(2 * n), 0.0])

    def eta(x):
        # eta = 1/2 (dz - sum y dx)
        return jets.matvec(L, x) + 0.5 * last

    def metric(x):
        e = eta(x)
        return _perturbed(jets.outer(e, e) + flat, x, perturb)

    def phi(x):
        # last row carries y^j in the d/dy^j slots
        return jets.outer(last, jets.matvec(Y, x)) + phi0

    xi = _const_field(2.0 * last)
    w = HEISENBERG_HALF_WIDTH
    chart = MetricChart(m, metric, -w * np.ones(m), w * np.ones(m), name=f"heisenberg(n={n})")
    return ModelSpace("heisenberg", n, -3.0, chart, phi, xi, eta, perturb=perturb)


# -- ball x line --------------------------------------------------------------

def ball_complex_structure(n: int) -> np.ndarray:
    """J on B^{2n} in (x, y) ordering: J d/dx^j = d/dy^j."""
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[n + i, i] = 1.0
        J[i, n + i] = -1.0
    return J


def _ball_pieces(x, n: int, k: float):
    """Kahler metric G and primitive omega of its fundamental form on B^{2n}."""
    J = ball_complex_structure(n)
    z = x[..., : 2 * n]
    w = 1.0 / (1.0 - jets.vsum(z * z))
    # alpha = sum x dx + y dy, beta = sum x dy - y dx
    beta = jets.matvec(J, z)
    ww = (w * w)[..., None, None]
    G = (4.0 / abs(k)) * (w[..., None, None] * np.eye(2 * n) + ww * (jets.outer(z, z) + jets.outer(beta, beta)))
    omega = (4.0 / k) * beta * w[..., None]
    return G, omega


def _ball_model(n: int, k: float, perturb: float) -> ModelSpace:
    m = 2 * n + 1
    J = ball_complex_structure(n)
    last = np.zeros(m)
    last[-1] = 1.0
    phi0 = jets.embed(J, m, axes=2)

    def eta(x):
        _, omega = _ball_pieces(x, n, k)
        return jets.embed(omega, m) + last

    def metric(x):
        G, omega = _ball_pieces(x, n, k)
        e = jets.embed(omega, m) + last
        return _perturbed(jets.embed(G, m, axes=2) + jets.outer(e, e), x, perturb)

    def phi(x):
        # bottom row: -omega o J
        _, omega = _ball_pieces(x, n, k)
        row = -jets.embed(jets.matvec(J.T, omega), m)
        return jets.outer(last, row) + phi0

    xi = _const_field(last)
    lower = np.concatenate([-BALL_HALF_WIDTH * np.ones(2 * n), [-T_HALF_WIDTH]])
    upper = np.concatenate([BALL_HALF_WIDTH * np.ones(2 * n), [T_HALF_WIDTH]])
    chart = MetricChart(
        m,
        metric,
        lower,
        upper,
        inside=lambda p: np.sum(np.asarray(p)[..., : 2 * n] ** 2, axis=-1) < BALL_RADIUS**2,
        name=f"ball_times_line(n={n},k={k:g})",
    )
    return ModelSpace("ball_times_line", n, k - 3.0, chart, phi, xi, eta, k=k, perturb=perturb)


def _perturbed(g, x, eps: float):
    if not eps:
        return g
    bump = eps * jets.exp(-1.0 * jets.vsum(x * x))
    m = np.shape(jets.value_of(x))[-1]
    return g + bump[..., None, None] * np.eye(m)


def make_model(kind: str, n: int = 1, a: float | None = None, k: float | None = None, perturb: float = 0.0) -> ModelSpace:
    """Build a Sasakian space form in coordinates.

    ``a`` is the deformation constant of ``deformed_sphere``; ``k`` the
    holomorphic curvature of the ball for ``ball_times_line``.  ``perturb``
    adds ``perturb * exp(-|x|^2)`` to the metric diagonal (structure tensors
    untouched), which breaks the Sasakian identities on purpose.
    """
    if kind not in KINDS:
        raise ModelParameterError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if int(n) != n or n < 1:
        raise ModelParameterError(f"n must be an integer >= 1, got {n}")
    n = int(n)
    if kind == "standard_sphere":
        return _sphere_model(n, 1.0, kind, perturb)
    if kind == "deformed_sphere":
        if a is None or not a > 0:
            raise ModelParameterError(f"deformed_sphere needs a > 0, got a={a}")
        return _sphere_model(n, float(a), kind, perturb)
    if kind == "heisenberg":
        return _heisenberg_model(n, perturb)
    if k is None or not k < 0:
        raise ModelParameterError(f"ball_times_line needs k < 0, got k={k}")
    return _ball_model(n, float(k), perturb)


def model_for_c(c: float, n: int) -> ModelSpace:
    """The model of Tanno's list realizing phi-sectional curvature ``c``."""
    if abs(c - 1.0) < 1e-15:
        return make_model("standard_sphere", n)
    if c > -3.0:
        return make_model("deformed_sphere", n, a=4.0 / (c + 3.0))
    if abs(c + 3.0) < 1e-15:
        return make_model("heisenberg", n)
    return make_model("ball_times_line", n, k=c + 3.0)


# -- structure tensors as arrays ----------------------------------------------

@dataclass
class StructureData:
    """phi, xi, eta (with first derivatives) plus connection data at points."""

    points: np.ndarray
    phi: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    dphi: np.ndarray
    dxi: np.ndarray
    deta: np.ndarray
    geo: rc.PointGeometry

    @property
    def g(self) -> np.ndarray:
        return self.geo.g


def structure_data(model: ModelSpace, points, level: int = 1) -> StructureData:
    p = model.chart.check(points)
    x = jets.seed_vector(p, order=1)
    m = model.dim
    batch = p.shape[:-1]
    phi, dphi = _value_and_first(model.phi_fn(x), batch + (m, m), m)
    xi, dxi = _value_and_first(model.xi_fn(x), batch + (m,), m)
    eta, deta = _value_and_first(model.eta_fn(x), batch + (m,), m)
    geo = rc.connection_data(model.chart, p, level=level)
    return StructureData(p, phi, xi, eta, dphi, dxi, deta, geo)


def _value_and_first(f, shape: tuple, dim: int):
    if isinstance(f, jets.Jet):
        f = f.broadcast_to(shape)
        return np.asarray(f.value), f.first
    v = np.broadcast_to(np.asarray(f, dtype=float), shape)
    return v, np.zeros(shape + (dim,))


def structure_values(model: ModelSpace, points) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(g, phi, xi, eta)`` at points without derivatives."""
    p = np.asarray(points, dtype=float)
    batch = p.shape[:-1]
    m = model.dim
    g = model.chart.metric(p)
    phi = _full(model.phi_fn(p), batch, (m, m))
    xi = _full(model.xi_fn(p), batch, (m,))
    eta = _full(model.eta_fn(p), batch, (m,))
    return g, phi, xi, eta


def d_eta(sd: StructureData) -> np.ndarray:
    """Halved exterior derivative: d eta(d_a, d_b) = 1/2 (d_a eta_b - d_b eta_a)."""
    return 0.5 * (np.swapaxes(sd.deta, -1, -2) - sd.deta)


def structure_residuals(model: ModelSpace, points) -> dict:
    """Max residual of every defining identity over coordinate-frame arguments.

    Keys: ``phi_squared``, ``compatible_metric``, ``contact``, ``normality``,
    ``sasakian``, ``killing_xi``, ``eta_xi``, ``phi_xi``, ``eta_phi``,
    ``eta_dual``.  Values are maxima over the points given.
    """
    sd = structure_data(model, points, level=1)
    m = model.dim
    g, phi, xi, eta = sd.g, sd.phi, sd.xi, sd.eta
    gamma = sd.geo.gamma
    eye = np.eye(m)
    out = {}
    out["phi_squared"] = phi @ phi + eye - xi[..., :, None] * eta[..., None, :]
    out["compatible_metric"] = np.swapaxes(phi, -1, -2) @ g @ phi - g + eta[..., :, None] * eta[..., None, :]
    g_phi = g @ phi  # <d_a, phi d_b>
    deta = d_eta(sd)
    out["contact"] = deta - g_phi
    # dphi[..., k, b, i] = d_i phi^k_b
    bracket = np.einsum("...ia,...kbi->...kab", phi, sd.dphi) - np.einsum("...ib,...kai->...kab", phi, sd.dphi)
    nij = (
        bracket
        + np.einsum("...kl,...lab->...kab", phi, sd.dphi)  # phi d_b phi_a
        - np.einsum("...kl,...lba->...kab", phi, sd.dphi)  # phi d_a phi_b
    )
    out["normality"] = nij + 2.0 * deta[..., None, :, :] * xi[..., :, None, None]
    nabla_phi = (
        np.einsum("...kba->...kab", sd.dphi)
        + np.einsum("...kal,...lb->...kab", gamma, phi)
        - np.einsum("...kl,...lab->...kab", phi, gamma)
    )
    out["sasakian"] = (
        nabla_phi - g[..., None, :, :] * xi[..., :, None, None] + eye[:, :, None] * eta[..., None, None, :]
    )
    nabla_xi = np.einsum("...ka->...ka", sd.dxi) + np.einsum("...kal,...l->...ka", gamma, xi)
    out["killing_xi"] = nabla_xi + phi
    out["eta_xi"] = np.einsum("...a,...a->...", eta, xi) - 1.0
    out["phi_xi"] = np.einsum("...ab,...b->...a", phi, xi)
    out["eta_phi"] = np.einsum("...a,...ab->...b", eta, phi)
    out["eta_dual"] = np.einsum("...ab,...b->...a", g, xi) - eta
    return {k: float(np.max(np.abs(v))) for k, v in out.items()}


def random_horizontal_unit(model: ModelSpace, points, rng: np.random.Generator) -> np.ndarray:
    """Random unit vectors orthogonal to xi at each point."""
    g, _, xi, eta = structure_values(model, points)
    u = rng.normal(size=np.shape(points))
    u = u - np.einsum("...a,...a->...", eta, u)[..., None] * xi
    norm = np.sqrt(np.einsum("...ab,...a,...b->...", g, u, u))
    return u / norm[..., None]


def phi_sectional(model: ModelSpace, p, U, sd: StructureData | None = None) -> np.ndarray:
    """Sectional curvature of span(U, phi U) for unit U orthogonal to xi."""
    p = np.asarray(p, dtype=float)
    if sd is None:
        sd = structure_data(model, p, level=2)
    U = np.asarray(U, dtype=float)
    if np.any(np.abs(np.einsum("...a,...a->...", sd.eta, U)) > 1e-10):
        raise PreconditionError("U must be orthogonal to xi")
    norm = rc.inner(sd.g, U, U)
    if np.any(np.abs(norm - 1.0) > 1e-8):
        raise PreconditionError("U must be a unit vector")
    phiU = np.einsum("...ab,...b->...a", sd.phi, U)
    return rc.sectional_curvature(model.chart, p, U, phiU, geo=sd.geo)


def curvature_formula_tensor(sd: StructureData, c: float) -> np.ndarray:
    """Right-hand side of the space-form curvature formula as ``F[l, i, j, k]``.

    Component ``l`` of R(U, V)W with U = d_i, V = d_j, W = d_k.
    """
    g, phi, xi, eta = sd.g, sd.phi, sd.xi, sd.eta
    m = g.shape[-1]
    e = np.eye(m)
    gphi = g @ phi  # <d_a, phi d_b>
    A = 0.25 * (c + 3.0)
    B = 0.25 * (c - 1.0)
    # U = d_i -> e[l, i]; <W, V> = g[k, j]; <W, phi V> = gphi[k, j]
    t = A * (np.einsum("...kj,li->...lijk", g, e) - np.einsum("...ki,lj->...lijk", g, e))
    t = t + B * (
        np.einsum("...k,...i,lj->...lijk", eta, eta, e)
        - np.einsum("...k,...j,li->...lijk", eta, eta, e)
        + np.einsum("...ki,...j,...l->...lijk", g, eta, xi)
        - np.einsum("...kj,...i,...l->...lijk", g, eta, xi)
        + np.einsum("...kj,...li->...lijk", gphi, phi)
        - np.einsum("...ki,...lj->...lijk", gphi, phi)
        + 2.0 * np.einsum("...ij,...lk->...lijk", gphi, phi)
    )
    return t


def curvature_formula_residual(model: ModelSpace, p, U=None, V=None, W=None, c_offset: float = 0.0) -> np.ndarray:
    """max-norm of R(U,V)W minus the space-form formula.

    With U, V, W omitted, the maximum runs over all coordinate-frame triples.
    """
    sd = structure_data(model, p, level=2)
    diff = sd.geo.riem - curvature_formula_tensor(sd, model.c + c_offset)
    if U is None:
        return np.max(np.abs(diff), axis=(-4, -3, -2, -1))
    vec = np.einsum("...lijk,...i,...j,...k->...l", diff, U, V, W)
    return np.max(np.abs(vec), axis=-1)


def okumura_torsion(sd: StructureData, flip: bool = False) -> np.ndarray:
    """T[k, u, v]: component k of T_U V = <U, phi V> xi - eta(U) phi V + eta(V) phi U."""
    gphi = sd.g @ sd.phi
    s = -1.0 if flip else 1.0
    return (
        np.einsum("...uv,...k->...kuv", gphi, sd.xi)
        - np.einsum("...u,...kv->...kuv", sd.eta, sd.phi)
        + s * np.einsum("...v,...ku->...kuv", sd.eta, sd.phi)
    )


@dataclass(frozen=True)
class OkumuraData:
    torsion_fn: Callable
    rbar_fn: Callable


def okumura(model: ModelSpace, flip: bool = False) -> OkumuraData:
    """Torsion and curvature of the Okumura connection as point functions."""

    def torsion(p, U, V):
        sd = structure_data(model, p, level=1)
        T = okumura_torsion(sd, flip)
        return np.einsum("...kuv,...u,...v->...k", T, U, V)

    def rbar(p, U, V, W):
        sd = structure_data(model, p, level=2)
        g, phi, xi, eta = sd.g, sd.phi, sd.xi, sd.eta
        R = rc.apply_riemann(sd.geo.riem, U, V, W)
        ip = lambda a, b: rc.inner(g, a, b)  # noqa: E731
        ph = lambda a: np.einsum("...ab,...b->...a", phi, a)  # noqa: E731
        et = lambda a: np.einsum("...a,...a->...", eta, a)  # noqa: E731
        out = R + et(W)[..., None] * (et(U)[..., None] * V - et(V)[..., None] * U)
        out = out + ip(ph(V), W)[..., None] * ph(U) - ip(ph(U), W)[..., None] * ph(V)
        out = out + 2.0 * ip(ph(U), V)[..., None] * ph(W)
        out = out + (ip(U, W) * et(V) - ip(V, W) * et(U))[..., None] * xi
        return out

    return OkumuraData(torsion, rbar)


def phi_symmetry_tensor(sd: StructureData) -> np.ndarray:
    """Residual tensor of the local phi-symmetry identity, indexed [m, l, i, j, k].

    (nabla_U R)(X,Y)Z + T_U R(X,Y)Z - R(T_U X,Y)Z - R(X,T_U Y)Z - R(X,Y)T_U Z
    with U = d_m, X = d_i, Y = d_j, Z = d_k, component l.
    """
    nab = sd.geo.nabla_riem
    riem = sd.geo.riem
    T = okumura_torsion(sd)
    return (
        nab
        + np.einsum("...lmp,...pijk->...mlijk", T, riem)
        - np.einsum("...pmi,...lpjk->...mlijk", T, riem)
        - np.einsum("...pmj,...lipk->...mlijk", T, riem)
        - np.einsum("...pmk,...lijp->...mlijk", T, riem)
    )


def phi_symmetry_residual(model: ModelSpace, p, U=None, X=None, Y=None, Z=None) -> np.ndarray:
    sd = structure_data(model, p, level=3)
    res = phi_symmetry_tensor(sd)
    if U is None:
        return np.max(np.abs(res), axis=(-5, -4, -3, -2, -1))
    vec = np.einsum("...mlijk,...m,...i,...j,...k->...l", res, U, X, Y, Z)
    return np.max(np.abs(vec), axis=-1)


def okumura_geodesic_check(model: ModelSpace, p, v, flip: bool = False) -> np.ndarray:
    """|T_v v| in the model metric; vanishes identically for the true torsion."""
    sd = structure_data(model, p, level=1)
    T = okumura_torsion(sd, flip)
    v = np.asarray(v, dtype=float)
    tv = np.einsum("...kuv,...u,...v->...k", T, v, v)
    return np.sqrt(np.abs(rc.inner(sd.g, tv, tv)))


def ball_exactness_residual(model: ModelSpace, points) -> float:
    """max |d omega - Omega| on the ball factor, Omega(X, Y) = G(X, J Y)."""
    if model.kind != "ball_times_line":
        raise PreconditionError("exactness check applies to ball_times_line only")
    n, k = model.n, model.k
    p = model.chart.check(points)
    x = jets.seed_vector(p, order=1)
    G, omega = _ball_pieces(x, n, k)
    Gv, domega = G.value, omega.first
    domega = domega[..., : 2 * n]
    d_om = 0.5 * (np.swapaxes(domega, -1, -2) - domega)
    Omega = Gv @ ball_complex_structure(n)
    return float(np.max(np.abs(d_om - Omega)))


def sample_region(model: ModelSpace) -> MetricChart:
    """The chart restricted to the box (and ball) used for random sampling."""
    m, n = model.dim, model.n
    if model.kind in ("standard_sphere", "deformed_sphere"):
        w, r = SAMPLE_HALF_WIDTH["sphere"], SAMPLE_RADIUS["sphere"]
        lower, upper = -w * np.ones(m), w * np.ones(m)
        inside = lambda p: np.sum(np.asarray(p) ** 2, axis=-1) < r * r  # noqa: E731
    elif model.kind == "heisenberg":
        w = SAMPLE_HALF_WIDTH["heisenberg"]
        lower, upper, inside = -w * np.ones(m), w * np.ones(m), None
    else:
        w, r = SAMPLE_HALF_WIDTH["ball"], SAMPLE_RADIUS["ball"]
        lower = np.r_[-w * np.ones(2 * n), -3.0]
        upper = np.r_[w * np.ones(2 * n), 3.0]
        inside = lambda p: np.sum(np.asarray(p)[..., : 2 * n] ** 2, axis=-1) < r * r  # noqa: E731
    return MetricChart(m, model.chart.metric_fn, lower, upper, inside, model.chart.name)


def sample(model: ModelSpace, count: int, seed: int = 0, shrink: float = 0.8) -> np.ndarray:
    """Seeded uniform points in the centred ``shrink`` sub-box of the sampling region."""
    return rc.sample_points(sample_region(model), count, np.random.default_rng(seed), shrink)
