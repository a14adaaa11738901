"""Coordinate Riemannian geometry driven by jets of the metric.

Conventions used throughout the package:

* ``dg[..., a, b, c] = d_c g_ab`` (derivative index last), likewise for higher
  derivatives.
* ``gamma[..., k, i, j] = Gamma^k_ij``.
* ``riem[..., l, i, j, k]`` is the ``l`` component of ``R(d_i, d_j) d_k`` with
  ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``, so the
  unit sphere has sectional curvature +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet

MetricFn = Callable[[object], object]

DEGENERACY_TOL = 1e-12


class SingularMetricError(np.linalg.LinAlgError):
    pass


class DegeneratePlaneError(ValueError):
    pass


class ChartDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MetricChart:
    """A metric given as a jet-differentiable function of chart coordinates.

    ``metric_fn`` maps a coordinate array ``(..., dim)`` (a plain array or a
    vector-valued jet) to the metric ``(..., dim, dim)`` built from
    broadcasting operations, so the same code serves values and jets.  ``lower``/``upper`` bound the box
    used for sampling; ``inside`` optionally refines the true chart domain.
    """

    dim: int
    metric_fn: MetricFn
    lower: np.ndarray
    upper: np.ndarray
    inside: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "chart"

    def contains(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        ok = np.all((p >= self.lower) & (p <= self.upper), axis=-1)
        if self.inside is not None:
            ok = ok & self.inside(p)
        return ok

    def check(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected {self.dim} coordinates, got {p.shape[-1]}")
        if not np.all(self.contains(p)):
            bad = p.reshape(-1, self.dim)[~np.asarray(self.contains(p)).reshape(-1)][0]
            raise ChartDomainError(f"{self.name}: point {bad.tolist()} outside chart domain")
        return p

    def metric(self, p) -> np.ndarray:
        """Metric matrices at ``p`` (no derivatives)."""
        p = np.asarray(p, dtype=float)
        g = np.asarray(self.metric_fn(p), dtype=float)
        return np.broadcast_to(g, p.shape[:-1] + (self.dim, self.dim))

    def scaled(self, lam: float) -> "MetricChart":
        fn = self.metric_fn
        return MetricChart(
            self.dim,
            lambda x: (lam * lam) * fn(x),
            self.lower,
            self.upper,
            self.inside,
            f"{self.name}*{lam}^2",
        )


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


def _components(v) -> np.ndarray:
    return v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=float)


def metric_jets(chart: MetricChart, points, order: int = 2):
    """``(g, dg, d2g, d3g)`` at ``points``; entries beyond ``order`` are None."""
    p = np.asarray(points, dtype=float)
    x = jets.seed_vector(p, order=max(order, 1))
    g = chart.metric_fn(x)
    shape = p.shape[:-1] + (chart.dim, chart.dim)
    if isinstance(g, Jet):
        g = g.broadcast_to(shape)
        return g.value, g.first, g.second, g.third
    value, first, second, third = jets.arrays(np.broadcast_to(g, shape), chart.dim, order)
    return value, first, second, third


@dataclass
class PointGeometry:
    """Connection and curvature data at a batch of points."""

    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray | None = None
    d2gamma: np.ndarray | None = None
    riem: np.ndarray | None = None
    nabla_riem: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def _inverse(g: np.ndarray) -> np.ndarray:
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is singular at an evaluation point") from exc
    # reciprocal condition estimate, cheaper than an eigen-decomposition
    rcond = 1.0 / (np.max(np.abs(g), axis=(-2, -1)) * np.max(np.abs(ginv), axis=(-2, -1)))
    if not np.all(np.isfinite(ginv)) or np.any(rcond < DEGENERACY_TOL):
        raise SingularMetricError("metric is singular at an evaluation point")
    return ginv


def _lowered_gamma(dg: np.ndarray) -> np.ndarray:
    # low[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    return (
        np.einsum("...jli->...lij", dg)
        + np.einsum("...ilj->...lij", dg)
        - np.einsum("...ijl->...lij", dg)
    )


def connection_data(chart: MetricChart, points, level: int = 1) -> PointGeometry:
    """Evaluate geometry at ``points``.

    ``level`` 1: Christoffel symbols; 2: plus curvature; 3: plus nabla R.
    """
    order = {1: 1, 2: 2, 3: 3}[level]
    g, dg, d2g, d3g = metric_jets(chart, points, order=order)
    ginv = _inverse(g)
    low = _lowered_gamma(dg)
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", ginv, low)
    geo = PointGeometry(g=g, ginv=ginv, dg=dg, gamma=gamma)
    if level < 2:
        return geo
    # d_m g^{-1} = -g^{-1} (d_m g) g^{-1}
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, dg, ginv)
    dlow = (
        np.einsum("...jlim->...lijm", d2g)
        + np.einsum("...iljm->...lijm", d2g)
        - np.einsum("...ijlm->...lijm", d2g)
    )
    dgamma = 0.5 * (
        np.einsum("...klm,...lij->...kijm", dginv, low) + np.einsum("...kl,...lijm->...kijm", ginv, dlow)
    )
    geo.dgamma = dgamma
    geo.riem = _riemann(gamma, dgamma)
    if level < 3:
        return geo
    # second derivatives of the inverse metric
    a = np.einsum("...ka,...abm,...bc,...cdn,...dl->...klmn", ginv, dg, ginv, dg, ginv)
    d2ginv = a + np.swapaxes(a, -1, -2) - np.einsum("...ka,...abmn,...bl->...klmn", ginv, d2g, ginv)
    d2low = (
        np.einsum("...jlimn->...lijmn", d3g)
        + np.einsum("...iljmn->...lijmn", d3g)
        - np.einsum("...ijlmn->...lijmn", d3g)
    )
    t = np.einsum("...klm,...lijn->...kijmn", dginv, dlow)
    d2gamma = 0.5 * (
        np.einsum("...klmn,...lij->...kijmn", d2ginv, low)
        + t
        + np.swapaxes(t, -1, -2)
        + np.einsum("...kl,...lijmn->...kijmn", ginv, d2low)
    )
    geo.d2gamma = d2gamma
    geo.nabla_riem = _nabla_riemann(gamma, dgamma, d2gamma, geo.riem)
    return geo


def _riemann(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    # R^l_{k i j} ordering here: riem[l, i, j, k]
    r = np.einsum("...ljki->...lijk", dgamma) - np.einsum("...likj->...lijk", dgamma)
    r = r + np.einsum("...lip,...pjk->...lijk", gamma, gamma) - np.einsum("...ljp,...pik->...lijk", gamma, gamma)
    return r


def _nabla_riemann(gamma, dgamma, d2gamma, riem) -> np.ndarray:
    # partial derivative of riem, derivative index last
    d_riem = (
        np.einsum("...ljkim->...lijkm", d2gamma)
        - np.einsum("...likjm->...lijkm", d2gamma)
        + np.einsum("...lipm,...pjk->...lijkm", dgamma, gamma)
        + np.einsum("...lip,...pjkm->...lijkm", gamma, dgamma)
        - np.einsum("...ljpm,...pik->...lijkm", dgamma, gamma)
        - np.einsum("...ljp,...pikm->...lijkm", gamma, dgamma)
    )
    nab = (
        d_riem
        + np.einsum("...lmp,...pijk->...lijkm", gamma, riem)
        - np.einsum("...pmi,...lpjk->...lijkm", gamma, riem)
        - np.einsum("...pmj,...lipk->...lijkm", gamma, riem)
        - np.einsum("...pmk,...lijp->...lijkm", gamma, riem)
    )
    # store with the differentiation direction first: nabla[m, l, i, j, k]
    return np.moveaxis(nab, -1, -5)


# -- public pointwise operations ---------------------------------------------

def christoffel(chart: MetricChart, p) -> np.ndarray:
    """Gamma^k_ij at ``p`` (batch allowed), shape ``(..., m, m, m)``."""
    return connection_data(chart, chart.check(p), level=1).gamma


def riemann(chart: MetricChart, p) -> np.ndarray:
    """Curvature components ``riem[l, i, j, k]`` of ``R(d_i, d_j) d_k``."""
    return connection_data(chart, chart.check(p), level=2).riem


def nabla_riemann(chart: MetricChart, p, U=None) -> np.ndarray:
    """``(nabla_U R)`` components; with ``U`` None returns all coordinate directions."""
    nab = connection_data(chart, chart.check(p), level=3).nabla_riem
    if U is None:
        return nab
    return np.einsum("...m,...mlijk->...lijk", _components(U), nab)


def apply_riemann(riem: np.ndarray, X, Y, Z) -> np.ndarray:
    return np.einsum("...lijk,...i,...j,...k->...l", riem, X, Y, Z)


def inner(g: np.ndarray, X, Y) -> np.ndarray:
    return np.einsum("...ab,...a,...b->...", g, X, Y)


def sectional_curvature(chart: MetricChart, p, X, Y, geo: PointGeometry | None = None) -> np.ndarray:
    X, Y = _components(X), _components(Y)
    if geo is None:
        geo = connection_data(chart, chart.check(p), level=2)
    num = inner(geo.g, apply_riemann(geo.riem, X, Y, Y), X)
    den = inner(geo.g, X, X) * inner(geo.g, Y, Y) - inner(geo.g, X, Y) ** 2
    if np.any(np.abs(den) < DEGENERACY_TOL):
        raise DegeneratePlaneError("vectors span a degenerate plane")
    return num / den


def covariant_derivative(chart: MetricChart, p, X, Y_field: Callable) -> np.ndarray:
    """``(nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j`` for a jet-evaluable field.

    ``Y_field`` maps coordinates ``(..., dim)`` to components ``(..., dim)``.
    """
    p = chart.check(p)
    X = _components(X)
    x = jets.seed_vector(p, order=1)
    Y = Y_field(x)
    yv, dy, _, _ = jets.arrays(np.broadcast_to(Y, p.shape) if not isinstance(Y, Jet) else Y.broadcast_to(p.shape), chart.dim, 1)
    gamma = connection_data(chart, p, level=1).gamma
    return np.einsum("...i,...ki->...k", X, dy) + np.einsum("...kij,...i,...j->...k", gamma, X, yv)


def lowered_riemann(geo: PointGeometry) -> np.ndarray:
    """``R_{lijk} = <R(d_i, d_j) d_k, d_l>``."""
    return np.einsum("...la,...aijk->...lijk", geo.g, geo.riem)


def curvature_symmetry_residuals(geo: PointGeometry) -> dict:
    """Antisymmetries and first Bianchi identity of the lowered curvature tensor."""
    R = lowered_riemann(geo)
    scale = max(1.0, float(np.max(np.abs(R))))
    anti_ij = np.max(np.abs(R + np.swapaxes(R, -3, -2)))
    anti_lk = np.max(np.abs(R + np.swapaxes(R, -4, -1)))
    pair = np.max(np.abs(R - np.einsum("...lijk->...kjil", R)))
    bianchi = np.max(
        np.abs(
            geo.riem
            + np.einsum("...ljki->...lijk", geo.riem)
            + np.einsum("...lkij->...lijk", geo.riem)
        )
    )
    return {
        "antisym_ij": anti_ij / scale,
        "antisym_lk": anti_lk / scale,
        "pair_symmetry": pair / scale,
        "bianchi1": bianchi / scale,
    }


def second_bianchi_residual(geo: PointGeometry) -> float:
    """max |(nabla_m R)(d_i, d_j) + cyclic(m, i, j)|."""
    n = geo.nabla_riem  # [m, l, i, j, k]
    cyc = (
        n
        + np.einsum("...iljmk->...mlijk", n)
        + np.einsum("...jlmik->...mlijk", n)
    )
    return float(np.max(np.abs(cyc)))


def metric_compatibility_residual(chart: MetricChart, points) -> float:
    """max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|."""
    geo = connection_data(chart, points, level=1)
    res = (
        geo.dg
        - np.einsum("...lki,...lj->...ijk", geo.gamma, geo.g)
        - np.einsum("...lkj,...il->...ijk", geo.gamma, geo.g)
    )
    return float(np.max(np.abs(res)))


def sample_points(chart: MetricChart, n: int, rng: np.random.Generator, shrink: float = 0.8) -> np.ndarray:
    """Uniform samples in the centred sub-box ``shrink`` times the chart box."""
    mid = 0.5 * (chart.lower + chart.upper)
    half = 0.5 * shrink * (chart.upper - chart.lower)
    out = np.empty((0, chart.dim))
    while len(out) < n:
        cand = mid + half * rng.uniform(-1.0, 1.0, size=(2 * n, chart.dim))
        out = np.concatenate([out, cand[chart.contains(cand)]])
    return out[:n]


# -- reference charts -----------------------------------------------------------

def euclidean_chart(dim: int, half_width: float = 10.0) -> MetricChart:
    eye = np.eye(dim)

    def metric(x):
        batch = np.shape(jets.value_of(x))[:-1]
        return np.broadcast_to(eye, batch + (dim, dim))

    return MetricChart(dim, metric, -half_width * np.ones(dim), half_width * np.ones(dim), name=f"euclidean{dim}")


def sphere_polar_chart() -> MetricChart:
    """Round unit 2-sphere in (theta, phi) with metric diag(1, sin^2 theta)."""

    def metric(x):
        st = jets.sin(x[..., 0])
        one = jets.value_of(x)[..., 0] * 0.0 + 1.0
        return jets.stack([jets.stack([one, 0.0 * st]), jets.stack([0.0 * st, st * st])])

    return MetricChart(
        2, metric, np.array([0.05, -np.pi]), np.array([np.pi - 0.05, np.pi]), name="sphere_polar"
    )


def sphere_stereographic_chart(dim: int, radius: float = 1.0, half_width: float = 20.0) -> MetricChart:
    """Round sphere of the given radius through stereographic projection from a pole.

    The chart covers the sphere minus one point, so great circles avoiding the
    pole stay inside it.
    """
    eye = np.eye(dim)

    def metric(x):
        w = 2.0 * radius / (1.0 + jets.vsum(x * x))
        return (w * w)[..., None, None] * eye

    return MetricChart(dim, metric, -half_width * np.ones(dim), half_width * np.ones(dim), name=f"stereo_sphere{dim}")
