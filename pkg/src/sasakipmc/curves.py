"""Frenet curves: synthesis from prescribed curvatures and extraction from samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from . import fd
from . import riemann as rc
from .models import ModelSpace, PreconditionError, structure_values
from .riemann import ChartDomainError, MetricChart

MIN_STEPS_PER_UNIT = 1000
RANK_TOL = 1e-6
SPEED_TOL = 1e-4


@dataclass
class CurveSample:
    """An arclength-sampled curve with its Frenet apparatus.

    ``frame`` has shape ``(N, r, m)``, ``curvatures`` ``(N, r - 1)``.
    """

    s: np.ndarray
    positions: np.ndarray
    frame: np.ndarray | None
    curvatures: np.ndarray
    osculating_order: int
    chart: MetricChart | None = None
    flags: list = field(default_factory=list)

    @property
    def tangent(self) -> np.ndarray:
        return self.frame[:, 0]

    def mean_curvatures(self) -> np.ndarray:
        return self.curvatures.mean(axis=0) if self.curvatures.size else np.zeros(0)

    def curvature_spread(self) -> np.ndarray:
        if not self.curvatures.size:
            return np.zeros(0)
        return self.curvatures.max(axis=0) - self.curvatures.min(axis=0)

    def orthonormality_residual(self) -> float:
        if self.frame is None or self.chart is None:
            return float("nan")
        g = self.chart.metric(self.positions)
        gram = np.einsum("nab,nia,njb->nij", g, self.frame, self.frame)
        return float(np.max(np.abs(gram - np.eye(self.frame.shape[1]))))

    def speed_residual(self) -> float:
        g = self.chart.metric(self.positions)
        speed = np.sqrt(np.einsum("nab,na,nb->n", g, self.tangent, self.tangent))
        return float(np.max(np.abs(speed - 1.0)))


def _chart_of(space) -> MetricChart:
    return space.chart if isinstance(space, ModelSpace) else space


def gram_schmidt(g: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt of ``vectors[..., r, m]`` in the metric ``g[..., m, m]``."""
    out = np.array(vectors, dtype=float, copy=True)
    r = out.shape[-2]
    for i in range(r):
        for j in range(i):
            c = np.einsum("...ab,...a,...b->...", g, out[..., i, :], out[..., j, :])
            out[..., i, :] -= c[..., None] * out[..., j, :]
        nrm = np.sqrt(np.einsum("...ab,...a,...b->...", g, out[..., i, :], out[..., i, :]))
        out[..., i, :] /= nrm[..., None]
    return out


def frame_residual(g: np.ndarray, frame: np.ndarray) -> float:
    gram = np.einsum("...ab,...ia,...jb->...ij", g, frame, frame)
    return float(np.max(np.abs(gram - np.eye(frame.shape[-2]))))


def _kappa_matrix(kappas: np.ndarray, r: int) -> np.ndarray:
    """Frenet matrix K with dE_i = sum_j K_ij E_j (batch leading)."""
    K = np.zeros(kappas.shape[:-1] + (r, r))
    for i in range(r - 1):
        K[..., i, i + 1] = kappas[..., i]
        K[..., i + 1, i] = -kappas[..., i]
    return K


def synthesize_curve(
    space,
    start,
    start_frame,
    curvatures: Sequence,
    length: float,
    steps: int | None = None,
    sample_every: int = 1,
):
    """Integrate the Frenet system with prescribed curvatures.

    ``curvatures`` holds positive constants or callables of arclength; an
    empty list gives a geodesic.  ``start``/``start_frame`` may carry a batch
    axis, in which case every curve is integrated at once and a list of
    :class:`CurveSample` is returned.  Classical RK4 is used with the frame
    re-orthonormalized (modified Gram-Schmidt) after every step.
    """
    x0 = np.asarray(start, dtype=float)
    batch = x0.shape[0] if x0.ndim == 2 else 1
    funcs = [k if callable(k) else (lambda s, k=float(k): k) for k in curvatures]

    def kap(s: float) -> np.ndarray:
        vals = [np.broadcast_to(np.asarray(f(s), dtype=float), (batch,)) for f in funcs]
        return np.stack(vals, axis=-1) if vals else np.zeros((batch, 0))

    if np.any(kap(0.0) <= 0):
        raise PreconditionError("curvatures must be positive")
    return integrate_frenet(space, start, start_frame, kap, len(curvatures) + 1, length, steps, sample_every)


def synthesize_batch(space, starts, frames, curvatures, length: float, steps: int | None = None, sample_every: int = 1):
    """Integrate many curves with constant curvatures ``curvatures[b]``.

    Rows may contain zeros, which decouple the remaining frame vectors (they
    are parallel transported), so tuples of different lengths can share one
    padded system.  Returns a list of :class:`CurveSample` with the frame and
    curvature arrays cut to each curve's own order.
    """
    K = np.asarray(curvatures, dtype=float)
    r = K.shape[1] + 1
    out = integrate_frenet(space, starts, frames, lambda s: K, r, length, steps, sample_every)
    for cs, row in zip(out, K):
        order = 1 + int(np.sum(np.cumprod(row > 0)))
        cs.frame = cs.frame[:, :order]
        cs.curvatures = cs.curvatures[:, : order - 1]
        cs.osculating_order = order
    return out


def integrate_frenet(space, start, start_frame, kap: Callable, r: int, length: float, steps: int | None = None, sample_every: int = 1):
    """RK4 core: ``kap(s)`` returns the curvature array ``(batch, r - 1)``."""
    chart = _chart_of(space)
    x0 = np.asarray(start, dtype=float)
    E0 = np.asarray(start_frame, dtype=float)
    batched = x0.ndim == 2
    if not batched:
        x0, E0 = x0[None], E0[None]
    if E0.shape[-2] < r:
        raise PreconditionError(f"need {r} frame vectors, got {E0.shape[-2]}")
    E0 = E0[:, :r]
    chart.check(x0)
    if frame_residual(chart.metric(x0), E0) > 1e-8:
        raise PreconditionError("start frame is not orthonormal in the model metric")
    if steps is None:
        steps = int(math.ceil(MIN_STEPS_PER_UNIT * length - 1e-9))
    if steps < MIN_STEPS_PER_UNIT * length - 1e-9:
        raise PreconditionError(f"{steps} steps over length {length} is below {MIN_STEPS_PER_UNIT} per unit")

    def exit_error(s, x):
        bad = x[~chart.contains(x)][0]
        return ChartDomainError(f"{chart.name}: curve left the chart near s={s:.6g} at {bad.tolist()}")

    def rhs(s, x, E):
        if not np.all(chart.contains(x)):
            raise exit_error(s, x)
        gam = rc.connection_data(chart, x, level=1).gamma
        corr = np.einsum("bkij,bi,brj->brk", gam, E[:, 0], E)
        dE = np.einsum("bij,bjk->bik", _kappa_matrix(kap(s), r), E) - corr
        return E[:, 0], dE

    h = length / steps
    xs, Es, ss = [x0.copy()], [E0.copy()], [0.0]
    x, E = x0.copy(), E0.copy()
    for i in range(steps):
        s = i * h
        k1x, k1E = rhs(s, x, E)
        k2x, k2E = rhs(s + h / 2, x + h / 2 * k1x, E + h / 2 * k1E)
        k3x, k3E = rhs(s + h / 2, x + h / 2 * k2x, E + h / 2 * k2E)
        k4x, k4E = rhs(s + h, x + h * k3x, E + h * k3E)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        E = E + h / 6 * (k1E + 2 * k2E + 2 * k3E + k4E)
        if not np.all(chart.contains(x)):
            raise exit_error(s + h, x)
        E = gram_schmidt(chart.metric(x), E)
        if (i + 1) % sample_every == 0:
            xs.append(x.copy())
            Es.append(E.copy())
            ss.append((i + 1) * h)
    s_arr = np.array(ss)
    P = np.stack(xs, axis=1)
    F = np.stack(Es, axis=1)
    K = np.stack([np.broadcast_to(kap(si), (P.shape[0], r - 1)) for si in s_arr], axis=1)
    out = [CurveSample(s_arr, P[b], F[b], K[b], r, chart) for b in range(P.shape[0])]
    return out if batched else out[0]


def extraction_stride(curvatures, step: float, target: float = 0.07) -> int:
    """Sample stride giving spacing ~ target / sqrt(sum kappa^2) for extraction."""
    w = math.sqrt(sum(float(k) ** 2 for k in curvatures)) if len(curvatures) else 1.0
    return max(1, int(round(target / max(w, 1e-3) / step)))


def _reparametrize(chart: MetricChart, positions: np.ndarray, s: np.ndarray):
    h = s[1] - s[0]
    d = fd.derivative(positions, h, axis=0, accuracy=8)
    g = chart.metric(positions)
    speed = np.sqrt(np.einsum("nab,na,nb->n", g, d, d))
    if np.max(np.abs(speed - 1.0)) <= SPEED_TOL:
        return positions, s, False
    arc = np.concatenate([[0.0], cumulative_simpson(speed, dx=h)])
    spline = CubicSpline(arc, positions, axis=0)
    s_new = np.linspace(0.0, arc[-1], len(arc))
    return spline(s_new), s_new, True


def frenet_apparatus(
    positions,
    space,
    s=None,
    max_order: int | None = None,
    rank_tol: float = RANK_TOL,
    accuracy: int = 12,
) -> CurveSample:
    """Frenet frame and curvatures from uniformly sampled positions.

    Covariant derivatives W_k = nabla_T^k T are built by repeated central
    differences; their successive orthogonal parts give E_{k+1} and the
    norm ratios give kappa_k.  Every differentiation level trims
    ``accuracy / 2`` samples at both ends.
    """
    chart = _chart_of(space)
    P = np.asarray(positions, dtype=float)
    if s is None:
        s = np.arange(len(P), dtype=float)
    s = np.asarray(s, dtype=float)
    flags = []
    P, s, moved = _reparametrize(chart, P, s)
    if moved:
        flags.append("reparametrized")
    h = s[1] - s[0]
    half = accuracy // 2
    m = chart.dim
    if max_order is None:
        max_order = m
    max_order = min(max_order, m)

    W = [fd.central_only(P, h, 0, accuracy)]
    trim = half
    X = P[trim:-trim]
    gam = rc.connection_data(chart, X, level=1).gamma
    g = chart.metric(X)
    T = W[0]

    def proj_basis(vecs, k):
        # orthogonal part of W_k against E_1..E_k
        w = W[k].copy()
        for e in vecs:
            c = np.einsum("nab,na,nb->n", g, w, e)
            w = w - c[:, None] * e
        for e in vecs:  # second pass for stability
            c = np.einsum("nab,na,nb->n", g, w, e)
            w = w - c[:, None] * e
        return w

    def cut(a, k):
        return a[k : len(a) - k] if k else a

    norms = [np.sqrt(np.einsum("nab,na,nb->n", g, T, T))]
    E = [T / norms[0][:, None]]
    kappas = []
    order = 1
    while order < max_order:
        # next covariant derivative, then shrink all arrays to its support
        dW = fd.central_only(W[-1], h, 0, accuracy)
        W = [cut(w, half) for w in W]
        E = [cut(e, half) for e in E]
        norms = [cut(nv, half) for nv in norms]
        kappas = [cut(kv, half) for kv in kappas]
        X, g, gam, T = cut(X, half), cut(g, half), cut(gam, half), cut(T, half)
        trim += half
        W.append(dW + np.einsum("nkij,ni,nj->nk", gam, T, W[-1]))
        w = proj_basis(E, len(W) - 1)
        nrm = np.sqrt(np.einsum("nab,na,nb->n", g, w, w))
        ratio = nrm / norms[-1]
        kap_ref = kappas[0] if kappas else None
        tol = rank_tol if kap_ref is None else rank_tol * np.median(kap_ref)
        if np.median(ratio) < tol:
            break
        if np.min(ratio) < tol:
            flags.append(f"order truncated at {order}: kappa_{order} not positive everywhere")
            break
        kappas.append(ratio)
        norms.append(nrm)
        E.append(w / nrm[:, None])
        order += 1
    frame = np.stack(E, axis=1)
    curv = np.stack(kappas, axis=1) if kappas else np.zeros((len(X), 0))
    return CurveSample(s[trim : len(s) - trim], X, frame, curv, order, chart, flags)


def legendre_residual(curve: CurveSample, model: ModelSpace) -> float:
    """max |eta(gamma')| over the samples."""
    _, _, _, eta = structure_values(model, curve.positions)
    return float(np.max(np.abs(np.einsum("na,na->n", eta, curve.tangent))))


def horizontal_frame(model: ModelSpace, p, count: int, phi_orthogonal: bool = True, seed_vectors=None) -> np.ndarray:
    """``count`` orthonormal vectors orthogonal to xi at ``p``.

    With ``phi_orthogonal`` every new vector is also orthogonal to phi of the
    earlier ones (a Legendre-type frame: <E_i, phi E_j> = 0).
    """
    p = np.asarray(p, dtype=float)
    g, phi, xi, _ = structure_values(model, p)
    m = model.dim
    basis = [xi / np.sqrt(xi @ g @ xi)]
    out = []
    cands = list(np.eye(m)) if seed_vectors is None else [np.asarray(v, float) for v in seed_vectors] + list(np.eye(m))
    for cand in cands:
        if len(out) == count:
            break
        w = cand.copy()
        for _ in range(2):
            for b in basis:
                w = w - (w @ g @ b) * b
        nrm = math.sqrt(max(w @ g @ w, 0.0))
        if nrm < 1e-6:
            continue
        w = w / nrm
        out.append(w)
        basis.append(w)
        if phi_orthogonal:
            pw = phi @ w
            for _ in range(2):
                for b in basis:
                    pw = pw - (pw @ g @ b) * b
            pn = math.sqrt(max(pw @ g @ pw, 0.0))
            if pn > 1e-10:
                basis.append(pw / pn)
    if len(out) < count:
        raise PreconditionError(f"could not build {count} horizontal frame vectors in dimension {m}")
    return np.array(out)


def legendre_circle_frame(model: ModelSpace, p) -> np.ndarray:
    """Start frame (E1, E2) for a Legendre circle: both horizontal, E2 orthogonal to phi E1."""
    return horizontal_frame(model, p, 2, phi_orthogonal=True)


def complete_frame(chart: MetricChart, p, first, count: int) -> np.ndarray:
    """Orthonormal frame of ``count`` vectors starting with the given ones."""
    p = np.asarray(p, dtype=float)
    g = chart.metric(p)
    vecs = list(np.atleast_2d(np.asarray(first, dtype=float)))
    out = []
    for v in vecs + list(np.eye(chart.dim)):
        if len(out) == count:
            break
        w = v.copy()
        for _ in range(2):
            for b in out:
                w = w - (w @ g @ b) * b
        nrm = math.sqrt(max(w @ g @ w, 0.0))
        if nrm < 1e-6:
            continue
        out.append(w / nrm)
    return np.array(out)


@dataclass
class TorsionTable:
    tau: dict
    spread: dict
    flags: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.tau[key]


def torsions_of(curve: CurveSample, J_fn: Callable) -> TorsionTable:
    """tau_ij = <E_i, J E_j> averaged along the curve (base-space frames)."""
    g = curve.chart.metric(curve.positions)
    J = J_fn(curve.positions)
    r = curve.osculating_order
    tau, spread = {}, {}
    for i in range(r):
        for j in range(i + 1, r):
            JEj = np.einsum("nab,nb->na", J, curve.frame[:, j])
            vals = np.einsum("nab,na,nb->n", g, curve.frame[:, i], JEj)
            tau[(i + 1, j + 1)] = float(np.mean(vals))
            spread[(i + 1, j + 1)] = float(np.max(vals) - np.min(vals))
    return TorsionTable(tau, spread, list(curve.flags))


def complex_torsions(curve: CurveSample, model: ModelSpace, **kwargs) -> TorsionTable:
    """Complex torsions of the projection of ``curve`` to the orbit space."""
    from .fibration import make_fibration

    fib = make_fibration(model)
    base_pos = fib.project(curve.positions)
    base = frenet_apparatus(base_pos, fib.base_chart, s=curve.s, **kwargs)
    return torsions_of(base, fib.J)
