"""The fibration of a model space over its orbit space of xi-curves.

* sphere kinds: the Hopf map to CP^n, affine chart w_j = z_j / z_n with
  interleaved real coordinates (Re w_0, Im w_0, ...), Fubini-Study metric
  scaled to holomorphic curvature c + 3;
* heisenberg: (x, y, z) -> (x, y) onto flat C^n with metric |dx|^2 / 4;
* ball_times_line: the product projection dropping t onto (B^{2n}, G).

Fibers are followed exactly: xi generates z -> exp(-i t / a) z on spheres and
translations in the last coordinate on the other two families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import curves as cv
from . import jets
from . import riemann as rc
from .models import ModelSpace, PreconditionError, _ball_pieces, ball_complex_structure, structure_values
from .riemann import MetricChart

CP_HALF_WIDTH = 4.0


@dataclass(frozen=True)
class FibrationData:
    model: ModelSpace
    base_dim: int
    project_fn: Callable
    base_chart: MetricChart
    J_matrix: np.ndarray
    section_fn: Callable
    flow_fn: Callable
    flow_push_fn: Callable
    label: str

    def project(self, p) -> np.ndarray:
        return np.asarray(self.project_fn(np.asarray(p, dtype=float)))

    def dproject(self, p) -> np.ndarray:
        """Jacobian of the projection, shape ``(..., 2n, 2n + 1)``."""
        x = jets.seed_vector(np.asarray(p, dtype=float), order=1)
        return self.project_fn(x).first

    def J(self, q) -> np.ndarray:
        batch = np.shape(q)[:-1]
        return np.broadcast_to(self.J_matrix, batch + self.J_matrix.shape)

    def section(self, q) -> np.ndarray:
        return self.section_fn(np.asarray(q, dtype=float))

    def flow(self, p, t) -> np.ndarray:
        return self.flow_fn(np.asarray(p, dtype=float), t)

    def flow_push(self, p, v, t) -> np.ndarray:
        return self.flow_push_fn(np.asarray(p, dtype=float), np.asarray(v, dtype=float), t)


def _interleave_matrices(n: int):
    """S_re, S_im placing n-vectors into even / odd slots of a 2n-vector."""
    S_re = np.zeros((2 * n, n))
    S_im = np.zeros((2 * n, n))
    for j in range(n):
        S_re[2 * j, j] = 1.0
        S_im[2 * j + 1, j] = 1.0
    return S_re, S_im


def interleaved_J(n: int) -> np.ndarray:
    """Multiplication by i in interleaved coordinates: J e_{2j} = e_{2j+1}."""
    J = np.zeros((2 * n, 2 * n))
    for j in range(n):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    return J


def fubini_study_chart(n: int, holomorphic_curvature: float) -> MetricChart:
    """CP^n in the affine chart, metric of constant holomorphic curvature H > 0."""
    if not holomorphic_curvature > 0:
        raise PreconditionError("Fubini-Study metric needs positive holomorphic curvature")
    J = interleaved_J(n)
    scale = 4.0 / holomorphic_curvature
    eye = np.eye(2 * n)

    def metric(w):
        q = 1.0 + jets.vsum(w * w)
        beta = jets.matvec(J, w)
        inv = 1.0 / q
        inv2 = (inv * inv)[..., None, None]
        return scale * (inv[..., None, None] * eye - inv2 * (jets.outer(w, w) + jets.outer(beta, beta)))

    w = CP_HALF_WIDTH
    return MetricChart(2 * n, metric, -w * np.ones(2 * n), w * np.ones(2 * n), name=f"CP{n}(H={holomorphic_curvature:g})")


def _sphere_fibration(model: ModelSpace) -> FibrationData:
    n, m = model.n, model.dim
    a = model.deform_a if model.deform_a is not None else 1.0
    S_re, S_im = _interleave_matrices(n)
    Pe = np.zeros((n, m))
    Po = np.zeros((n, m))
    for j in range(n):
        Pe[j, 2 * j] = 1.0
        Po[j, 2 * j + 1] = 1.0

    def project(x):
        s = jets.sqrt(1.0 - jets.vsum(x * x))
        A = x[..., m - 1]
        D = A * A + s * s
        xe, xo = jets.matvec(Pe, x), jets.matvec(Po, x)
        A1, s1, D1 = A[..., None], s[..., None], D[..., None]
        # w_j = z_j conj(z_n) / |z_n|^2
        re = (xe * A1 + xo * s1) / D1
        im = (xo * A1 - xe * s1) / D1
        return jets.matvec(S_re, re) + jets.matvec(S_im, im)

    def section(w):
        # i (w, 1) / |(w, 1)|
        N = np.sqrt(1.0 + np.sum(w * w, axis=-1))[..., None]
        u, v = w[..., 0::2], w[..., 1::2]
        out = np.zeros(w.shape[:-1] + (m,))
        out[..., 0 : 2 * n : 2] = -v / N
        out[..., 1 : 2 * n : 2] = u / N
        return out

    def ambient(p):
        s = np.sqrt(1.0 - np.sum(p * p, axis=-1))
        return np.concatenate([p, s[..., None]], axis=-1)

    def rotate(X, theta):
        # z -> exp(-i theta) z on consecutive coordinate pairs
        c, sn = np.cos(theta), np.sin(theta)
        re, im = X[..., 0::2], X[..., 1::2]
        out = np.empty_like(X)
        out[..., 0::2] = c * re + sn * im
        out[..., 1::2] = c * im - sn * re
        return out

    def flow(p, t):
        Y = rotate(ambient(p), np.asarray(t, dtype=float)[..., None] / a)
        if np.any(Y[..., -1] <= 0):
            raise rc.ChartDomainError("fiber flow left the hemisphere chart")
        return Y[..., :m]

    def flow_push(p, v, t):
        s = np.sqrt(1.0 - np.sum(p * p, axis=-1))
        sdot = -np.sum(p * v, axis=-1) / s
        V = np.concatenate([v, sdot[..., None]], axis=-1)
        return rotate(V, np.asarray(t, dtype=float)[..., None] / a)[..., :m]

    base = fubini_study_chart(n, model.c + 3.0)
    return FibrationData(model, 2 * n, project, base, interleaved_J(n), section, flow, flow_push, "hopf")


def _heisenberg_fibration(model: ModelSpace) -> FibrationData:
    n, m = model.n, model.dim
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[n + i, i] = -1.0
        J[i, n + i] = 1.0
    flat = 0.25 * np.eye(2 * n)

    def metric(q):
        batch = np.shape(jets.value_of(q))[:-1]
        return np.broadcast_to(flat, batch + flat.shape)

    w = model.chart.upper[0]
    base = MetricChart(2 * n, metric, -w * np.ones(2 * n), w * np.ones(2 * n), name=f"C{n}(flat/4)")

    def section(q):
        return np.concatenate([q, np.zeros(q.shape[:-1] + (1,))], axis=-1)

    def flow(p, t):
        out = np.array(p, dtype=float, copy=True)
        out[..., -1] = out[..., -1] + 2.0 * np.asarray(t, dtype=float)
        return out

    return FibrationData(
        model, 2 * n, lambda x: x[..., : 2 * n], base, J, section, flow, lambda p, v, t: np.array(v, dtype=float), "heisenberg"
    )


def _ball_fibration(model: ModelSpace) -> FibrationData:
    n, k = model.n, model.k
    chart = model.chart

    def metric(q):
        G, _ = _ball_pieces(q, n, k)
        return G

    base = MetricChart(
        2 * n,
        metric,
        chart.lower[: 2 * n],
        chart.upper[: 2 * n],
        inside=lambda q: np.sum(np.asarray(q) ** 2, axis=-1) < 0.95**2,
        name=f"B{2 * n}(k={k:g})",
    )

    def section(q):
        return np.concatenate([q, np.zeros(q.shape[:-1] + (1,))], axis=-1)

    def flow(p, t):
        out = np.array(p, dtype=float, copy=True)
        out[..., -1] = out[..., -1] + np.asarray(t, dtype=float)
        return out

    return FibrationData(
        model,
        2 * n,
        lambda x: x[..., : 2 * n],
        base,
        ball_complex_structure(n),
        section,
        flow,
        lambda p, v, t: np.array(v, dtype=float),
        "product",
    )


def make_fibration(model: ModelSpace) -> FibrationData:
    if model.kind in ("standard_sphere", "deformed_sphere"):
        return _sphere_fibration(model)
    if model.kind == "heisenberg":
        return _heisenberg_fibration(model)
    if model.kind == "ball_times_line":
        return _ball_fibration(model)
    raise PreconditionError(f"no fibration for model kind {model.kind!r}")


def horizontal_lift(fib: FibrationData, base_vector, p, base_point=None) -> np.ndarray:
    """The vector V with eta(V) = 0 and d pi(V) = base_vector at the total point p."""
    p = np.asarray(p, dtype=float)
    Y = np.asarray(base_vector, dtype=float)
    if base_point is not None:
        q = fib.project(p)
        if np.max(np.abs(q - np.asarray(base_point, dtype=float))) > 1e-9:
            raise PreconditionError("total point does not project to the base point of the vector")
    dpi = fib.dproject(p)
    _, _, _, eta = structure_values(fib.model, p)
    A = np.concatenate([dpi, eta[..., None, :]], axis=-2)
    rhs = np.concatenate([np.broadcast_to(Y, dpi.shape[:-1]), np.zeros(dpi.shape[:-2] + (1,))], axis=-1)
    return np.linalg.solve(A, rhs[..., None])[..., 0]


def oneill_parts(fib: FibrationData, X_field: Callable, Y_field: Callable, p, h: float = 1e-3) -> dict:
    """Both sides of O'Neill's formula at ``p``.

    ``X_field``/``Y_field`` map base coordinates ``(..., 2n)`` to components.
    The derivative of Y^H along X^H is taken with an 8th-order central stencil.
    """
    model = fib.model
    p = np.asarray(p, dtype=float)
    q = fib.project(p)
    Xq = np.broadcast_to(jets.value_of(X_field(q)), q.shape)
    XH = horizontal_lift(fib, Xq, p)

    def YH(pt):
        return horizontal_lift(fib, np.broadcast_to(jets.value_of(Y_field(fib.project(pt))), pt.shape[:-1] + (fib.base_dim,)), pt)

    offs = np.arange(-4, 5)
    from .fd import fornberg_weights

    w = fornberg_weights(tuple(int(o) for o in offs), 1)
    dY = sum(wk * YH(p + (o * h) * XH) for o, wk in zip(offs, w)) / h
    Yp = YH(p)
    gamma = rc.connection_data(model.chart, p, level=1).gamma
    lhs = dY + np.einsum("...kij,...i,...j->...k", gamma, XH, Yp)
    base_nabla = rc.covariant_derivative(fib.base_chart, q, Xq, Y_field)
    g, phi, xi, eta = structure_values(model, p)
    twist = np.einsum("...ab,...a,...b->...", g, XH, np.einsum("...ab,...b->...a", phi, Yp))
    rhs = horizontal_lift(fib, base_nabla, p) - twist[..., None] * xi
    diff = lhs - rhs
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": np.sqrt(np.abs(np.einsum("...ab,...a,...b->...", g, diff, diff))),
        "vertical_lhs": np.einsum("...a,...a->...", eta, lhs),
        "vertical_expected": -twist,
    }


def oneill_residual(fib: FibrationData, X_field: Callable, Y_field: Callable, p) -> np.ndarray:
    """|nabla_{X^H} Y^H - (nabla_X Y)^H + <X^H, phi Y^H> xi| in the total metric."""
    return oneill_parts(fib, X_field, Y_field, p)["residual"]


def submersion_residual(fib: FibrationData, p, rng: np.random.Generator) -> float:
    """| |d pi X| - |X| | for random horizontal unit X at the points."""
    from .models import random_horizontal_unit

    p = np.asarray(p, dtype=float)
    X = random_horizontal_unit(fib.model, p, rng)
    dX = np.einsum("...ij,...j->...i", fib.dproject(p), X)
    gb = fib.base_chart.metric(fib.project(p))
    return float(np.max(np.abs(np.sqrt(np.einsum("...ab,...a,...b->...", gb, dX, dX)) - 1.0)))


def verticality_residual(fib: FibrationData, p) -> float:
    """max |d pi(xi)|."""
    _, _, xi, _ = structure_values(fib.model, p)
    return float(np.max(np.abs(np.einsum("...ij,...j->...i", fib.dproject(p), xi))))


def complex_structure_residuals(fib: FibrationData, p) -> dict:
    """J^2 + 1, compatibility of J with the base metric, and d pi(phi X) - J d pi(X)."""
    p = np.asarray(p, dtype=float)
    q = fib.project(p)
    J = fib.J(q)
    gb = fib.base_chart.metric(q)
    eye = np.eye(fib.base_dim)
    dpi = fib.dproject(p)
    _, phi, xi, eta = structure_values(fib.model, p)
    # on horizontal vectors: d pi phi = J d pi
    P_h = np.eye(fib.model.dim) - xi[..., :, None] * eta[..., None, :]
    inter = dpi @ phi @ P_h - J @ dpi @ P_h
    return {
        "J_squared": float(np.max(np.abs(J @ J + eye))),
        "J_isometry": float(np.max(np.abs(np.swapaxes(J, -1, -2) @ gb @ J - gb))),
        "phi_intertwines": float(np.max(np.abs(inter))),
    }


def base_holomorphic_curvature(fib: FibrationData, q, X) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    JX = np.einsum("...ab,...b->...a", fib.J(q), X)
    return rc.sectional_curvature(fib.base_chart, q, X, JX)


def base_circle_frame(fib: FibrationData, q, tau: float, direction=None) -> np.ndarray:
    """(E1, E2) at base point q with <E1, J E2> = tau."""
    q = np.asarray(q, dtype=float)
    if abs(tau) > 1 + 1e-12:
        raise PreconditionError("complex torsion must satisfy |tau| <= 1")
    gb = fib.base_chart.metric(q)
    J = fib.J(q)
    e1 = np.eye(fib.base_dim)[0] if direction is None else np.asarray(direction, dtype=float)
    e1 = e1 / math.sqrt(e1 @ gb @ e1)
    Je1 = J @ e1
    E2 = -tau * Je1
    if abs(tau) < 1.0:
        if fib.base_dim < 4:
            raise PreconditionError("|tau| < 1 needs a base of complex dimension >= 2")
        W = cv.complete_frame(fib.base_chart, q, np.array([e1, Je1]), 3)[2]
        E2 = E2 + math.sqrt(max(1.0 - tau * tau, 0.0)) * W
    return np.array([e1, E2])


def lift_curve(fib: FibrationData, base_curve: cv.CurveSample, start=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Horizontal lift of a sampled base curve.

    RK4 with step 2 ds uses the curve's own samples as stage values, so the
    base tangent never needs interpolation.  Returns (s, points, velocities)
    at the even samples.
    """
    q = base_curve.positions
    T = base_curve.tangent
    if (len(q) - 1) % 2:
        raise PreconditionError("base curve needs an odd number of samples for the lift")
    p = fib.section(q[0]) if start is None else np.asarray(start, dtype=float)
    ds = base_curve.s[1] - base_curve.s[0]
    h = 2 * ds

    def rhs(pt, i):
        return horizontal_lift(fib, T[i], pt)

    pts, vel = [p.copy()], [rhs(p, 0)]
    for k in range(0, len(q) - 1, 2):
        k1 = vel[-1]
        k2 = rhs(p + h / 2 * k1, k + 1)
        k3 = rhs(p + h / 2 * k2, k + 1)
        k4 = rhs(p + h * k3, k + 2)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        pts.append(p.copy())
        vel.append(rhs(p, k + 2))
    return base_curve.s[::2], np.array(pts), np.array(vel)


def hopf_cylinder(fib: FibrationData, base_curve: cv.CurveSample, fiber_span=(0.0, 0.5), grid=(64, 64), start=None, fd_order: int = 6):
    """The preimage of a base curve, parametrized by (base arclength, fiber parameter).

    The s-grid uses every k-th lifted sample; the base curve must have
    ``2 k (grid[0] - 1) + 1`` samples for some integer k.
    """
    from .surfaces import SurfacePatch

    ns, nt = grid
    s, pts, vel = lift_curve(fib, base_curve, start)
    if (len(s) - 1) % (ns - 1):
        raise PreconditionError(f"{len(s)} lifted samples do not fit an s-grid of {ns}")
    stride = (len(s) - 1) // (ns - 1)
    s, pts, vel = s[::stride], pts[::stride], vel[::stride]
    t = np.linspace(fiber_span[0], fiber_span[1], nt)
    P = np.stack([fib.flow(pts, tj) for tj in t], axis=1)
    Fs = np.stack([fib.flow_push(pts, vel, tj) for tj in t], axis=1)
    _, _, xi, _ = structure_values(fib.model, P)
    return SurfacePatch.from_samples(fib.model, s, t, P, fu=Fs, fv=xi, fd_order=fd_order, label="hopf_cylinder")


def base_curve_for_cylinder(
    fib: FibrationData,
    curvature,
    tau: float,
    length: float,
    ns: int,
    q0=None,
    direction=None,
) -> cv.CurveSample:
    """A base circle (or a curve with curvature function ``curvature(s)``) sampled to fit ``hopf_cylinder``."""
    q0 = np.zeros(fib.base_dim) if q0 is None else np.asarray(q0, dtype=float)
    per_cell = 2 * int(math.ceil(cv.MIN_STEPS_PER_UNIT * length / (2 * (ns - 1))))
    steps = per_cell * (ns - 1)
    frame = base_circle_frame(fib, q0, tau, direction)
    if curvature is None or (not callable(curvature) and curvature == 0):
        return cv.synthesize_curve(fib.base_chart, q0, frame[:1], [], length, steps=steps)
    return cv.synthesize_curve(fib.base_chart, q0, frame, [curvature], length, steps=steps)
