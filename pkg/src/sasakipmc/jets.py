"""Truncated multivariate Taylor arithmetic (jets) up to order 3.

A :class:`Jet` stores the value of a function together with its raw partial
derivatives (not Taylor coefficients) with respect to ``d`` independent
variables:

* ``first[..., i]``        = df/dx_i
* ``second[..., i, j]``    = d2f/dx_i dx_j
* ``third[..., i, j, k]``  = d3f/dx_i dx_j dx_k

The leading shape ("value shape") is arbitrary and broadcasts with numpy
semantics, so a jet can stand for a scalar, a batch of scalars evaluated at
many points, or a whole tensor field such as a metric ``(..., m, m)``.
Derivative axes always come last.  Jets of lower order leave the unused
arrays as ``None``.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_ORDER = 3


class JetError(ValueError):
    """Base class for jet evaluation problems."""


class JetDomainError(JetError):
    """An elementary function was evaluated outside its domain."""

    def __init__(self, func: str, value, expression: str | None = None):
        bad = np.asarray(value, dtype=float)
        worst = float(bad.min()) if bad.size else float("nan")
        where = f" in {expression}" if expression else ""
        super().__init__(f"{func} evaluated at {worst!r}{where}")
        self.func = func
        self.value = worst
        self.expression = expression


class UnsupportedOrderError(JetError):
    pass


def _sym3(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    # s_ij f_k + s_ik f_j + s_jk f_i
    t = s[..., :, :, None] * f[..., None, None, :]
    return t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


def _tail(c, k: int):
    """Append ``k`` singleton axes to an array-like coefficient."""
    c = np.asarray(c)
    return c.reshape(c.shape + (1,) * k) if c.ndim else c


class Jet:
    __slots__ = ("value", "first", "second", "third", "order")

    # make numpy defer to the reflected jet operators
    __array_ufunc__ = None

    def __init__(self, value, first, second=None, third=None, order: int = MAX_ORDER):
        self.value = value
        self.first = first
        self.second = second
        self.third = third
        self.order = order

    @property
    def dim(self) -> int:
        return self.first.shape[-1]

    @property
    def shape(self) -> tuple:
        return np.shape(self.value)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def constant_like(self, c) -> "Jet":
        v = np.broadcast_to(np.asarray(c, dtype=float), self.shape).copy()
        return _const(v, self.dim, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, dim={self.dim})"

    def _derivs(self):
        return (self.first, self.second, self.third)

    def _map(self, fn_value, fn_deriv) -> "Jet":
        return Jet(
            fn_value(self.value),
            fn_deriv(self.first, 1),
            None if self.second is None else fn_deriv(self.second, 2),
            None if self.third is None else fn_deriv(self.third, 3),
            self.order,
        )

    # -- indexing and shape manipulation ------------------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        full = lambda k: idx + (slice(None),) * k  # noqa: E731
        if Ellipsis not in idx:
            return self._map(lambda v: np.asarray(v)[idx], lambda a, k: a[idx])
        return self._map(lambda v: np.asarray(v)[idx], lambda a, k: a[full(k)])

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def broadcast_to(self, shape: tuple) -> "Jet":
        return self._map(
            lambda v: np.broadcast_to(v, shape),
            lambda a, k: np.broadcast_to(a, tuple(shape) + a.shape[-k:]),
        )

    def sum(self, axis: int = -1) -> "Jet":
        ax = axis if axis >= 0 else self.ndim + axis
        return self._map(lambda v: np.sum(v, axis=ax), lambda a, k: np.sum(a, axis=ax))

    def swapaxes(self, a1: int, a2: int) -> "Jet":
        a1 = a1 if a1 >= 0 else self.ndim + a1
        a2 = a2 if a2 >= 0 else self.ndim + a2
        return self._map(lambda v: np.swapaxes(v, a1, a2), lambda a, k: np.swapaxes(a, a1, a2))

    # -- arithmetic -----------------------------------------------------------
    def __neg__(self) -> "Jet":
        return self._map(lambda v: -v, lambda a, k: -a)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return Jet(
                self.value + other.value,
                self.first + other.first,
                self.second + other.second if order >= 2 else None,
                self.third + other.third if order >= 3 else None,
                order,
            )
        value = self.value + other
        out = Jet(value, self.first, self.second, self.third, self.order)
        if np.shape(value) != self.shape:
            out = out.broadcast_to(np.shape(value))
            out.value = value
        return out

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self + (-other)
        return self + (-np.asarray(other, dtype=float) if np.ndim(other) else -other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(
                self.value * other,
                self.first * _tail(other, 1),
                None if self.second is None else self.second * _tail(other, 2),
                None if self.third is None else self.third * _tail(other, 3),
                self.order,
            )
        a, b = self, other
        order = min(a.order, b.order)
        av, bv = np.asarray(a.value), np.asarray(b.value)
        av1, bv1 = av[..., None], bv[..., None]
        value = av * bv
        first = a.first * bv1 + b.first * av1
        second = third = None
        if order >= 2:
            av2, bv2 = av1[..., None], bv1[..., None]
            ab = _outer(a.first, b.first)
            second = a.second * bv2 + b.second * av2 + ab + np.swapaxes(ab, -1, -2)
            if order >= 3:
                third = (
                    a.third * bv2[..., None]
                    + b.third * av2[..., None]
                    + _sym3(a.second, b.first)
                    + _sym3(b.second, a.first)
                )
        return Jet(value, first, second, third, order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, Jet):
            return exp(p * log(self))
        return power(self, p)

    def partial(self, multi_index: Sequence[int]):
        return extract_partial(self, multi_index)


def _const(value: np.ndarray, dim: int, order: int) -> Jet:
    shape = np.shape(value)
    return Jet(
        value,
        np.zeros(shape + (dim,)),
        np.zeros(shape + (dim, dim)) if order >= 2 else None,
        np.zeros(shape + (dim, dim, dim)) if order >= 3 else None,
        order,
    )


def constant(c, dim: int, order: int = MAX_ORDER) -> Jet:
    return _const(np.asarray(c, dtype=float), dim, order)


def _check_order(order: int) -> None:
    if not 1 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"jet order {order} not in 1..{MAX_ORDER}")


def seed_independents(point, order: int = MAX_ORDER) -> list[Jet]:
    """One jet per coordinate of ``point`` (shape ``(d,)`` or ``(batch..., d)``).

    Jet ``i`` has value ``point[..., i]``, first derivative ``e_i`` and zero
    higher derivatives.
    """
    v = seed_vector(point, order)
    return [v[..., i] for i in range(v.shape[-1])]


def seed_vector(point, order: int = MAX_ORDER) -> Jet:
    """The identity map at ``point`` as a single vector-valued jet ``(..., d)``."""
    _check_order(order)
    p = np.asarray(point, dtype=float)
    if p.ndim == 0 or p.shape[-1] == 0:
        raise JetError("cannot seed jets at a point of dimension 0")
    d = p.shape[-1]
    batch = p.shape[:-1]
    return Jet(
        p.copy(),
        np.broadcast_to(np.eye(d), batch + (d, d)),
        np.zeros(batch + (d, d, d)) if order >= 2 else None,
        np.zeros(batch + (d, d, d, d)) if order >= 3 else None,
        order,
    )


def compose(x: Jet, d0, d1, d2=None, d3=None) -> Jet:
    """Apply a univariate function elementwise given its derivatives at ``x``."""
    d1b = np.asarray(d1)[..., None]
    first = d1b * x.first
    second = third = None
    if x.order >= 2:
        d2b = np.asarray(d2)[..., None, None]
        ff = _outer(x.first, x.first)
        second = d2b * ff + d1b[..., None] * x.second
        if x.order >= 3:
            d3b = np.asarray(d3)[..., None, None, None]
            third = (
                d3b * ff[..., None] * x.first[..., None, None, :]
                + d2b[..., None] * _sym3(x.second, x.first)
                + d1b[..., None, None] * x.third
            )
    return Jet(np.asarray(d0), first, second, third, x.order)


def reciprocal(x: Jet) -> Jet:
    v = np.asarray(x.value)
    if np.any(v == 0):
        raise JetDomainError("reciprocal", v)
    r = 1.0 / v
    return compose(x, r, -r * r, 2 * r**3, -6 * r**4)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, s, c, -s, -c)


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, c, -s, -c, s)


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return compose(x, e, e, e, e)


def log(x):
    v = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    if np.any(v <= 0):
        raise JetDomainError("log", v)
    if not isinstance(x, Jet):
        return np.log(v)
    r = 1.0 / v
    return compose(x, np.log(v), r, -r * r, 2 * r**3)


def sqrt(x):
    if not isinstance(x, Jet):
        if np.any(np.asarray(x) < 0):
            raise JetDomainError("sqrt", x)
        return np.sqrt(x)
    v = np.asarray(x.value)
    if np.any(v <= 0):
        # every derivative blows up at 0, so 0 is outside the usable domain
        raise JetDomainError("sqrt", v)
    s = np.sqrt(v)
    return compose(x, s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v))


def power(x, p):
    if not isinstance(x, Jet):
        return np.power(x, p)
    v = np.asarray(x.value, dtype=float)
    if float(p) == int(p):
        k = int(p)
        if k == 0:
            return x.constant_like(1.0)
        if k < 0 and np.any(v == 0):
            raise JetDomainError("power", v)
        falling = [1.0, float(k), float(k * (k - 1)), float(k * (k - 1) * (k - 2))]
        ds = [falling[i] * v ** (k - i) if falling[i] else np.zeros_like(v) for i in range(4)]
        return compose(x, *ds)
    if np.any(v <= 0):
        raise JetDomainError("power", v)
    return compose(x, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2), p * (p - 1) * (p - 2) * v ** (p - 3))


def jet_apply(f: Callable[..., Jet], args: Sequence[Jet]) -> Jet:
    """Evaluate a scalar chart function on jets; constant results are promoted."""
    if not args:
        raise JetError("jet_apply needs at least one argument jet")
    dims = {a.dim for a in args}
    if len(dims) != 1:
        raise JetError(f"argument jets disagree on dimension: {sorted(dims)}")
    out = f(*args)
    if not isinstance(out, Jet):
        out = args[0].constant_like(out)
    return out


def extract_partial(j: Jet, multi_index: Sequence[int]):
    """Raw partial derivative of ``j`` for a multi-index such as ``(0, 0, 1)``."""
    idx = tuple(int(i) for i in multi_index)
    n = len(idx)
    if n > MAX_ORDER:
        raise UnsupportedOrderError(f"partials of order {n} are not carried (max {MAX_ORDER})")
    if n > j.order:
        raise UnsupportedOrderError(f"jet truncated at order {j.order}, asked for order {n}")
    if n == 0:
        return j.value
    if n == 1:
        return j.first[..., idx[0]]
    if n == 2:
        return j.second[..., idx[0], idx[1]]
    return j.third[..., idx[0], idx[1], idx[2]]


def taylor_coefficient(j: Jet, multi_index: Sequence[int]):
    """Taylor coefficient of the monomial ``multi_index`` (partial / multiplicities!)."""
    counts: dict[int, int] = {}
    for i in multi_index:
        counts[i] = counts.get(i, 0) + 1
    denom = math.prod(math.factorial(c) for c in counts.values())
    return extract_partial(j, multi_index) / denom


# -- array helpers that accept jets or plain arrays ------------------------------

def stack(items: Sequence, axis: int = -1):
    """Stack along a new value axis (negative axes count within the value shape)."""
    like = next((x for x in items if isinstance(x, Jet)), None)
    if like is None:
        return np.stack([np.asarray(x, dtype=float) for x in items], axis=axis)
    shape = np.broadcast_shapes(*[np.shape(x.value if isinstance(x, Jet) else x) for x in items])
    parts = []
    for x in items:
        if not isinstance(x, Jet):
            x = _const(np.broadcast_to(np.asarray(x, dtype=float), shape), like.dim, like.order)
        parts.append(x.broadcast_to(shape))
    order = min(p.order for p in parts)
    nd = len(shape) + 1
    ax = axis if axis >= 0 else nd + axis
    return Jet(
        np.stack([p.value for p in parts], axis=ax),
        np.stack([p.first for p in parts], axis=ax),
        np.stack([p.second for p in parts], axis=ax) if order >= 2 else None,
        np.stack([p.third for p in parts], axis=ax) if order >= 3 else None,
        order,
    )


def vsum(x, axis: int = -1):
    return x.sum(axis) if isinstance(x, Jet) else np.sum(x, axis=axis)


def swapaxes(x, a1: int, a2: int):
    return x.swapaxes(a1, a2) if isinstance(x, Jet) else np.swapaxes(x, a1, a2)


def outer(a, b):
    """Outer product over the last value axis: (..., m) x (..., n) -> (..., m, n)."""
    return a[..., :, None] * b[..., None, :]


def matvec(M, v):
    """(..., m, n) applied to (..., n)."""
    return vsum(M * v[..., None, :], -1)


def matmul(A, B):
    return vsum(A[..., :, :, None] * B[..., None, :, :], -2)


def value_of(x):
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


def arrays(x, dim: int | None = None, order: int = 1):
    """``(value, first, second, third)`` for a jet or a constant array."""
    if isinstance(x, Jet):
        return x.value, x.first, x.second, x.third
    v = np.asarray(x, dtype=float)
    if dim is None:
        raise JetError("dimension needed to promote a constant")
    c = _const(v, dim, order)
    return c.value, c.first, c.second, c.third


def total(terms: Iterable):
    it = iter(terms)
    acc = next(it)
    for t in it:
        acc = acc + t
    return acc


def embed(x, size: int, axes: int = 1, start: int = 0):
    """Zero-pad the last ``axes`` value axes of ``x`` to length ``size``, placing
    the original block at offset ``start``."""
    def pad(a, extra):
        v = np.asarray(a)
        shape = list(v.shape)
        base = v.ndim - extra - axes
        idx = [slice(None)] * v.ndim
        for i in range(axes):
            w = shape[base + i]
            shape[base + i] = size
            idx[base + i] = slice(start, start + w)
        out = np.zeros(shape)
        out[tuple(idx)] = v
        return out

    if not isinstance(x, Jet):
        return pad(x, 0)
    return x._map(lambda v: pad(v, 0), lambda a, k: pad(a, k))
