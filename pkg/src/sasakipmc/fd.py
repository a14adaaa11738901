"""Finite-difference stencils on uniform grids."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def fornberg_weights(offsets: tuple, deriv: int) -> np.ndarray:
    """Weights w with f^(deriv)(0) ~ sum_k w_k f(offsets[k]) (unit spacing).

    Fornberg's recursion, exact for polynomials of degree < len(offsets).
    """
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    if deriv >= n:
        raise ValueError(f"need more than {deriv} points for derivative order {deriv}")
    c = np.zeros((n, deriv + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        c2 = 1.0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            for k in range(min(i, deriv), -1, -1):
                prev_ik = c[i - 1, k - 1] if k else 0.0
                c[i, k] = c1 * (k * prev_ik - x[i - 1] * c[i - 1, k]) / c2
            for k in range(min(i, deriv), -1, -1):
                prev_jk = c[j, k - 1] if k else 0.0
                c[j, k] = (x[i] * c[j, k] - k * prev_jk) / c3
        c1 = c2
    return c[:, deriv].copy()


def central_weights(accuracy: int, deriv: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central stencil of the given even accuracy."""
    if accuracy % 2:
        raise ValueError("central stencils have even accuracy")
    half = accuracy // 2 + (deriv - 1) // 2
    offs = tuple(range(-half, half + 1))
    return np.array(offs), fornberg_weights(offs, deriv)


def derivative(f: np.ndarray, h: float, axis: int = 0, accuracy: int = 4, deriv: int = 1) -> np.ndarray:
    """Derivative along ``axis`` with central stencils inside and one-sided
    stencils of the same width near the ends."""
    f = np.asarray(f)
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    offs, w = central_weights(accuracy, deriv)
    half = int(offs[-1])
    width = len(offs)
    if n < width:
        raise ValueError(f"axis has {n} samples, stencil needs {width}")
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[half : n - half] = sum(wk * f[half + o : n - half + o] for o, wk in zip(offs, w))
    for i in list(range(half)) + list(range(n - half, n)):
        start = min(max(i - half, 0), n - width)
        loc = tuple(range(start - i, start - i + width))
        wl = fornberg_weights(loc, deriv)
        out[i] = sum(wk * f[start + k] for k, wk in enumerate(wl))
    out /= h**deriv
    return np.moveaxis(out, 0, axis)


def central_only(f: np.ndarray, h: float, axis: int = 0, accuracy: int = 8) -> np.ndarray:
    """Central-stencil first derivative; the ``accuracy // 2`` samples at each
    end are dropped, so the result is shorter along ``axis``."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    offs, w = central_weights(accuracy, 1)
    half = int(offs[-1])
    n = f.shape[0]
    out = sum(wk * f[half + o : n - half + o] for o, wk in zip(offs, w)) / h
    return np.moveaxis(out, 0, axis)


def interior(shape: tuple, margin: int) -> np.ndarray:
    """Boolean mask of grid points at least ``margin`` cells from the boundary."""
    mask = np.zeros(shape, dtype=bool)
    sl = tuple(slice(margin, s - margin) for s in shape)
    mask[sl] = True
    return mask


def convergence_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0):
        return float("nan")
    return float(np.polyfit(np.log(hs), np.log(e), 1)[0])
