"""Independent finite-difference oracles shared by the tests."""

import numpy as np

from sasakipmc import riemann as rc


def fd_christoffel(chart, p, h):
    """Gamma^k_ij from central differences of metric values only."""
    m = chart.dim
    e = np.eye(m)
    dg = np.stack([(chart.metric(p + h * e[i]) - chart.metric(p - h * e[i])) / (2 * h) for i in range(m)], axis=-1)
    ginv = np.linalg.inv(chart.metric(p))
    low = np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    return 0.5 * np.einsum("kl,lij->kij", ginv, low)


def fd_riemann(chart, p, h):
    """riem[l, i, j, k] from central differences of exact Christoffel values."""
    m = chart.dim
    e = np.eye(m)
    gam = rc.christoffel(chart, p)
    dgam = np.stack([(rc.christoffel(chart, p + h * e[i]) - rc.christoffel(chart, p - h * e[i])) / (2 * h) for i in range(m)], axis=-1)
    r = np.einsum("ljki->lijk", dgam) - np.einsum("likj->lijk", dgam)
    return r + np.einsum("lip,pjk->lijk", gam, gam) - np.einsum("ljp,pik->lijk", gam, gam)


def fd_nabla_riemann(chart, p, h):
    """nabla[m, l, i, j, k] from central differences of exact curvature values."""
    m = chart.dim
    e = np.eye(m)
    gam = rc.christoffel(chart, p)
    R = rc.riemann(chart, p)
    dR = np.stack([(rc.riemann(chart, p + h * e[i]) - rc.riemann(chart, p - h * e[i])) / (2 * h) for i in range(m)], axis=0)
    return (
        dR
        + np.einsum("lmp,pijk->mlijk", gam, R)
        - np.einsum("pmi,lpjk->mlijk", gam, R)
        - np.einsum("pmj,lipk->mlijk", gam, R)
        - np.einsum("pmk,lijp->mlijk", gam, R)
    )


def observed_order(hs, errs):
    hs, errs = np.log(np.asarray(hs)), np.log(np.asarray(errs))
    return float(np.polyfit(hs, errs, 1)[0])
