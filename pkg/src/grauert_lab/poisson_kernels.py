"""Complexified Laplace eigenfunctions and the smoothed complexified Poisson kernel.

The Laplace eigenfunctions exp(2 pi i k.u) on the flat torus continue
holomorphically to exp(2 pi i k.(u + i v)), with eigenvalue mu_k = 2 pi |k|
of the square root of the Laplacian. The band kernel weights each mode by
hat chi(lambda - mu_k) exp(-2 tau mu_k).
"""

from __future__ import annotations

import math

import numpy as np

from .hardy_szego import (
    DEFAULT_HAT_TOL,
    CutoffError,
    KernelValue,
    ModeTable,
    _check_points,
    band_kernel,
)
from .spectral_windows import Window
from .torus_geometry import TorusPoint

__all__ = [
    "complexified_eigenfunction",
    "poisson_log_weight",
    "poisson_smoothed_kernel",
    "weyl_counter_poisson",
    "weyl_curve_poisson",
]


def complexified_eigenfunction(k, p: TorusPoint) -> tuple[float, float]:
    """(phase, log-magnitude) of exp(2 pi i k.(u + i v)), phase in [0, 2 pi)."""
    k = np.asarray(k, dtype=float)
    phase = 2.0 * math.pi * (float(k @ p.u) % 1.0)
    return phase, float(-2.0 * math.pi * (k @ p.v))


def poisson_log_weight(k, p: TorusPoint, tau: float) -> float:
    """ln of exp(-2 tau mu_k) |phi~_k(p)|^2; never positive on X^tau."""
    k = np.asarray(k, dtype=float)
    return float(-4.0 * math.pi * (k @ p.v) - 4.0 * math.pi * tau * np.linalg.norm(k))


def poisson_smoothed_kernel(x: TorusPoint, y: TorusPoint, lam: float, w: Window, mt: ModeTable,
                            hat_tol: float = DEFAULT_HAT_TOL, threads: int = 1,
                            prune: float = 1e-17, detail: bool = False):
    """sum_k hat chi(lam - mu_k) exp(-4 pi tau |k|) phi~_k(x) conj(phi~_k(y))."""
    _check_points(x, y, mt)
    extra = -4.0 * math.pi * mt.tau * mt.norms
    kv = band_kernel(x, y, lam, w, mt, mt.mu, extra, mt.mu_edge, hat_tol, threads, prune)
    return kv if detail else kv.value


def weyl_counter_poisson(x: TorusPoint, lam: float, mt: ModeTable) -> float:
    """sum over mu_k <= lam of exp(-4 pi tau |k|) |phi~_k(x)|^2."""
    if lam > mt.mu_edge:
        raise CutoffError(f"lambda={lam} exceeds the table edge {mt.mu_edge:.6g}")
    if lam < 0:
        return 0.0
    sel = mt.mu <= lam
    logw = -4.0 * math.pi * (mt.ks[sel] @ x.v) - 4.0 * math.pi * mt.tau * mt.norms[sel]
    return math.fsum(np.exp(logw).tolist())


def weyl_curve_poisson(x: TorusPoint, lams, mt: ModeTable) -> np.ndarray:
    return np.array([weyl_counter_poisson(x, float(l), mt) for l in np.atleast_1d(lams)])


__all__ += ["KernelValue"]
