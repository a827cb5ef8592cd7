"""Hardy-space spectral data on the torus tube boundary and Szego band kernels.

The CR monomials e_k(z) = exp(2 pi i k.z), z = u + i v, span the Hardy space
of X^tau. They are orthogonal for the surface measure because the u-integral
separates frequencies, with squared norms

    G_k = integral over |v| = tau of exp(-4 pi k.v) dsigma(v)
        = tau^(d-1) (2 pi)^(d/2) a^(1-d/2) I_(d/2-1)(a),   a = 4 pi |k| tau,

and the Toeplitz operator i (v/|v|).d_u is diagonal on them with eigenvalue

    lambda_k = 2 pi |k| I_(d/2)(a) / I_(d/2-1)(a).

Everything is carried in log form through exponentially scaled Bessel
functions, since e^(4 pi |k| tau) overflows long before the sums converge.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .spectral_windows import Window, hat_band_radius, window_hat
from .torus_geometry import TorusPoint

__all__ = [
    "Mode",
    "ModeTable",
    "CutoffError",
    "ModeLimitError",
    "KernelValue",
    "enumerate_modes",
    "gram_norm",
    "gram_norm_quadrature",
    "toeplitz_eigenvalue",
    "toeplitz_eigenvalue_quadrature",
    "toeplitz_matrix_bruteforce",
    "szego_smoothed_kernel",
    "weyl_counter_szego",
    "weyl_curve_szego",
    "required_cutoff",
    "lattice_sum",
    "DEFAULT_MAX_MODES",
    "DEFAULT_HAT_TOL",
]

DEFAULT_MAX_MODES = 5_000_000
DEFAULT_HAT_TOL = 1e-13
_BRUTE_FORCE_LIMIT = 6


class CutoffError(ValueError):
    """The mode table does not reach far enough for the requested band."""


class ModeLimitError(MemoryError):
    pass


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _log_gram_closed(norms: np.ndarray, tau: float, d: int) -> np.ndarray:
    norms = np.asarray(norms, dtype=float)
    a = 4.0 * math.pi * norms * tau
    out = np.full(a.shape, (d - 1) * math.log(tau) + math.log(_sphere_area(d)))
    pos = a > 0
    nu = d / 2.0 - 1.0
    ap = a[pos]
    out[pos] = ((d - 1) * math.log(tau) + 0.5 * d * math.log(2.0 * math.pi)
                + (1.0 - 0.5 * d) * np.log(ap) + np.log(special.ive(nu, ap)) + ap)
    return out


def _lambda_closed(norms: np.ndarray, tau: float, d: int) -> np.ndarray:
    norms = np.asarray(norms, dtype=float)
    a = 4.0 * math.pi * norms * tau
    out = np.zeros(a.shape)
    pos = a > 0
    out[pos] = 2.0 * math.pi * norms[pos] * special.ive(d / 2.0, a[pos]) / special.ive(d / 2.0 - 1.0, a[pos])
    return out


def gram_norm(k, tau: float, d: int | None = None) -> float:
    """ln G_k from the closed form (exponentially scaled Bessel)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    d = d or k.size
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(_log_gram_closed(np.array([np.linalg.norm(k)]), tau, d)[0])


def _sphere_moments(kn: float, tau: float, d: int, nodes: int):
    """ln of integral exp(-4 pi k.v) dsigma and of the (k.v)-weighted integral.

    Reduces to one polar angle: dsigma = tau^(d-1) |S^(d-2)| sin^(d-2) t dt
    with k.v = |k| tau cos t. Gauss-Legendre in t with log-sum-exp.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * math.pi * (x + 1.0)
    wt = 0.5 * math.pi * w
    base = -4.0 * math.pi * kn * tau * np.cos(t)
    if d == 2:
        log_meas = np.log(wt) + math.log(2.0 * tau)
    else:
        log_meas = np.log(wt) + (d - 2) * np.log(np.sin(t)) + (d - 1) * math.log(tau) + math.log(_sphere_area(d - 1))
    lg = special.logsumexp(base + log_meas)
    kv = kn * tau * np.cos(t)
    lkv, sgn = special.logsumexp(base + log_meas, b=kv, return_sign=True)
    return float(lg), float(lkv), float(sgn)


def gram_norm_quadrature(k, tau: float, d: int | None = None, nodes: int = 200) -> float:
    """ln G_k by sphere quadrature, the cross-check of :func:`gram_norm`."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    d = d or k.size
    lg, _, _ = _sphere_moments(float(np.linalg.norm(k)), tau, d, nodes)
    lg2, _, _ = _sphere_moments(float(np.linalg.norm(k)), tau, d, 2 * nodes)
    if abs(lg - lg2) > 1e-11:
        raise ArithmeticError("sphere quadrature for G_k did not converge")
    return lg2


def toeplitz_eigenvalue(k, tau: float, d: int | None = None) -> float:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    d = d or k.size
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(_lambda_closed(np.array([np.linalg.norm(k)]), tau, d)[0])


def toeplitz_eigenvalue_quadrature(k, tau: float, d: int | None = None, nodes: int = 200) -> float:
    """Rayleigh quotient -(2 pi/tau) <(k.v) e_k, e_k> / G_k by quadrature."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    d = d or k.size
    kn = float(np.linalg.norm(k))
    if kn == 0:
        return 0.0
    lg, lkv, sgn = _sphere_moments(kn, tau, d, nodes)
    return float(-(2.0 * math.pi / tau) * sgn * math.exp(lkv - lg))


@dataclass(frozen=True)
class Mode:
    k: tuple
    norm: float
    log_gram: float
    lambda_k: float
    mu_k: float


@dataclass(frozen=True)
class ModeTable:
    """All lattice modes with |k| <= K in lexicographic order."""

    d: int
    K: float
    tau: float
    ks: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    log_gram: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    provenance: str = "closed-form Bessel (ive), cross-checked by sphere quadrature"

    def __len__(self) -> int:
        return int(self.ks.shape[0])

    def mode(self, i: int) -> Mode:
        return Mode(tuple(int(c) for c in self.ks[i]), float(self.norms[i]), float(self.log_gram[i]),
                    float(self.lam[i]), float(self.mu[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.mode(i)

    @property
    def lambda_edge(self) -> float:
        """Every mode outside the table has lambda_k above this value."""
        return float(_lambda_closed(np.array([self.K]), self.tau, self.d)[0])

    @property
    def mu_edge(self) -> float:
        return 2.0 * math.pi * self.K


def enumerate_modes(d: int, K: float, tau: float, max_modes: int = DEFAULT_MAX_MODES) -> ModeTable:
    if K < 0 or tau <= 0 or d < 1:
        raise ValueError("need K >= 0, tau > 0, d >= 1")
    return _enumerate_cached(int(d), float(K), float(tau), int(max_modes))


@lru_cache(maxsize=8)
def _enumerate_cached(d: int, K: float, tau: float, max_modes: int) -> ModeTable:
    kmax = int(math.floor(K))
    box = (2 * kmax + 1) ** d
    est = _sphere_area(d) / d * K**d if K >= 1 else box
    if min(box, est) > max_modes:
        raise ModeLimitError(f"about {int(min(box, est))} modes exceed the limit {max_modes}")
    axis = np.arange(-kmax, kmax + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    n2 = np.sum(ks * ks, axis=1)
    ks = ks[n2 <= K * K + 1e-9]
    if ks.shape[0] > max_modes:
        raise ModeLimitError(f"{ks.shape[0]} modes exceed the limit {max_modes}")
    norms = np.sqrt(np.sum(ks * ks, axis=1).astype(float))
    lg = _log_gram_closed(norms, tau, d)
    lam = _lambda_closed(norms, tau, d)
    mu = 2.0 * math.pi * norms
    for arr in (ks, norms, lg, lam, mu):
        arr.setflags(write=False)
    return ModeTable(d=d, K=K, tau=tau, ks=ks, norms=norms, log_gram=lg, lam=lam, mu=mu)


def required_cutoff(lam: float, band: float, tau: float, d: int, spectrum: str = "toeplitz") -> float:
    """Smallest K (plus one lattice unit of slack) whose edge clears lam + band."""
    top = lam + band
    if spectrum == "laplace":
        return max(top, 0.0) / (2.0 * math.pi) + 1.0
    # lambda_k < 2 pi |k| and 2 pi |k| - lambda_k < (d - 1) / (4 tau) + O(1/|k|)
    return max(top + (d - 1) / (2.0 * tau) + 1.0 / tau, 0.0) / (2.0 * math.pi) + 1.0


def toeplitz_matrix_bruteforce(K_small: int, tau: float, d: int = 2, u_nodes: int | None = None,
                               sphere_nodes: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """<D e_k, e_l> / sqrt(G_k G_l) by full surface quadrature.

    Returns (ks, matrix). The surface T^d x S^(d-1)_tau is discretised by the
    trapezoid rule in u (exact for the trigonometric degrees involved) and in
    the fibre angle(s); d = 3 uses Gauss-Legendre in the polar angle.
    """
    if K_small > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"K_small={K_small} exceeds the brute-force limit {_BRUTE_FORCE_LIMIT}")
    if d not in (2, 3):
        raise ValueError("brute-force oracle implemented for d = 2, 3")
    mt = enumerate_modes(d, K_small, tau)
    ks = np.asarray(mt.ks, dtype=float)
    nu = u_nodes or max(24, 4 * K_small + 4)
    ug = np.arange(nu) / nu
    U = np.stack(np.meshgrid(*([ug] * d), indexing="ij"), axis=-1).reshape(-1, d)
    uw = np.full(U.shape[0], 1.0 / U.shape[0])
    if d == 2:
        ang = 2.0 * math.pi * np.arange(sphere_nodes) / sphere_nodes
        V = tau * np.column_stack([np.cos(ang), np.sin(ang)])
        vw = np.full(sphere_nodes, 2.0 * math.pi * tau / sphere_nodes)
    else:
        x, w = np.polynomial.legendre.leggauss(sphere_nodes // 2)
        ph = 2.0 * math.pi * np.arange(sphere_nodes) / sphere_nodes
        ct, PH = np.meshgrid(x, ph, indexing="ij")
        st = np.sqrt(1.0 - ct**2)
        V = tau * np.column_stack([(st * np.cos(PH)).ravel(), (st * np.sin(PH)).ravel(), ct.ravel()])
        vw = (np.repeat(w, sphere_nodes) * (2.0 * math.pi / sphere_nodes) * tau**2)
    # e_k(u + i v) = exp(2 pi i k.u) exp(-2 pi k.v), split into u and v factors.
    Eu = np.exp(2j * math.pi * (ks @ U.T))
    logv = -2.0 * math.pi * (ks @ V.T)
    kv = ks @ V.T
    # Normalise each row by sqrt(G_k) measured with the same quadrature.
    lnorm = 0.5 * special.logsumexp(2.0 * logv + np.log(vw)[None, :], axis=1)
    Ev = np.exp(logv - lnorm[:, None])
    gu = (Eu * uw[None, :]) @ Eu.conj().T
    Dv = (-(2.0 * math.pi / tau) * kv * Ev * vw[None, :]) @ Ev.T
    # The surface integral factorises: integral over u times integral over v.
    M = gu * Dv
    return mt.ks, M


@dataclass(frozen=True)
class KernelValue:
    """A kernel value with its truncation bound and the a-priori bound sum_k env_k |w_k|."""

    value: complex
    tail_bound: float
    abs_bound: float
    modes_used: int
    band_radius: float


def _chunks(n: int, parts: int):
    step = max(1, -(-n // parts))
    return [(i, min(n, i + step)) for i in range(0, n, step)]


def lattice_sum(ks: np.ndarray, logw: np.ndarray, hat: np.ndarray, du: np.ndarray,
                threads: int = 1) -> complex:
    """sum hat_k exp(logw_k) exp(2 pi i k.du), exactly rounded per component.

    The terms are produced in parallel chunks and summed with math.fsum, whose
    correctly rounded result does not depend on the chunking, so the value is
    bitwise identical for every thread count.
    """
    def work(lo_hi):
        lo, hi = lo_hi
        frac = np.mod(ks[lo:hi] @ du, 1.0)
        mag = hat[lo:hi] * np.exp(logw[lo:hi])
        ang = 2.0 * math.pi * frac
        return mag * np.cos(ang), mag * np.sin(ang)

    n = ks.shape[0]
    if n == 0:
        return 0j
    parts = _chunks(n, max(1, threads))
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(work, parts))
    else:
        res = [work(p) for p in parts]
    re = math.fsum(np.concatenate([r[0] for r in res]).tolist())
    im = math.fsum(np.concatenate([r[1] for r in res]).tolist())
    return complex(re, im)


def _wrapped_du(x: TorusPoint, y: TorusPoint) -> np.ndarray:
    return (x.u - y.u + 0.5) % 1.0 - 0.5


def _envelope_at(w: Window, xi: np.ndarray) -> np.ndarray:
    """Suffix-max envelope of |hat chi| at |xi| (table floor beyond the end)."""
    # the grid is uniform and starts at 0
    step = float(w.xi_grid[1] - w.xi_grid[0])
    idx = np.minimum(np.abs(xi) / step, len(w.envelope) - 1).astype(np.int64)
    return w.envelope[idx]


def band_kernel(x: TorusPoint, y: TorusPoint, lam: float, w: Window, mt: ModeTable,
                spectral: np.ndarray, extra_log: np.ndarray, edge: float,
                hat_tol: float, threads: int, prune: float) -> KernelValue:
    """Shared lattice sum used by the Szego and Poisson kernels.

    Every mode is bounded by env(|lam - s_k|) exp(logw_k), env the monotone
    envelope of |hat chi|. Modes whose bound falls below ``prune`` times the
    largest one are dropped and their bounds summed into ``tail_bound``.
    The table must reach past lam + R, R the radius where the envelope drops
    below ``hat_tol``; modes beyond the table are not bounded individually.
    """
    R = hat_band_radius(w, hat_tol)
    if edge < lam + R:
        raise CutoffError(f"mode table edge {edge:.6g} is below lambda + band = {lam + R:.6g}")
    ks = mt.ks
    logw = -2.0 * math.pi * (ks @ (x.v + y.v)) + extra_log
    env = _envelope_at(w, lam - spectral)
    with np.errstate(divide="ignore"):
        lb = np.log(env) + logw
    top = float(np.max(lb))
    if not math.isfinite(top):
        return KernelValue(0j, 0.0, 0.0, 0, R)
    keep = lb >= top + math.log(prune)
    bounds = np.exp(lb)
    tail = float(np.sum(bounds[~keep]))
    total = float(np.sum(bounds))
    idx = np.flatnonzero(keep)
    hat = np.atleast_1d(window_hat(w, lam - spectral[idx]))
    val = lattice_sum(ks[idx].astype(float), logw[idx], hat, _wrapped_du(x, y), threads)
    return KernelValue(val, tail, total, int(idx.size), R)


def szego_smoothed_kernel(x: TorusPoint, y: TorusPoint, lam: float, w: Window, mt: ModeTable,
                          hat_tol: float = DEFAULT_HAT_TOL, threads: int = 1,
                          prune: float = 1e-17, detail: bool = False):
    """Smoothed Szego band kernel sum_k hat chi(lam - lambda_k) e~_k(x) conj(e~_k(y)).

    e~_k = e_k / sqrt(G_k). With ``detail`` a :class:`KernelValue` carrying
    the truncation bound is returned instead of the bare complex number.
    """
    _check_points(x, y, mt)
    kv = band_kernel(x, y, lam, w, mt, mt.lam, -mt.log_gram, mt.lambda_edge, hat_tol, threads, prune)
    return kv if detail else kv.value


def _check_points(x: TorusPoint, y: TorusPoint, mt: ModeTable) -> None:
    for p in (x, y):
        if p.dim != mt.d:
            raise ValueError("point dimension does not match the mode table")
        if abs(float(np.linalg.norm(p.v)) - mt.tau) > 1e-10:
            raise ValueError("points must lie on X^tau")


def weyl_counter_szego(x: TorusPoint, lam: float, mt: ModeTable) -> float:
    """sum over lambda_k <= lam of |e~_k(x)|^2."""
    if lam > mt.lambda_edge:
        raise CutoffError(f"lambda={lam} exceeds the table edge {mt.lambda_edge:.6g}")
    if lam < 0:
        return 0.0
    sel = mt.lam <= lam
    logw = -4.0 * math.pi * (mt.ks[sel] @ x.v) - mt.log_gram[sel]
    return math.fsum(np.exp(logw).tolist())


def weyl_curve_szego(x: TorusPoint, lams, mt: ModeTable) -> np.ndarray:
    return np.array([weyl_counter_szego(x, float(l), mt) for l in np.atleast_1d(lams)])
