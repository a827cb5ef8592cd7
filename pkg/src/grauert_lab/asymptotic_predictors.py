"""Leading-order predictions and the stationary-phase data behind them.

Real vectors in C^n are stored as (x_1, y_1, ..., x_n, y_n) with complex
structure J(x, y) = (-y, x). A Hermitian structure is given by g (real part)
and omega(u, v) = g(J u, v); the default is the Euclidean one, which is what
the chart frames are unitary for.

The phase of the near-diagonal analysis is

    Upsilon(t, v, theta, u) = u (theta_1 - theta) + v (theta + tau t - theta_2) - t,

with variables ordered (t, v, theta, u), and the quadratic exponent S and
its critical value S_c feed a Gaussian integral whose closed form produces
Psi_2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import sympy as sp

__all__ = [
    "HermitianData",
    "PhasePoint",
    "StationaryData",
    "WeylPrediction",
    "EXPECTED_REMAINDER_EXPONENT",
    "psi2",
    "Psi2",
    "szego_leading_term",
    "poisson_leading_term",
    "gamma00",
    "weyl_prediction",
    "upsilon_phase",
    "critical_point",
    "find_critical_point",
    "hessian_displayed",
    "hessian_inverse_displayed",
    "exact_stationary_data",
    "s_quadratic",
    "s_critical",
    "gaussian_integral_check",
    "gaussian_closed_form",
    "leading_symbol_identity",
]

# Structural claims of the expansions, consumed by the fit harness.
EXPECTED_REMAINDER_EXPONENT = {"diagonal": -1.0, "off_diagonal": -0.5}


def _standard_J(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


@dataclass(frozen=True)
class HermitianData:
    """h = g - i omega on R^{2n}, with omega(u, v) = g(J u, v)."""

    n: int
    g: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        J = np.array(self.J, dtype=float)
        m = 2 * self.n
        if g.shape != (m, m) or J.shape != (m, m):
            raise ValueError("g and J must be 2n x 2n")
        if not np.allclose(g, g.T, atol=1e-12) or np.min(np.linalg.eigvalsh(g)) <= 0:
            raise ValueError("g must be symmetric positive definite")
        if not np.allclose(J @ J, -np.eye(m), atol=1e-12):
            raise ValueError("J must satisfy J^2 = -1")
        if not np.allclose(J.T @ g @ J, g, atol=1e-12):
            raise ValueError("g must be J-invariant")
        for a in (g, J):
            a.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "J", J)

    @staticmethod
    def standard(n: int) -> "HermitianData":
        return HermitianData(n, np.eye(2 * n), _standard_J(n))

    @property
    def omega(self) -> np.ndarray:
        """Matrix W with omega(u, v) = u^T W v."""
        return self.J.T @ self.g

    def norm_sq(self, u) -> float:
        u = np.asarray(u, float)
        return float(u @ self.g @ u)

    def om(self, u, v) -> float:
        return float(np.asarray(u, float) @ self.omega @ np.asarray(v, float))

    def apply_J(self, u) -> np.ndarray:
        return self.J @ np.asarray(u, float)


def _hd(hd: HermitianData | None, vec) -> HermitianData:
    m = np.asarray(vec).size
    if m % 2:
        raise ValueError("vectors must have even real dimension")
    if hd is None:
        return HermitianData.standard(m // 2)
    if 2 * hd.n != m:
        raise ValueError(f"dimension mismatch: vector has {m} components, structure has {2 * hd.n}")
    return hd


def psi2(u, v, hd: HermitianData | None = None) -> complex:
    """-1/2 |u - v|^2 - i omega(u, v)."""
    h = _hd(hd, u)
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    return complex(-0.5 * h.norm_sq(u - v), -h.om(u, v))


def Psi2(theta1: float, v1, theta2: float, v2, a_x: float, A_x, tau: float,
         hd: HermitianData | None = None) -> complex:
    """Psi_2 with a_x(theta_1, theta_2) = ((theta_1 - theta_2)/tau) A_x.

    ``a_x`` (the scalar) does not enter Psi_2; it is accepted so the call
    mirrors the other stationary-phase helpers.
    """
    h = _hd(hd, v1)
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    a = ((theta1 - theta2) / tau) * np.asarray(A_x, float)
    Ja = h.apply_J(a)
    val = (-1j * h.om(v1, v2) - 0.5j * h.om(Ja, v1 + v2)
           - 0.25 * h.norm_sq(v1 - v2) - 0.25 * h.norm_sq(v1 - v2 + Ja))
    return complex(val)


def szego_leading_term(theta1: float, v1, theta2: float, v2, lam: float, tau: float, d: int,
                       chi0: float = 1.0) -> complex:
    """(1/sqrt(2 pi)) (lam/2 pi tau)^(d-1) e^{i sqrt(lam)(theta1-theta2)/tau} chi(0) e^{psi2/tau}."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    amp = (lam / (2.0 * math.pi * tau)) ** (d - 1) / math.sqrt(2.0 * math.pi) * chi0
    phase = math.sqrt(lam) * (theta1 - theta2) / tau
    return complex(amp * np.exp(1j * phase + psi2(v1, v2) / tau))


def gamma00(tau: float, d: int) -> float:
    return tau ** ((d - 1) / 2.0)


def poisson_leading_term(theta1: float, v1, theta2: float, v2, lam: float, tau: float, d: int,
                         chi0: float = 1.0, gamma: float | None = None) -> complex:
    """(gamma00/sqrt(2 pi)) (1/2 pi tau)^(d-1) lam^((d-1)/2) e^{i ...} chi(0) e^{psi2/tau}."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    g = gamma00(tau, d) if gamma is None else gamma
    amp = g / math.sqrt(2.0 * math.pi) * (1.0 / (2.0 * math.pi * tau)) ** (d - 1) * lam ** ((d - 1) / 2.0) * chi0
    phase = math.sqrt(lam) * (theta1 - theta2) / tau
    return complex(amp * np.exp(1j * phase + psi2(v1, v2) / tau))


@dataclass(frozen=True)
class WeylPrediction:
    value: float
    remainder_exponent: float


def weyl_prediction(kind: str, lam: float, tau: float, d: int, gamma: float | None = None) -> WeylPrediction:
    """Leading Weyl term; ``remainder_exponent`` is the order of the error term in lambda."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if kind == "szego":
        return WeylPrediction((tau / d) * (lam / (2.0 * math.pi * tau)) ** d, d - 1.0)
    if kind == "poisson":
        g = gamma00(tau, d) if gamma is None else gamma
        h = (d - 1) / 2.0
        val = (1.0 / (2.0 * math.pi) ** d) * (lam / tau) ** h * (g / tau**h) * lam / (h + 1.0)
        return WeylPrediction(val, h)
    raise ValueError(f"unknown Weyl kind {kind!r}")


# ---------------------------------------------------------------------------
# Stationary phase for Upsilon.


@dataclass(frozen=True)
class PhasePoint:
    t: float
    v: float
    theta: float
    u: float
    theta1: float = 0.0
    theta2: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        for name in ("t", "v", "theta", "u", "theta1", "theta2", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def vector(self) -> np.ndarray:
        return np.array([self.t, self.v, self.theta, self.u])

    def moved(self, vec) -> "PhasePoint":
        t, v, th, u = (float(c) for c in vec)
        return PhasePoint(t, v, th, u, self.theta1, self.theta2, self.tau)


def upsilon_phase(p: PhasePoint) -> tuple[float, np.ndarray, np.ndarray]:
    t, v, th, u = p.t, p.v, p.theta, p.u
    val = u * (p.theta1 - th) + v * (th + p.tau * t - p.theta2) - t
    grad = np.array([v * p.tau - 1.0, th + p.tau * t - p.theta2, v - u, p.theta1 - th])
    hess = hessian_displayed(p.tau)
    return float(val), grad, hess


def critical_point(theta1: float, theta2: float, tau: float) -> PhasePoint:
    return PhasePoint((theta2 - theta1) / tau, 1.0 / tau, theta1, 1.0 / tau, theta1, theta2, tau)


def hessian_displayed(tau: float) -> np.ndarray:
    return np.array([[0.0, tau, 0.0, 0.0],
                     [tau, 0.0, 1.0, 0.0],
                     [0.0, 1.0, 0.0, -1.0],
                     [0.0, 0.0, -1.0, 0.0]])


def hessian_inverse_displayed(tau: float) -> np.ndarray:
    return np.array([[0.0, 1.0 / tau, 0.0, 1.0 / tau],
                     [1.0 / tau, 0.0, 0.0, 0.0],
                     [0.0, 0.0, 0.0, -1.0],
                     [1.0 / tau, 0.0, -1.0, 0.0]])


class CriticalPointError(ArithmeticError):
    pass


def find_critical_point(theta1: float, theta2: float, tau: float, start: PhasePoint | None = None,
                        tol: float = 1e-12, maxit: int = 20) -> PhasePoint:
    """Newton iteration on grad Upsilon, with the Hessian assembled by finite differences.

    The gradient is affine, so the difference Hessian is exact up to rounding
    and Newton lands on the critical point in one step.
    """
    p = start if start is not None else PhasePoint(0.0, 0.0, 0.0, 0.0)
    p = PhasePoint(p.t, p.v, p.theta, p.u, theta1, theta2, tau)
    x = p.vector()
    for _ in range(maxit):
        _, g, _ = upsilon_phase(p.moved(x))
        if np.max(np.abs(g)) <= tol:
            return p.moved(x)
        H = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = 1.0
            H[:, j] = upsilon_phase(p.moved(x + e))[1] - g
        x = x - np.linalg.solve(H, g)
    _, g, _ = upsilon_phase(p.moved(x))
    res = float(np.max(np.abs(g)))
    if res > tol:
        raise CriticalPointError(f"Newton did not converge, residual {res:.3e}")
    return p.moved(x)


@dataclass(frozen=True)
class StationaryData:
    det: sp.Expr
    signature: int
    inverse_matches: bool
    critical_value: sp.Expr
    third_derivatives_vanish: bool
    hessian: sp.Matrix


def _sign_changes(coeffs) -> int:
    signs = []
    for c in coeffs:
        c = sp.simplify(c)
        if c == 0:
            continue
        if c.is_positive:
            signs.append(1)
        elif c.is_negative:
            signs.append(-1)
        else:
            raise CriticalPointError(f"cannot decide the sign of coefficient {c}")
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _exact_signature(H: sp.Matrix) -> int:
    """Signature of a symmetric matrix by Descartes' rule on its characteristic polynomial.

    The polynomial is real-rooted, so the sign-change counts of p(x) and
    p(-x) are exactly the numbers of positive and negative eigenvalues.
    """
    x = sp.Symbol("x")
    p = sp.Poly(H.charpoly(x).as_expr(), x)
    pos = _sign_changes(p.all_coeffs())
    neg = _sign_changes(sp.Poly(p.as_expr().subs(x, -x), x).all_coeffs())
    if pos + neg + (H.shape[0] - H.rank()) != H.shape[0]:
        raise CriticalPointError("root counts do not add up")
    return pos - neg


@lru_cache(maxsize=1)
def exact_stationary_data() -> StationaryData:
    """Exact Hessian data of Upsilon at its critical point (sympy, tau > 0 symbolic)."""
    t, v, th, u, th1, th2 = sp.symbols("t v theta u theta1 theta2", real=True)
    tau = sp.symbols("tau", positive=True)
    ups = u * (th1 - th) + v * (th + tau * t - th2) - t
    X = [t, v, th, u]
    sol = sp.solve([sp.diff(ups, s) for s in X], X, dict=True)
    if len(sol) != 1:
        raise CriticalPointError("critical point is not unique")
    sol = sol[0]
    H = sp.hessian(ups, X).subs(sol)
    det = sp.simplify(H.det())
    sig = _exact_signature(H)
    Hinv = sp.Matrix([[0, 1 / tau, 0, 1 / tau], [1 / tau, 0, 0, 0], [0, 0, 0, -1], [1 / tau, 0, -1, 0]])
    inv_ok = sp.simplify(H * Hinv - sp.eye(4)) == sp.zeros(4, 4)
    third = all(sp.diff(ups, a, b, c) == 0 for a, b, c in product(X, repeat=3))
    crit = sp.simplify(ups.subs(sol))
    return StationaryData(det=det, signature=sig, inverse_matches=bool(inv_ok), critical_value=crit,
                          third_derivatives_vanish=third, hessian=H)


def s_quadratic(uvec, t: float, v: float, theta: float, u: float, theta1: float, v1, theta2: float, v2,
                tau: float, a_x: float = 0.0, A_x=None, hd: HermitianData | None = None) -> complex:
    uvec = np.asarray(uvec, float)
    h = _hd(hd, uvec)
    A = np.zeros_like(uvec) if A_x is None else np.asarray(A_x, float)
    drift = -1j * v * t * (a_x * theta / (2.0 * tau**2) + float(A @ uvec))
    quad = -(u * (theta1 - theta) ** 2 + v * (theta + tau * t - theta2) ** 2) / (4.0 * tau**2)
    return complex(drift + quad + u * psi2(v1, uvec, h) + v * psi2(uvec, v2, h))


def s_critical(theta1: float, v1, theta2: float, v2, uvec, tau: float, a_x: float = 0.0, A_x=None,
               hd: HermitianData | None = None) -> complex:
    """S at the critical point, in the completed-square form."""
    uvec = np.asarray(uvec, float)
    h = _hd(hd, uvec)
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    A = np.zeros_like(uvec) if A_x is None else np.asarray(A_x, float)
    a = ((theta1 - theta2) / tau) * A
    b = v1 - v2 + h.apply_J(a)
    m = 0.5 * (v1 + v2)
    bracket = (-0.5 * (h.norm_sq(v1) + h.norm_sq(v2)) + 0.25 * h.norm_sq(v1 + v2)
               - 1j * h.om(b, uvec) - h.norm_sq(uvec - m))
    return complex(1j * (theta1 - theta2) * theta1 * a_x / (2.0 * tau**4) + bracket / tau)


def _s_critical_batch(theta1, v1, theta2, v2, U, tau, a_x, A_x, h: HermitianData) -> np.ndarray:
    """Vectorised S_c built from the psi_2 form (independent of the completed square)."""
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    A = np.asarray(A_x, float)
    g, W = h.g, h.omega
    d1 = v1[None, :] - U
    d2 = U - v2[None, :]
    p1 = -0.5 * np.einsum("ni,ij,nj->n", d1, g, d1) - 1j * (U @ W.T @ v1)
    p2 = -0.5 * np.einsum("ni,ij,nj->n", d2, g, d2) - 1j * (U @ W @ v2)
    drift = 1j * ((theta1 - theta2) * theta1 * a_x / (2.0 * tau**4) + (theta1 - theta2) / tau**2 * (U @ A))
    return drift + (p1 + p2) / tau


def gaussian_closed_form(theta1, v1, theta2, v2, tau, a_x=0.0, A_x=None, hd=None) -> complex:
    v1 = np.asarray(v1, float)
    n = v1.size // 2
    A = np.zeros_like(v1) if A_x is None else A_x
    h = _hd(hd, v1)
    pre = np.exp(1j * (theta1 - theta2) * theta1 * a_x / (2.0 * tau**4)) / math.sqrt(np.linalg.det(h.g))
    return complex(pre * (tau * math.pi) ** n * np.exp(Psi2(theta1, v1, theta2, v2, a_x, A, tau, hd) / tau))


class QuadratureBudgetError(ArithmeticError):
    pass


def _tensor_rule_integral(theta1, v1, theta2, v2, tau, a_x, A, h: HermitianData, nodes: int) -> complex:
    """Tensor Gauss-Hermite rule in whitened coordinates around the peak of Re S_c.

    With u = c + E diag(sqrt(tau/e)) y, the Gaussian factor of exp(S_c)
    becomes exp(-|y|^2), which is the Hermite weight; what remains is
    evaluated at the nodes and must be smooth for the rule to converge.
    """
    m = v1.size
    center = 0.5 * (v1 + v2)
    evals, evecs = np.linalg.eigh(h.g)
    scale = np.sqrt(tau / evals)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    rest = np.array(list(product(range(nodes), repeat=m - 1)), dtype=int).reshape(-1, m - 1)
    wrest = np.prod(w[rest], axis=1)
    parts = []
    for i0 in range(nodes):
        idx = np.column_stack([np.full(len(rest), i0), rest])
        Y = x[idx]
        U = center[None, :] + (Y * scale[None, :]) @ evecs.T
        expo = _s_critical_batch(theta1, v1, theta2, v2, U, tau, a_x, A, h) + np.sum(Y * Y, axis=1)
        parts.append(w[i0] * wrest * np.exp(expo))
    allv = np.concatenate(parts) * float(np.prod(scale))
    return complex(math.fsum(allv.real.tolist()), math.fsum(allv.imag.tolist()))


def gaussian_integral_check(theta1: float, v1, theta2: float, v2, tau: float, a_x: float = 0.0, A_x=None,
                            hd: HermitianData | None = None, rtol: float = 1e-11,
                            max_points: int = 8_000_000) -> tuple[complex, complex, float]:
    """Quadrature of the integral of exp(S_c) over R^{2d-2} against its closed form.

    The tensor rule is refined until two successive results agree to ``rtol``.
    Returns (numeric, closed_form, relative error).
    """
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    h = _hd(hd, v1)
    A = np.zeros(v1.size) if A_x is None else np.asarray(A_x, float)
    nodes = 8
    prev = None
    while True:
        if nodes ** v1.size > max_points:
            raise QuadratureBudgetError(f"quadrature budget exceeded at {nodes} nodes per axis")
        total = _tensor_rule_integral(theta1, v1, theta2, v2, tau, a_x, A, h, nodes)
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            break
        prev = total
        nodes += 4
    closed = gaussian_closed_form(theta1, v1, theta2, v2, tau, a_x, A, h)
    return total, closed, abs(total / closed - 1.0)


def leading_symbol_identity(tau: float, d: int) -> tuple[float, float]:
    """Positive fixed point of s = (2 pi)^d s^2 / tau and its residual."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    s = tau / (2.0 * math.pi) ** d
    return s, abs(s - (2.0 * math.pi) ** d * s * s / tau)
