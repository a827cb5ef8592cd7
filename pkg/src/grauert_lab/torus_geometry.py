"""Flat-torus Grauert tube: points, forms, vector fields and flows.

The complexified torus C^d / Z^d is written u + i v with u in R^d mod 1 and
v in R^d. Everything is expressed in the global (u, v) frame: a tangent
vector is a pair (du, dv) and so is a covector. In this frame

* rho = |v|^2 and the tube boundary is X^tau = {|v| = tau};
* alpha = -sum v_j du_j;
* Omega = sum du_j ^ dv_j and the Kahler metric is Euclidean;
* the complex structure sends d/du_j to d/dv_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ZeroFiberError",
    "NonBoundaryError",
    "TorusPoint",
    "TangentVector",
    "Covector",
    "GeometryReport",
    "boundary_point",
    "random_boundary_points",
    "rho",
    "sqrt_rho",
    "contact_form_alpha",
    "d_rho",
    "d_log_inv_sqrt_rho",
    "omega",
    "interior_omega",
    "kahler_metric",
    "complex_structure",
    "hamiltonian_rho_field",
    "reeb_field",
    "hamiltonian_sqrt_rho_field",
    "euler_field",
    "geodesic_flow",
    "geodesic_flow_literal",
    "monge_ampere_matrix",
    "toeplitz_symbol",
    "boundary_volume",
    "boundary_volume_quadrature",
    "geometry_report",
    "flow_alpha_pullback_error",
    "flow_surface_jacobian",
]

ZERO_FIBER = 1e-14
BOUNDARY_TOL = 1e-12


class ZeroFiberError(ValueError):
    """Raised where |v| is too small for the Reeb field and friends to exist."""


class NonBoundaryError(ValueError):
    """Raised when an operation needs a point of X^tau and gets something else."""


def _vec(x) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    if not np.isfinite(a).all():
        raise ValueError("components must be finite")
    return a


@dataclass(frozen=True)
class TorusPoint:
    """A point u + i v; ``u`` is reduced into [0, 1)^d on construction."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = _vec(self.u)
        v = _vec(self.v)
        if u.shape != v.shape:
            raise ValueError("u and v must have the same dimension")
        u = np.mod(u, 1.0)
        u[u >= 1.0] = 0.0
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    @property
    def rho(self) -> float:
        return rho(self)

    @property
    def sqrt_rho(self) -> float:
        return sqrt_rho(self)

    def z(self) -> np.ndarray:
        return self.u + 1j * self.v


@dataclass(frozen=True)
class TangentVector:
    du: np.ndarray
    dv: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "du", _vec(self.du))
        object.__setattr__(self, "dv", _vec(self.dv))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.du, self.dv])

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.du + other.du, self.dv + other.dv)

    def scale(self, s: float) -> "TangentVector":
        return TangentVector(s * self.du, s * self.dv)


@dataclass(frozen=True)
class Covector:
    du: np.ndarray
    dv: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "du", _vec(self.du))
        object.__setattr__(self, "dv", _vec(self.dv))

    def __call__(self, X: TangentVector) -> float:
        return float(np.dot(self.du, X.du) + np.dot(self.dv, X.dv))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.du, self.dv])


@dataclass
class GeometryReport:
    """Named checks mapped to (computed, expected, abs_error).

    ``diagnostics`` holds informational numbers that are not pass/fail
    checks, such as the rho drift of the rejected literal flow reading.
    """

    checks: dict
    diagnostics: dict = field(default_factory=dict)

    def add(self, name: str, computed: float, expected: float) -> None:
        self.checks[name] = (float(computed), float(expected), float(abs(computed - expected)))

    def max_error(self) -> float:
        return max((c[2] for c in self.checks.values()), default=0.0)

    def all_finite(self) -> bool:
        return all(math.isfinite(c[2]) for c in self.checks.values())


def _require_fiber(p: TorusPoint) -> float:
    n = float(np.linalg.norm(p.v))
    if n < ZERO_FIBER:
        raise ZeroFiberError(f"|v| = {n:.3e} is below {ZERO_FIBER:g}; field undefined on the zero section")
    return n


def _require_boundary(p: TorusPoint, tau: float | None = None) -> float:
    n = _require_fiber(p)
    if tau is not None and abs(n - tau) > BOUNDARY_TOL:
        raise NonBoundaryError(f"|v| = {n!r} differs from tau = {tau!r}")
    return n


def boundary_point(u, direction, tau: float) -> TorusPoint:
    """Point of X^tau with base ``u`` and fiber pointing along ``direction``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    d = _vec(direction)
    n = np.linalg.norm(d)
    if n < ZERO_FIBER:
        raise ZeroFiberError("fiber direction must be nonzero")
    return TorusPoint(u, tau * d / n)


def random_boundary_points(rng: np.random.Generator, n: int, d: int, tau: float) -> list[TorusPoint]:
    u = rng.random((n, d))
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return [TorusPoint(u[i], tau * g[i]) for i in range(n)]


def rho(p: TorusPoint) -> float:
    return float(np.dot(p.v, p.v))


def sqrt_rho(p: TorusPoint) -> float:
    return float(np.linalg.norm(p.v))


def contact_form_alpha(p: TorusPoint) -> Covector:
    return Covector(-p.v, np.zeros_like(p.v))


def d_rho(p: TorusPoint) -> Covector:
    return Covector(np.zeros_like(p.v), 2.0 * p.v)


def d_log_inv_sqrt_rho(p: TorusPoint) -> Covector:
    """d ln(rho^(-1/2)) = -(v . dv) / rho."""
    r = rho(p)
    if r < ZERO_FIBER**2:
        raise ZeroFiberError("rho vanishes")
    return Covector(np.zeros_like(p.v), -p.v / r)


def omega(X: TangentVector, Y: TangentVector) -> float:
    """Omega(X, Y) with Omega = sum du_j ^ dv_j (also d alpha on the torus)."""
    return float(np.dot(X.du, Y.dv) - np.dot(X.dv, Y.du))


def interior_omega(X: TangentVector) -> Covector:
    """iota(X) Omega, i.e. the covector Y -> Omega(X, Y)."""
    return Covector(-X.dv, X.du)


def complex_structure(X: TangentVector) -> TangentVector:
    """J d/du = d/dv, J d/dv = -d/du."""
    return TangentVector(-X.dv, X.du)


def kahler_metric(X: TangentVector, Y: TangentVector) -> float:
    """Omega(X, J Y), which is the Euclidean product in (u, v)."""
    return omega(X, complex_structure(Y))


def hamiltonian_rho_field(p: TorusPoint) -> TangentVector:
    """upsilon_rho = 2 sum v_j d/du_j."""
    return TangentVector(2.0 * p.v, np.zeros_like(p.v))


def reeb_field(p: TorusPoint) -> TangentVector:
    n = _require_fiber(p)
    return TangentVector(-p.v / n**2, np.zeros_like(p.v))


def hamiltonian_sqrt_rho_field(p: TorusPoint) -> TangentVector:
    n = _require_fiber(p)
    return TangentVector(p.v / n, np.zeros_like(p.v))


def euler_field(p: TorusPoint) -> TangentVector:
    """Xi = v . d/dv, which satisfies iota(Xi) Omega = alpha."""
    return TangentVector(np.zeros_like(p.v), p.v.copy())


def geodesic_flow(p: TorusPoint, t: float) -> TorusPoint:
    """Flow of upsilon_sqrt(rho): u -> u + t v/|v| with v fixed."""
    n = _require_fiber(p)
    return TorusPoint(p.u + t * p.v / n, p.v)


def geodesic_flow_literal(p: TorusPoint, t: float) -> TorusPoint:
    """The alternative reading u -> u + t v/|v|, v -> v + t v.

    Kept only so the geometry report can show that it fails to conserve rho.
    """
    n = _require_fiber(p)
    return TorusPoint(p.u + t * p.v / n, p.v + t * p.v)


def monge_ampere_matrix(p: TorusPoint) -> np.ndarray:
    """Hermitian coefficient matrix of i d dbar sqrt(rho) in dz_j ^ dzbar_k.

    Equal to (|v|^2 I - v v^T) / (2 rho^(3/2)); rank d-1 with kernel v.
    """
    n = _require_fiber(p)
    v = p.v
    m = (n**2 * np.eye(v.size) - np.outer(v, v)) / (2.0 * n**3)
    return m.astype(complex)


def toeplitz_symbol(p: TorusPoint, r: float, tau: float | None = None, h: float = 1e-3) -> float:
    """Principal symbol of D = i upsilon_sqrt(rho) at r alpha.

    Follows the derivative recipe e^{i r <v,u>} (i upsilon) e^{-i r <v,u>},
    differentiating the exponential along upsilon_sqrt(rho) with a fourth
    order central difference rather than using the closed form r |v|.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    n = _require_boundary(p, tau)
    direction = p.v / n
    v = p.v

    def f(s: float) -> complex:
        uu = p.u + s * direction
        return np.exp(-1j * r * float(np.dot(v, uu)))

    hh = h / max(1.0, r * n)
    deriv = (-f(2 * hh) + 8 * f(hh) - 8 * f(-hh) + f(-2 * hh)) / (12 * hh)
    val = np.exp(1j * r * float(np.dot(v, p.u))) * 1j * deriv
    return float(val.real)


def boundary_volume(tau: float, d: int) -> float:
    """Closed form Vol(X^tau) = |S^{d-1}| tau^{d-1} for the unit-volume base."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2) * tau ** (d - 1)


def boundary_volume_quadrature(tau: float, d: int, n: int = 64) -> float:
    """Vol(X^tau) by integrating the wedge density iota(grad sqrt rho) vol.

    On the torus the density is du_1...du_d times the induced measure on the
    fiber sphere. The base integral is exact (volume 1); the sphere part is
    integrated in hyperspherical angles with Gauss-Legendre nodes.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    total = 2.0 * math.pi * tau  # last angle, radius tau
    x, wts = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * math.pi * (x + 1.0)
    for k in range(1, d - 1):
        total *= tau * 0.5 * math.pi * float(np.sum(wts * np.sin(theta) ** k))
    return total


def geometry_report(points: list[TorusPoint], tau: float, r_values=(0.5, 1.0, 2.0),
                    flow_samples: int = 100) -> GeometryReport:
    """Evaluate the torus identities at the given boundary points.

    Each check records the worst absolute error across points. The
    finite-difference flow checks are costlier and run on the first
    ``flow_samples`` points only.
    """
    worst: dict[str, tuple[float, float, float]] = {}

    def note(name, comp, exp):
        err = abs(comp - exp)
        if name not in worst or err > worst[name][2] or not math.isfinite(err):
            worst[name] = (float(comp), float(exp), float(err))

    drift_fixed = 0.0
    drift_literal = 0.0
    for idx, p in enumerate(points):
        a = contact_form_alpha(p)
        R = reeb_field(p)
        note("alpha(R)=1", a(R), 1.0)
        note("alpha(v_rho)=-2rho", a(hamiltonian_rho_field(p)), -2.0 * rho(p))
        Y = hamiltonian_sqrt_rho_field(p)
        note("|v_sqrt_rho|=1", math.sqrt(kahler_metric(Y, Y)), 1.0)
        note("v_sqrt_rho+sqrt_rho*R=0",
             float(np.max(np.abs((Y + R.scale(sqrt_rho(p))).as_array()))), 0.0)
        d = p.dim
        xi = euler_field(p)
        dl = d_log_inv_sqrt_rho(p)
        # contraction with Omega on the whole (u, v) basis at once
        note("iota(Xi)Omega=alpha",
             float(np.max(np.abs(interior_omega(xi).as_array() - a.as_array()))), 0.0)
        note("iota(R)dalpha=dln(rho^-1/2)",
             float(np.max(np.abs(interior_omega(R).as_array() - dl.as_array()))), 0.0)
        note("Xi(rho)=2rho", d_rho(p)(xi), 2.0 * rho(p))
        note("|Xi|^2=rho", kahler_metric(xi, xi), rho(p))
        m = monge_ampere_matrix(p)
        ev = np.linalg.eigvalsh(m)
        note("monge_ampere_rank", float(np.sum(ev > 1e-10 * np.max(ev))), float(d - 1))
        note("monge_ampere_kernel", float(np.max(np.abs(m @ p.v))), 0.0)
        note("monge_ampere_min_positive_eig>0", float(ev[1] > 0), 1.0)
        for r in r_values:
            note("toeplitz_symbol=r*tau", toeplitz_symbol(p, r, tau), r * tau)
        q = geodesic_flow(p, 0.37)
        note("flow_preserves_rho", rho(q), rho(p))
        q2 = geodesic_flow(geodesic_flow(p, 0.21), 0.16)
        du = (q2.u - q.u + 0.5) % 1.0 - 0.5
        note("flow_group_law", float(np.max(np.abs(du))), 0.0)
        if idx < flow_samples:
            note("flow_pullback_alpha", flow_alpha_pullback_error(p, 0.37), 0.0)
            note("flow_surface_jacobian", flow_surface_jacobian(p, 0.37), 1.0)
        drift_fixed = max(drift_fixed, abs(rho(q) - rho(p)))
        drift_literal = max(drift_literal, abs(rho(geodesic_flow_literal(p, 0.37)) - rho(p)))
    return GeometryReport(dict(worst), {
        "rho_drift_v_fixed(t=0.37)": drift_fixed,
        "rho_drift_literal_plus_tv(t=0.37)": drift_literal,
    })


def _unwrapped_flow(u: np.ndarray, v: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    return u + t * v / np.linalg.norm(v), v


def flow_alpha_pullback_error(p: TorusPoint, t: float, h: float = 1e-5) -> float:
    """max_X |(Gamma_t^* alpha)(X) - alpha(X)| over the (u, v) basis.

    The differential of the flow is taken by central differences, so this is
    a finite-difference Lie-derivative check rather than an identity.
    """
    _require_fiber(p)
    d = p.dim
    q_u, q_v = _unwrapped_flow(p.u, p.v, t)
    worst = 0.0
    for j in range(2 * d):
        e = np.zeros(2 * d)
        e[j] = 1.0
        up, vp = _unwrapped_flow(p.u + h * e[:d], p.v + h * e[d:], t)
        um, vm = _unwrapped_flow(p.u - h * e[:d], p.v - h * e[d:], t)
        push = TangentVector((up - um) / (2 * h), (vp - vm) / (2 * h))
        lhs = contact_form_alpha(TorusPoint(q_u, q_v))(push)
        rhs = contact_form_alpha(p)(TangentVector(e[:d], e[d:]))
        worst = max(worst, abs(lhs - rhs))
    return worst


def flow_surface_jacobian(p: TorusPoint, t: float, h: float = 1e-5) -> float:
    """Surface-measure Jacobian of Gamma_t restricted to X^tau at p.

    Uses an orthonormal tangent frame of X^tau at p (all du directions plus
    the sphere directions in v) and the Gram determinant of its image.
    """
    n = _require_fiber(p)
    d = p.dim
    e_n = p.v / n
    q, _ = np.linalg.qr(np.column_stack([e_n, np.eye(d)]))
    sphere_dirs = q[:, 1:d]
    frame = [np.concatenate([np.eye(d)[j], np.zeros(d)]) for j in range(d)]
    frame += [np.concatenate([np.zeros(d), sphere_dirs[:, j]]) for j in range(d - 1)]
    cols = []
    for e in frame:
        up, vp = _unwrapped_flow(p.u + h * e[:d], p.v + h * e[d:], t)
        um, vm = _unwrapped_flow(p.u - h * e[:d], p.v - h * e[d:], t)
        cols.append(np.concatenate([up - um, vp - vm]) / (2 * h))
    J = np.column_stack(cols)
    return float(math.sqrt(np.linalg.det(J.T @ J)))
