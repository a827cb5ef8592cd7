"""Normal Heisenberg coordinates on the torus tube, built by jet normalisation.

A chart centred at x in X^tau is a holomorphic map z -> zeta(z) into C^d
(the displacement from x in the global coordinate u + i v), of the form

    zeta(z) = L (z + e_0 p(z)),    p(z) = z^T Q z + C[z, z, z],

with L complex linear. Column 0 of L spans C . R(x) and is scaled so that
d theta_0 (R(x)) = 1; the remaining columns are sqrt(2) times an orthonormal
basis of the horizontal space, which makes them unitary for the Hermitian
form induced on the horizontal space. The quadratic shear Q removes the
pluriharmonic degree-two part of phi = rho - tau^2, leaving the normal form

    phi = -2 Im z_0 + c |z_0|^2 + |z'|^2 + (degree >= 3),

and C is an optional holomorphic cubic gauge term, which every normal chart
is free to carry.

The induced chart on X^tau is (theta, w) = (Re z_0, z'), with Im z_0 solved
from phi = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .torus_geometry import (
    BOUNDARY_TOL,
    NonBoundaryError,
    TorusPoint,
    reeb_field,
)

__all__ = [
    "ChartError",
    "FrameDegeneracyError",
    "OutOfRadiusError",
    "NewtonError",
    "PhiJet",
    "HolomorphicFrame",
    "HeisenbergChart",
    "BoundaryDisplacement",
    "FlowDiagnostics",
    "taylor_jet_phi_tau",
    "build_normal_chart",
    "chart_to_manifold",
    "manifold_to_chart",
    "chart_z",
    "volume_density",
    "flow_expansion_diagnostics",
    "theta_velocity",
    "alpha_pullback_at_center",
    "chart_tangent_norm_sq",
    "horizontal_frame",
    "random_unitary",
    "random_cubic_gauge",
]

JET_DEGREE = 4
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


class ChartError(ValueError):
    pass


class FrameDegeneracyError(ChartError):
    pass


class OutOfRadiusError(ChartError):
    pass


class NewtonError(ChartError):
    pass


# ---------------------------------------------------------------------------
# Polynomials in (z, zbar), stored as {exponent tuple of length 2d: coeff}.


def _poly_add(a: dict, b: dict, s: complex = 1.0) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + s * v
    return out


def _poly_mul(a: dict, b: dict, max_deg: int) -> dict:
    out: dict = {}
    for ka, va in a.items():
        da = sum(ka)
        for kb, vb in b.items():
            if da + sum(kb) > max_deg:
                continue
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0.0) + va * vb
    return out


def _poly_conj(a: dict, d: int) -> dict:
    return {k[d:] + k[:d]: np.conj(v) for k, v in a.items()}


def _poly_scale(a: dict, s: complex) -> dict:
    return {k: s * v for k, v in a.items()}


def _monomial(d: int, idx: int, conj: bool = False) -> tuple:
    e = [0] * (2 * d)
    e[idx + (d if conj else 0)] = 1
    return tuple(e)


@dataclass(frozen=True)
class HolomorphicFrame:
    """zeta(z) = L (z + e_0 (z^T Q z + C[z,z,z]))."""

    L: np.ndarray
    Q: np.ndarray
    C: np.ndarray

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @staticmethod
    def linear(L: np.ndarray) -> "HolomorphicFrame":
        d = L.shape[0]
        return HolomorphicFrame(np.asarray(L, complex), np.zeros((d, d), complex),
                                np.zeros((d, d, d), complex))

    def zeta_polys(self) -> list[dict]:
        d = self.dim
        zvars = [{_monomial(d, j): 1.0 + 0j} for j in range(d)]
        shear: dict = {}
        for a, b in product(range(d), repeat=2):
            if self.Q[a, b] != 0:
                shear = _poly_add(shear, _poly_mul(zvars[a], zvars[b], JET_DEGREE), self.Q[a, b])
        for a, b, c in product(range(d), repeat=3):
            if self.C[a, b, c] != 0:
                m = _poly_mul(_poly_mul(zvars[a], zvars[b], JET_DEGREE), zvars[c], JET_DEGREE)
                shear = _poly_add(shear, m, self.C[a, b, c])
        inner = [dict(zvars[j]) for j in range(d)]
        inner[0] = _poly_add(inner[0], shear)
        out = []
        for m in range(d):
            poly: dict = {}
            for j in range(d):
                if self.L[m, j] != 0:
                    poly = _poly_add(poly, inner[j], self.L[m, j])
            out.append(poly)
        return out


@dataclass(frozen=True)
class PhiJet:
    """Taylor coefficients of phi = rho - tau^2 in a holomorphic chart.

    ``coeffs`` maps exponent tuples (a_0..a_{d-1}, b_0..b_{d-1}) of
    z^a zbar^b to complex coefficients, truncated at total degree 4.
    """

    center: TorusPoint
    tau: float
    coeffs: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.center.dim

    def coefficient(self, a, b) -> complex:
        return complex(self.coeffs.get(tuple(a) + tuple(b), 0.0))

    def degree_part(self, k: int) -> dict:
        return {e: c for e, c in self.coeffs.items() if sum(e) == k}

    def evaluate(self, z) -> float:
        z = np.asarray(z, complex)
        zz = np.concatenate([z, np.conj(z)])
        tot = 0j
        for e, c in self.coeffs.items():
            tot += c * np.prod(zz ** np.array(e))
        return float(tot.real)

    def max_imag_asymmetry(self) -> float:
        """How far the coefficients are from conjugate symmetry."""
        d = self.dim
        worst = 0.0
        for e, c in self.coeffs.items():
            partner = self.coeffs.get(e[d:] + e[:d], 0.0)
            worst = max(worst, abs(c - np.conj(partner)))
        return worst


def taylor_jet_phi_tau(x: TorusPoint, frame, tau: float | None = None) -> PhiJet:
    """Jet of phi in the chart defined by ``frame`` (matrix L or HolomorphicFrame).

    On the torus rho = |v|^2 is quadratic, so phi(zeta) = 2 v_x . Im zeta +
    |Im zeta|^2 and the jet is exact up to the truncation degree.
    """
    r = float(np.linalg.norm(x.v))
    if tau is None:
        tau = r
    if abs(r - tau) > BOUNDARY_TOL:
        raise NonBoundaryError(f"center has |v| = {r!r}, expected {tau!r}")
    if not isinstance(frame, HolomorphicFrame):
        frame = HolomorphicFrame.linear(np.asarray(frame, complex))
    d = x.dim
    zetas = frame.zeta_polys()
    phi: dict = {}
    for m in range(d):
        im = _poly_scale(_poly_add(zetas[m], _poly_conj(zetas[m], d), -1.0), -0.5j)
        phi = _poly_add(phi, im, 2.0 * x.v[m])
        phi = _poly_add(phi, _poly_mul(im, im, JET_DEGREE))
    phi = {k: v for k, v in phi.items() if abs(v) > 0.0}
    return PhiJet(center=x, tau=tau, coeffs=phi)


def horizontal_frame(v: np.ndarray) -> np.ndarray:
    """Gram-Schmidt of the standard basis against e = v/|v|; returns d x (d-1)."""
    d = v.size
    e = v / np.linalg.norm(v)
    basis = [e]
    for j in range(d):
        w = np.eye(d)[j].copy()
        for b in basis:
            w -= np.dot(b, w) * b
        n = np.linalg.norm(w)
        if n > 1e-6:
            basis.append(w / n)
        if len(basis) == d:
            break
    if len(basis) != d:
        raise FrameDegeneracyError("could not complete a horizontal orthonormal frame")
    return np.column_stack(basis[1:])


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_cubic_gauge(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    """A symmetric complex cubic tensor, an admissible extra gauge for z_0."""
    c = rng.standard_normal((d, d, d)) + 1j * rng.standard_normal((d, d, d))
    sym = sum(np.transpose(c, p) for p in
              [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6.0
    return scale * sym


@dataclass(frozen=True)
class HeisenbergChart:
    """Normal Heisenberg chart at ``center``; immutable and shareable."""

    center: TorusPoint
    tau: float
    frame: HolomorphicFrame = field(repr=False)
    jet: PhiJet = field(repr=False)
    c: float
    b: np.ndarray
    a: np.ndarray
    normal_form_residual: float
    unitarity_residual: float
    radius: float = 0.2
    order: int = 3

    @property
    def dim(self) -> int:
        return self.center.dim

    @property
    def L(self) -> np.ndarray:
        return self.frame.L


def build_normal_chart(x: TorusPoint, horizontal_unitary=None, cubic_gauge=None,
                       radius: float = 0.2, tau: float | None = None) -> HeisenbergChart:
    """Construct a normal Heisenberg chart at a boundary point.

    ``horizontal_unitary`` rotates the horizontal frame (any unitary gives an
    admissible chart); ``cubic_gauge`` adds a holomorphic cubic to z_0.
    ``radius`` is the chart radius in units of tau, measured in the norm
    |(theta/tau, w)|.
    """
    r = float(np.linalg.norm(x.v))
    if tau is None:
        tau = r
    if abs(r - tau) > BOUNDARY_TOL or tau <= 0:
        raise NonBoundaryError("chart center must lie on X^tau")
    d = x.dim
    e = x.v / tau
    F = horizontal_frame(x.v).astype(complex)
    if horizontal_unitary is not None:
        U = np.asarray(horizontal_unitary, complex)
        if U.shape != (d - 1, d - 1) or not np.allclose(U.conj().T @ U, np.eye(d - 1), atol=1e-12):
            raise FrameDegeneracyError("horizontal_unitary must be a (d-1)x(d-1) unitary")
        F = F @ U
    L = np.column_stack([-e / tau + 0j, math.sqrt(2.0) * F])
    if abs(np.linalg.det(L)) < 1e-14:
        raise FrameDegeneracyError("linear frame is singular")

    jet0 = taylor_jet_phi_tau(x, HolomorphicFrame.linear(L), tau)
    lin0 = jet0.coefficient(_unit(d, 0), [0] * d)
    if abs(lin0 - 1j) > 1e-12:
        raise FrameDegeneracyError(f"linear part is not -2 Im z0 (coefficient {lin0})")

    S = np.zeros((d, d), complex)
    for a_, b_ in product(range(d), repeat=2):
        ex = [0] * d
        ex[a_] += 1
        ex[b_] += 1
        coef = jet0.coefficient(ex, [0] * d)
        S[a_, b_] = 2.0 * coef if a_ == b_ else coef
    Q = 0.5j * S
    C = np.zeros((d, d, d), complex) if cubic_gauge is None else np.asarray(cubic_gauge, complex)
    frame = HolomorphicFrame(L=L, Q=Q, C=C)
    jet = taylor_jet_phi_tau(x, frame, tau)

    c = jet.coefficient(_unit(d, 0), _unit(d, 0)).real
    b = np.array([2j * jet.coefficient(_unit(d, 0), _unit(d, j)) for j in range(1, d)])
    a = np.array([1j * jet.coefficient(_two(d, 0, j), [0] * d) for j in range(d)])

    expected = {
        _unit(d, 0) + (0,) * d: 1j,
        (0,) * d + _unit(d, 0): -1j,
        _unit(d, 0) + _unit(d, 0): c,
    }
    for j in range(1, d):
        expected[_unit(d, j) + _unit(d, j)] = 1.0
    resid = 0.0
    unit_resid = 0.0
    for ex, coef in jet.coeffs.items():
        if sum(ex) > 2:
            continue
        target = expected.get(ex, 0.0)
        resid = max(resid, abs(coef - target))
    for j, k in product(range(1, d), repeat=2):
        h = jet.coefficient(_unit(d, j), _unit(d, k))
        unit_resid = max(unit_resid, abs(h - (1.0 if j == k else 0.0)))
    return HeisenbergChart(center=x, tau=tau, frame=frame, jet=jet, c=float(c), b=b, a=a,
                           normal_form_residual=float(resid),
                           unitarity_residual=float(unit_resid), radius=radius)


def _unit(d: int, j: int) -> tuple:
    e = [0] * d
    e[j] = 1
    return tuple(e)


def _two(d: int, i: int, j: int) -> list:
    e = [0] * d
    e[i] += 1
    e[j] += 1
    return e


# ---------------------------------------------------------------------------
# Chart maps (vectorised over leading axis).


def _p_and_grad(frame: HolomorphicFrame, z: np.ndarray):
    Qz = z @ frame.Q.T
    p = np.einsum("ni,ni->n", z, Qz)
    grad = 2.0 * Qz
    if np.any(frame.C):
        Czz = np.einsum("abc,nb,nc->na", frame.C, z, z)
        p = p + np.einsum("na,na->n", z, Czz)
        grad = grad + 3.0 * Czz
    return p, grad


def _zeta(frame: HolomorphicFrame, z: np.ndarray) -> np.ndarray:
    p, _ = _p_and_grad(frame, z)
    w = z.copy()
    w[:, 0] = w[:, 0] + p
    return w @ frame.L.T


def _dzeta(frame: HolomorphicFrame, z: np.ndarray) -> np.ndarray:
    _, grad = _p_and_grad(frame, z)
    n, d = z.shape
    J = np.broadcast_to(np.eye(d, dtype=complex), (n, d, d)).copy()
    J[:, 0, :] += grad
    return np.einsum("mj,njk->nmk", frame.L, J)


def _phi(chart: HeisenbergChart, zeta: np.ndarray) -> np.ndarray:
    im = zeta.imag
    return 2.0 * im @ chart.center.v + np.einsum("ni,ni->n", im, im)


def _check_radius(chart: HeisenbergChart, theta: np.ndarray, wr: np.ndarray) -> None:
    rad = np.sqrt((theta / chart.tau) ** 2 + np.sum(wr * wr, axis=1))
    lim = chart.radius * chart.tau
    if np.any(rad > lim * (1 + 1e-12)):
        raise OutOfRadiusError(f"displacement norm {float(rad.max()):.4g} exceeds chart radius {lim:.4g}")


def _real_to_complex(wr: np.ndarray) -> np.ndarray:
    return wr[:, 0::2] + 1j * wr[:, 1::2]


def _complex_to_real(wc: np.ndarray) -> np.ndarray:
    out = np.empty((wc.shape[0], 2 * wc.shape[1]))
    out[:, 0::2] = wc.real
    out[:, 1::2] = wc.imag
    return out


def _solve_eta(chart: HeisenbergChart, theta: np.ndarray, wc: np.ndarray) -> np.ndarray:
    """Solve phi(zeta(theta + i eta, w)) = 0 for eta, batched Newton."""
    tau = chart.tau
    eta = theta**2 / (4.0 * tau**2) + 0.5 * np.sum(np.abs(wc) ** 2, axis=1)
    vx = chart.center.v
    for _ in range(NEWTON_MAXIT):
        z = np.column_stack([theta + 1j * eta, wc])
        zeta = _zeta(chart.frame, z)
        F = _phi(chart, zeta)
        D0 = _dzeta(chart.frame, z)[:, :, 0]
        dF = 2.0 * np.einsum("ni,ni->n", vx[None, :] + zeta.imag, D0.real)
        step = F / dF
        eta = eta - step
        if np.all(np.abs(F) <= 0.1 * NEWTON_TOL) or np.all(np.abs(step) <= 1e-17):
            break
    z = np.column_stack([theta + 1j * eta, wc])
    F = _phi(chart, _zeta(chart.frame, z))
    if not np.all(np.abs(F) <= NEWTON_TOL):
        raise NewtonError(f"eta solve residual {float(np.max(np.abs(F))):.3e}; chart radius too large")
    return eta


def chart_points(chart: HeisenbergChart, theta, w, scale: float = 1.0):
    """Batched chart_to_manifold returning unwrapped displacements and z.

    Returns (du, dv, z) with du, dv of shape (n, d): the boundary point is
    u_x + du (mod 1), v_x + dv.
    """
    theta = np.atleast_1d(np.asarray(theta, float)) / math.sqrt(scale)
    wr = np.atleast_2d(np.asarray(w, float)) / math.sqrt(scale)
    if wr.shape[1] != 2 * (chart.dim - 1):
        raise ChartError("horizontal displacement must have 2d-2 real components")
    _check_radius(chart, theta, wr)
    wc = _real_to_complex(wr)
    eta = _solve_eta(chart, theta, wc)
    z = np.column_stack([theta + 1j * eta, wc])
    zeta = _zeta(chart.frame, z)
    return zeta.real, zeta.imag, z


@dataclass(frozen=True)
class BoundaryDisplacement:
    """Chart coordinates (theta, w) of a boundary point, w in R^{2d-2}."""

    theta: float
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if not (math.isfinite(self.theta) and np.isfinite(w).all()):
            raise ValueError("displacement components must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "w", w)

    def complex_w(self) -> np.ndarray:
        return self.w[0::2] + 1j * self.w[1::2]


def chart_to_manifold(chart: HeisenbergChart, disp: BoundaryDisplacement, scale: float = 1.0) -> TorusPoint:
    """Boundary point with chart coordinates (theta, w)/sqrt(scale)."""
    if scale < 1.0:
        raise ChartError("scale must be >= 1")
    du, dv, _ = chart_points(chart, [disp.theta], [disp.w], scale)
    return TorusPoint(chart.center.u + du[0], chart.center.v + dv[0])


def _wrap(du: np.ndarray) -> np.ndarray:
    return (du + 0.5) % 1.0 - 0.5


def chart_z(chart: HeisenbergChart, p: TorusPoint) -> np.ndarray:
    """Full holomorphic chart coordinates z of a point near the center."""
    target = _wrap(p.u - chart.center.u) + 1j * (p.v - chart.center.v)
    return _invert_zeta(chart, target[None, :])[0]


def _invert_zeta(chart: HeisenbergChart, target: np.ndarray) -> np.ndarray:
    z = np.linalg.solve(chart.L, target.T).T
    for _ in range(NEWTON_MAXIT):
        r = _zeta(chart.frame, z) - target
        D = _dzeta(chart.frame, z)
        step = np.linalg.solve(D, r[:, :, None])[:, :, 0]
        z = z - step
        if np.max(np.abs(step)) <= 1e-16:
            break
    r = _zeta(chart.frame, z) - target
    if np.max(np.abs(r)) > 1e-13:
        raise NewtonError(f"chart inversion residual {float(np.max(np.abs(r))):.3e}")
    return z


def manifold_to_chart(chart: HeisenbergChart, p: TorusPoint) -> BoundaryDisplacement:
    z = chart_z(chart, p)
    theta = float(z[0].real)
    wr = _complex_to_real(z[None, 1:])
    _check_radius(chart, np.array([theta]), wr)
    return BoundaryDisplacement(theta, wr[0])


def _embedding_jacobian(chart: HeisenbergChart, z: np.ndarray) -> np.ndarray:
    """d(Re zeta, Im zeta)/d(theta, Re w_1, Im w_1, ...) at boundary points z."""
    n, d = z.shape
    D = _dzeta(chart.frame, z)
    zeta = _zeta(chart.frame, z)
    V = chart.center.v[None, :] + zeta.imag
    B = D[:, :, 0]
    dirs = [B]
    for j in range(1, d):
        dirs.append(D[:, :, j])
        dirs.append(1j * D[:, :, j])
    denom = np.einsum("ni,ni->n", V, B.real)
    cols = []
    for A in dirs:
        deta = -np.einsum("ni,ni->n", V, A.imag) / denom
        dz = A + 1j * deta[:, None] * B
        cols.append(np.concatenate([dz.real, dz.imag], axis=1))
    return np.stack(cols, axis=2)


def volume_density_batch(chart: HeisenbergChart, theta, w) -> np.ndarray:
    _, _, z = chart_points(chart, theta, w)
    J = _embedding_jacobian(chart, z)
    G = np.einsum("nki,nkj->nij", J, J)
    return np.sqrt(np.linalg.det(G))


def volume_density(chart: HeisenbergChart, disp: BoundaryDisplacement) -> float:
    """Density of the induced surface measure of X^tau in (theta, w) coordinates."""
    return float(volume_density_batch(chart, [disp.theta], [disp.w])[0])


def theta_velocity(chart: HeisenbergChart, theta, w) -> np.ndarray:
    """Rate of change of theta along upsilon_sqrt(rho) at chart points."""
    _, dv, z = chart_points(chart, theta, w)
    vel = (chart.center.v[None, :] + dv) / chart.tau
    D = _dzeta(chart.frame, z)
    dz = np.linalg.solve(D, vel.astype(complex)[:, :, None])[:, :, 0]
    return dz[:, 0].real


@dataclass(frozen=True)
class FlowDiagnostics:
    a_x: float
    A_x: np.ndarray
    fit_residual: float
    condition: float
    samples: int


def _monomials(X: np.ndarray, max_deg: int) -> tuple[np.ndarray, list]:
    n, k = X.shape
    cols = [np.ones(n)]
    labels = [()]
    for deg in range(1, max_deg + 1):
        for combo in _combos(k, deg):
            cols.append(np.prod(X[:, list(combo)], axis=1))
            labels.append(combo)
    return np.column_stack(cols), labels


def _combos(k: int, deg: int):
    if deg == 0:
        yield ()
        return
    def rec(start, left):
        if left == 0:
            yield ()
            return
        for i in range(start, k):
            for rest in rec(i, left - 1):
                yield (i,) + rest
    yield from rec(0, deg)


def flow_expansion_diagnostics(chart: HeisenbergChart, fit_radius: float | None = None,
                               levels: int = 5, max_degree: int = 4,
                               perturbation=None) -> FlowDiagnostics:
    """Least-squares estimate of (a_x, A_x) from the theta-velocity of the flow.

    The sampled quantity is upsilon_sqrt(rho)(theta) + tau, modelled as
    a_x theta / (2 tau^2) + <A_x, w> + higher monomials. ``perturbation``
    = (a, A) adds a manufactured linear term to the samples.
    """
    d = chart.dim
    tau = chart.tau
    k = 2 * d - 1
    if fit_radius is None:
        fit_radius = 0.05 * tau
    ticks = np.linspace(-1.0, 1.0, levels)
    grid = np.array(list(product(ticks, repeat=k)))
    grid[:, 0] *= tau
    grid *= fit_radius / math.sqrt(k)
    theta, w = grid[:, 0], grid[:, 1:]
    y = theta_velocity(chart, theta, w) + tau
    if perturbation is not None:
        pa, pA = perturbation
        y = y + pa * theta / (2.0 * tau**2) + w @ np.asarray(pA, float)
    scaled = grid / fit_radius
    scaled[:, 0] /= tau
    X, labels = _monomials(scaled, max_degree)
    cond = float(np.linalg.cond(X))
    if not math.isfinite(cond) or cond > 1e10:
        raise ChartError(f"flow fit design is ill-conditioned (cond={cond:.3e})")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    lin = {lab[0]: coef[i] / fit_radius for i, lab in enumerate(labels) if len(lab) == 1}
    a_x = 2.0 * tau * lin[0]
    A_x = np.array([lin[j] for j in range(1, k)])
    return FlowDiagnostics(a_x=float(a_x), A_x=A_x, fit_residual=resid, condition=cond,
                           samples=int(len(y)))


def alpha_pullback_at_center(chart: HeisenbergChart) -> np.ndarray:
    """alpha_x evaluated on d/d theta_0, d/d eta_0, d/d Re z_j, d/d Im z_j."""
    L = chart.L
    d = chart.dim
    vals = []
    for j in range(d):
        for col in (L[:, j], 1j * L[:, j]):
            vals.append(-float(np.dot(chart.center.v, col.real)))
    return np.array(vals)


def reeb_frame_error(chart: HeisenbergChart) -> float:
    """|d/d theta_0 - R(x)| in the (u, v) frame."""
    R = reeb_field(chart.center)
    col = chart.L[:, 0]
    return float(np.max(np.abs(np.concatenate([col.real - R.du, col.imag - R.dv]))))


def chart_tangent_norm_sq(chart: HeisenbergChart, w0: complex, u) -> float:
    """Half the Euclidean norm squared of the tangent vector with chart components (w0, u)."""
    vec = chart.L @ np.concatenate([[w0], np.asarray(u, complex)])
    return 0.5 * float(np.sum(vec.real**2 + vec.imag**2))


def patch_volume_check(chart: HeisenbergChart, width: float | None = None, nodes: int = 40) -> tuple[float, float]:
    """Integrate a narrow ambient Gaussian over X^tau two ways (d = 2 only).

    Returns (chart integral using volume_density, direct integral in
    (u, fibre-angle) coordinates where the measure is tau du dphi).
    """
    if chart.dim != 2:
        raise ChartError("patch_volume_check is implemented for d = 2")
    tau = chart.tau
    if width is None:
        width = 0.01 * tau
    x = chart.center
    gl, gw = np.polynomial.legendre.leggauss(nodes)

    def bump(du, dv):
        return np.exp(-(np.sum(du * du, axis=1) + np.sum(dv * dv, axis=1)) / (2.0 * width**2))

    t_th, t_w = 8.0 * width * tau, 8.0 * width / math.sqrt(2.0)
    if math.hypot(t_th / tau, math.sqrt(2.0) * t_w) > chart.radius * tau:
        raise OutOfRadiusError("Gaussian width too large for the chart patch")
    grid = np.array(list(product(range(nodes), repeat=3)))
    theta = t_th * gl[grid[:, 0]]
    w = np.column_stack([t_w * gl[grid[:, 1]], t_w * gl[grid[:, 2]]])
    wts = t_th * t_w * t_w * gw[grid[:, 0]] * gw[grid[:, 1]] * gw[grid[:, 2]]
    du, dv, _ = chart_points(chart, theta, w)
    dens = volume_density_batch(chart, theta, w)
    chart_val = math.fsum(wts * bump(du, dv) * dens)

    phi0 = math.atan2(x.v[1], x.v[0])
    reach = 7.0 * width
    du = np.column_stack([reach * gl[grid[:, 0]], reach * gl[grid[:, 1]]])
    ang = phi0 + (reach / tau) * gl[grid[:, 2]]
    dv = tau * np.column_stack([np.cos(ang), np.sin(ang)]) - x.v[None, :]
    wts = reach * reach * (reach / tau) * gw[grid[:, 0]] * gw[grid[:, 1]] * gw[grid[:, 2]] * tau
    direct_val = math.fsum(wts * bump(du, dv))
    return chart_val, direct_val
