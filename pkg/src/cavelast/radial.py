"""Radially symmetric reduction on the punctured disk.

For y(x) = r(|x|) x/|x| the principal stretches are r'(R) and r(R)/R, so the
energy collapses to a 1-D integral plus the phi-perimeter of the cavity
circle. The solver below minimizes over monotone knot profiles and serves as
semi-analytic ground truth for the 2-D code, including the traction balance
on the cavity wall.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from .exceptions import DomainError, InfeasibleEnergyError
from .geometry import DeformationField, Mesh
from .material import BulkDensity, SurfaceDensity

__all__ = [
    "RadialProfile", "anisotropic_circle_perimeter", "radial_energy",
    "radial_energy_breakdown", "solve_radial", "BvpReport",
    "bvp_boundary_check", "sweep_lambda", "sweep_to_csv", "radial_lift",
]


@dataclass
class RadialProfile:
    """Deformed radius r at increasing knots, r(R_out) = lam * R_out."""

    knots: np.ndarray
    values: np.ndarray
    lam: float
    status: str = "direct"
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.knots.ndim != 1 or self.knots.shape != self.values.shape:
            raise ValueError("knots and values must be 1-D arrays of equal length")
        if self.knots[0] <= 0.0 or np.any(np.diff(self.knots) <= 0.0):
            raise ValueError("knots must be strictly increasing and positive")
        if self.values[0] <= 0.0 or np.any(np.diff(self.values) <= 0.0):
            raise ValueError("values must be strictly increasing and positive")
        top = self.lam * self.knots[-1]
        if abs(self.values[-1] - top) > 1e-9 * max(1.0, abs(top)):
            raise ValueError("values[-1] must equal lam * knots[-1]")
        self._interp = PchipInterpolator(self.knots, self.values)

    def r(self, R):
        return self._interp(R)

    def dr(self, R):
        return self._interp.derivative()(R)

    def det(self, R):
        R = np.asarray(R, dtype=float)
        return self.dr(R) * self.r(R) / R

    @property
    def rho(self) -> float:
        return float(self.knots[0])

    @property
    def cavity_radius(self) -> float:
        return float(self.values[0])


def _phi_circle_integral(phi: SurfaceDensity) -> float:
    """K = integral of phi(cos t, sin t) over the full circle."""

    def f(t):
        return float(phi.value(np.array([[np.cos(t), np.sin(t)]]))[0])

    val, _ = quad(f, 0.0, 2.0 * np.pi, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(val)


def anisotropic_circle_perimeter(c: float, phi: SurfaceDensity) -> float:
    """phi-perimeter of a circle of radius c (linear in c by homogeneity)."""
    if c < 0.0:
        raise ValueError("radius must be nonnegative")
    if c == 0.0:
        return 0.0
    return c * _phi_circle_integral(phi)


def _diag_energy(v1, v2, density: BulkDensity):
    F = np.zeros((np.broadcast(v1, v2).size, 2, 2))
    F[:, 0, 0] = np.ravel(v1)
    F[:, 1, 1] = np.ravel(v2)
    return density.energy(F)


def radial_energy_breakdown(profile: RadialProfile, density: BulkDensity,
                            phi: SurfaceDensity):
    """(bulk, surface) by adaptive quadrature with breakpoints at the knots."""

    def f(R):
        v1 = float(profile.dr(R))
        v2 = float(profile.r(R)) / R
        if v1 <= 0.0 or v2 <= 0.0:
            raise InfeasibleEnergyError(f"non-positive stretch at R = {R:.6g}")
        return 2.0 * np.pi * R * float(_diag_energy(v1, v2, density)[0])

    pts = profile.knots[1:-1].tolist()
    bulk, _ = quad(f, profile.knots[0], profile.knots[-1], points=pts,
                   limit=max(200, 2 * len(profile.knots)),
                   epsabs=1e-10, epsrel=1e-10)
    surface = anisotropic_circle_perimeter(profile.cavity_radius, phi)
    return float(bulk), float(surface)


def radial_energy(profile: RadialProfile, density: BulkDensity,
                  phi: SurfaceDensity) -> float:
    bulk, surface = radial_energy_breakdown(profile, density, phi)
    return bulk + surface


# ---------------------------------------------------------------------------
# 1-D solver (fixed Gauss-Legendre mesh for the iteration loop)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _pl_quadrature(knots):
    mid = 0.5 * (knots[1:] + knots[:-1])
    half = 0.5 * np.diff(knots)
    X = mid[:, None] + half[:, None] * _GL_NODES[None, :]   # (M, 8)
    W = half[:, None] * _GL_WEIGHTS[None, :]
    return X, W


def _pl_energy(knots, values, density: BulkDensity, K: float):
    """Quadrature energy of the piecewise-linear profile; None if infeasible.

    Linear trial profiles between knots make this a smooth function of the
    knot values, which is what the solver differentiates. The returned
    RadialProfile swaps in the monotone cubic interpolant afterwards; the
    two agree to the interpolation error of the grid.
    """
    slopes = np.diff(values) / np.diff(knots)
    if slopes.min() <= 0.0 or values[0] <= 0.0:
        return None
    X, W = _pl_quadrature(knots)
    r = values[:-1, None] + slopes[:, None] * (X - knots[:-1, None])
    dens = _diag_energy(np.broadcast_to(slopes[:, None], X.shape), r / X,
                        density).reshape(X.shape)
    return float(np.sum(W * 2.0 * np.pi * X * dens)) + float(values[0]) * K


def _pl_hessian_banded(knots, values, density: BulkDensity):
    """Tridiagonal Hessian of _pl_energy in the (ab) banded layout.

    Each interval couples only its two endpoint values, so the Hessian over
    the free values v_0..v_{M-1} is tridiagonal; rows are assembled from the
    per-interval 2x2 blocks with the second derivatives of
    W(diag(v1, v2)) = mu/2 (v1^2+v2^2) + a (v1 v2)^2 - b log(v1 v2).
    """
    mu, a, b = density.mu, density.a, density.b
    dR = np.diff(knots)
    slopes = np.diff(values) / dR
    X, W = _pl_quadrature(knots)
    t = (X - knots[:-1, None]) / dR[:, None]
    v1 = np.broadcast_to(slopes[:, None], X.shape)
    v2 = (values[:-1, None] * (1.0 - t) + values[1:, None] * t) / X
    W11 = mu + 2.0 * a * v2 ** 2 + b / v1 ** 2
    W12 = 4.0 * a * v1 * v2
    W22 = mu + 2.0 * a * v1 ** 2 + b / v2 ** 2
    C = W * 2.0 * np.pi * X
    lo = -1.0 / dR[:, None]                      # d slope / d v_j
    hi = 1.0 / dR[:, None]
    glo = (1.0 - t) / X                          # d v2 / d v_j
    ghi = t / X
    h_ll = np.sum(C * (W11 * lo * lo + 2 * W12 * lo * glo + W22 * glo * glo), axis=1)
    h_lh = np.sum(C * (W11 * lo * hi + W12 * (lo * ghi + hi * glo) + W22 * glo * ghi), axis=1)
    h_hh = np.sum(C * (W11 * hi * hi + 2 * W12 * hi * ghi + W22 * ghi * ghi), axis=1)
    n = len(values) - 1
    diag = np.zeros(n)
    diag += h_ll
    diag[1:] += h_hh[:-1]
    off = h_lh[:-1].copy()                       # couples v_j and v_{j+1}
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    return ab


def _pl_gradient(knots, values, density: BulkDensity, K: float):
    """Analytic gradient of _pl_energy with respect to values[:-1]."""
    dR = np.diff(knots)
    slopes = np.diff(values) / dR
    X, W = _pl_quadrature(knots)
    t = (X - knots[:-1, None]) / dR[:, None]
    r = values[:-1, None] * (1.0 - t) + values[1:, None] * t
    F = np.zeros((X.size, 2, 2))
    F[:, 0, 0] = np.broadcast_to(slopes[:, None], X.shape).ravel()
    F[:, 1, 1] = (r / X).ravel()
    DW = density.stress(F)
    W1 = DW[:, 0, 0].reshape(X.shape)
    W2 = DW[:, 1, 1].reshape(X.shape)
    C = W * 2.0 * np.pi * X
    A = np.sum(C * W1, axis=1) / dR          # through the slope
    B0 = np.sum(C * (W2 / X) * (1.0 - t), axis=1)
    B1 = np.sum(C * (W2 / X) * t, axis=1)
    full = np.zeros(len(values))
    full[:-1] += -A + B0
    full[1:] += A + B1
    g = full[:-1]
    g[0] += K
    return g


def _project_monotone(v, top, eps, floor=None):
    """Strictly increasing values with gaps >= eps, capped below `top`.

    `floor` bounds the first value away from zero; a hole that closes does
    so to this physical floor, not to the gap epsilon, so determinants stay
    representable.
    """
    n = len(v)
    ladder = eps * np.arange(n)
    v = np.maximum.accumulate(v - ladder) + ladder
    v = np.minimum(v, top - eps * (n - np.arange(n)))
    v[0] = max(v[0], eps if floor is None else floor)
    v[1:] = np.maximum(v[1:], v[0] + ladder[1:])
    return v


def _descend(knots, vals, top, density, K, max_iters, tol_E, el_tol, verbose):
    """Preconditioned projected Barzilai-Borwein descent from one seed,
    finished by damped Newton on the tridiagonal Hessian.

    The raw gradient entry at knot j carries the quadrature measure
    2*pi*R_j*dR_j, which varies by orders of magnitude across a geometric
    grid and makes the cavity-radius mode glacially slow. Dividing by the
    lumped measure m turns the step into a pointwise Euler-Lagrange update
    with comparable speed at every knot; the residual reported against
    el_tol is the measure-scaled one, i.e. the discrete EL operator value.
    A hole that wants to close sits on the floor bound with positive raw
    gradient; that coordinate counts as converged in the KKT sense.
    """
    eps = 1e-12 * knots[-1]
    floor = 1e-6 * knots[-1]
    dR = np.diff(knots)
    m = np.pi * knots[:-1] * (np.append(dR[1:], 0.0) + dR)
    m[0] = np.pi * knots[0] * dR[0]

    def energy(v):
        return _pl_energy(knots, np.append(v, top), density, K)

    def grad(v):
        return _pl_gradient(knots, np.append(v, top), density, K)

    def residual(v, g):
        scaled = np.abs(g) / m
        if v[0] <= floor * (1.0 + 1e-9) and g[0] > 0.0:
            scaled[0] = 0.0
        return float(scaled.max())

    def project(v):
        return _project_monotone(v, top, eps, floor=floor)

    v = project(vals[:-1].copy())
    E = energy(v)
    if E is None:
        raise InfeasibleEnergyError("infeasible starting profile")
    g = grad(v)
    step = 1e-3
    prev_v = prev_g = None
    status = "max_iters"
    res = residual(v, g)
    tol = lambda val: el_tol * (1.0 + abs(val))
    for it in range(1, max_iters + 1):
        if res <= 1e-3 * (1.0 + abs(E)):
            break                                  # hand over to Newton
        if prev_g is not None:
            dv = v - prev_v
            dg = g - prev_g
            denom = float(dv @ dg)
            if denom > 0.0:
                step = float(dv @ (m * dv)) / denom
        step = float(np.clip(step, 1e-14, 1e3))
        s = step
        accepted = None
        for _ in range(60):
            cand = project(v - s * (g / m))
            Ec = energy(cand)
            if Ec is not None and Ec <= E - 1e-4 * float(g @ (v - cand)):
                accepted = (cand, Ec)
                break
            s *= 0.5
        if accepted is None:
            status = "stalled"
            break
        prev_v, prev_g = v, g
        v, E_new = accepted
        decrease = E - E_new
        E = E_new
        g = grad(v)
        res = residual(v, g)
        if verbose and it % 100 == 0:
            print(f"radial iter {it:5d}  energy {E:.10g}  residual {res:.3e}")
        if decrease < tol_E * (1.0 + abs(E)) and res <= tol(E):
            status = "converged"
            break
    if res <= tol(E):
        status = "converged"
    elif status != "stalled":
        # Newton polish; quadratic once inside the basin
        for it in range(60):
            if res <= tol(E):
                status = "converged"
                break
            ab = _pl_hessian_banded(knots, np.append(v, top), density)
            rhs = g.copy()
            pinned = v[0] <= floor * (1.0 + 1e-9) and g[0] > 0.0
            if pinned:
                rhs[0] = 0.0
                ab[1, 0] = 1.0
                ab[0, 1] = 0.0
            try:
                delta = solve_banded((1, 1), ab, rhs)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(delta)):
                break
            tau, taken = 1.0, None
            for _ in range(40):
                cand = project(v - tau * delta)
                Ec = energy(cand)
                if Ec is not None:
                    gc = grad(cand)
                    rc = residual(cand, gc)
                    if rc < res or Ec < E - tol_E * (1.0 + abs(E)):
                        taken = (cand, Ec, gc, rc)
                        break
                tau *= 0.5
            if taken is None:
                break
            v, E, g, res = taken
            if verbose:
                print(f"newton iter {it:3d}  energy {E:.12g}  residual {res:.3e}")
        if res <= tol(E):
            status = "converged"
    return v, E, status


def solve_radial(lam: float, density: BulkDensity, phi: SurfaceDensity,
                 rho: float, M: int = 96, R_out: float = 1.0,
                 max_iters: int = 4000, tol_E: float = 1e-10,
                 el_tol: float = 1e-6, verbose: bool = False) -> RadialProfile:
    """Projected-gradient descent over knot values with r(R_out) = lam R_out.

    Geometric knots resolve the boundary layer at the puncture. The descent
    objective interpolates linearly between knots so its gradient comes out
    of the stress in closed form; Barzilai-Borwein steps with backtracking
    keep the energy non-increasing. Converged means both a < tol_E energy
    decrease and a small Euler-Lagrange residual. The returned profile is
    the monotone cubic through the optimal values.

    For lam > 1 the energy typically has two local valleys, a nearly
    homogeneous one with a closed-down hole and a cavitated one, and which
    wins flips at a critical stretch. Descent cannot hop between them, so
    both seeds are descended and the lower energy is returned.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if M < 32:
        raise ValueError("need at least 32 intervals")
    if not 0.0 < rho < R_out:
        raise ValueError("need 0 < rho < R_out")
    knots = rho * (R_out / rho) ** np.linspace(0.0, 1.0, M + 1)
    knots[-1] = R_out
    top = lam * R_out
    K = _phi_circle_integral(phi)
    seeds = [lam * knots]
    if lam > 1.0:
        c0 = np.sqrt(lam ** 2 - 1.0) * R_out
        seeds.append(np.sqrt(knots ** 2 + c0 ** 2) * top
                     / np.sqrt(R_out ** 2 + c0 ** 2))
    best = None
    for vals in seeds:
        vals = vals.copy()
        vals[-1] = top
        v, E, status = _descend(knots, vals, top, density, K, max_iters,
                                tol_E, el_tol, verbose)
        if best is None or E < best[1]:
            best = (v, E, status)
    v, _, status = best
    return RadialProfile(knots=knots, values=np.append(v, top), lam=lam,
                         status=status)


# ---------------------------------------------------------------------------
# traction balance on the cavity wall


@dataclass
class BvpReport:
    """Residuals of T nu + h nu = 0 on the cavity circle.

    `pointwise` holds the per-angle residuals with the pointwise anisotropic
    curvature; `projected` tests the circle-averaged balance, the one a
    radial ansatz can actually satisfy (they coincide for isotropic phi).
    """

    angles: np.ndarray
    pointwise: np.ndarray
    projected: float
    t_rr: float
    h_avg: float
    h_pointwise: np.ndarray
    tol: float

    @property
    def max_pointwise(self) -> float:
        return float(self.pointwise.max())

    @property
    def passed(self) -> bool:
        return self.projected <= self.tol

    def summary(self) -> str:
        return (f"T_rr = {self.t_rr:.6g}, h_avg = {self.h_avg:.6g}, "
                f"projected residual = {self.projected:.3e}, "
                f"max pointwise = {self.max_pointwise:.3e}, "
                f"{'PASS' if self.passed else 'FAIL'} (tol {self.tol:g})")


def bvp_boundary_check(profile: RadialProfile, density: BulkDensity,
                       phi: SurfaceDensity, n_angles: int = 32,
                       tol: float = 0.02) -> BvpReport:
    """Check the natural boundary condition on the cavity circle.

    The radial functional is stationary in the cavity radius exactly when
    2 pi rho W_1(rho) = K with K the phi-integral over directions, i.e. the
    radial Cauchy traction equals K/(2 pi c). The curvature term h is
    therefore taken negative for a convex cavity, h_avg = -K/(2 pi c), so
    that T nu + h nu vanishes at equilibrium; the pointwise version uses
    -tau . D2phi(nu) tau / c, which matches 1/c magnitudes for isotropic phi.
    """
    rho = profile.rho
    c = profile.cavity_radius
    v1 = float(profile.dr(rho))
    v2 = c / rho
    det = v1 * v2
    if det <= 0.0:
        raise InfeasibleEnergyError("profile has non-positive determinant at the puncture")
    F = np.array([[v1, 0.0], [0.0, v2]])
    T = density.stress(F[None])[0] @ F.T / det
    t_rr = float(T[0, 0])

    K = _phi_circle_integral(phi)
    h_avg = -K / (2.0 * np.pi * c)

    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    nu = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    tau = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
    H = phi.hessian(nu)  # raises for densities without a second derivative
    kappa = np.einsum("na,nab,nb->n", tau, H, tau)
    h_pt = -kappa / c
    pointwise = np.abs(t_rr + h_pt) / (abs(t_rr) + np.abs(h_pt) + 1e-12)
    projected = abs(t_rr + h_avg) / (abs(t_rr) + abs(h_avg) + 1e-12)
    return BvpReport(angles=angles, pointwise=pointwise, projected=float(projected),
                     t_rr=t_rr, h_avg=float(h_avg), h_pointwise=h_pt, tol=tol)


# ---------------------------------------------------------------------------
# sweeps and lifting


def sweep_lambda(lams, density: BulkDensity, phi: SurfaceDensity, rho: float,
                 M: int = 96, R_out: float = 1.0, **solve_kw) -> list:
    """One converged radial solve per boundary stretch; list of result rows."""
    rows = []
    for lam in lams:
        prof = solve_radial(float(lam), density, phi, rho, M=M, R_out=R_out,
                            **solve_kw)
        bulk, surface = radial_energy_breakdown(prof, density, phi)
        rows.append({
            "lambda": float(lam),
            "cavity_radius": prof.cavity_radius,
            "bulk": bulk,
            "surface": surface,
            "total": bulk + surface,
            "status": prof.status,
        })
    return rows


def sweep_to_csv(rows, path):
    lines = ["lambda,cavity_radius,bulk,surface,total"]
    for r in rows:
        lines.append(",".join(f"{r[k]:.12g}" for k in
                              ("lambda", "cavity_radius", "bulk", "surface", "total")))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def radial_lift(profile: RadialProfile, mesh: Mesh) -> DeformationField:
    """2-D deformation field whose vertices follow the radial profile."""
    R = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
    Rc = np.clip(R, profile.knots[0], profile.knots[-1])
    ratio = np.asarray(profile.r(Rc)) / Rc
    return DeformationField(mesh, ratio[:, None] * mesh.vertices)
