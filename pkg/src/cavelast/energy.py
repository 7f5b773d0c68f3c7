"""Total stored energy: bulk term plus anisotropic perimeter of cavity
boundaries, and the surface-creation functional in its sum and test-field
forms.

The two routes to the surface term are deliberately independent: the sum form
walks detected cavity boundaries, the test-field form integrates
cof Dy : D_x eta + det Dy * div_xi eta over the reference domain and provides
certified lower bounds.
"""

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ._polyline import (ensure_ccw, hausdorff_distance, polygon_is_simple,
                        polygon_signed_area)
from .degree import CavityRecord, _default_radii, topological_image_point
from .exceptions import DomainError, InfeasibleEnergyError
from .geometry import DeformationField
from .material import BulkDensity, SurfaceDensity, _cof2, _det2

__all__ = [
    "EnergyBreakdown", "bulk_term", "anisotropic_perimeter", "detect_cavities",
    "total_energy", "surface_functional_S_sum", "surface_functional_S_testfield",
    "SeparableTestField", "triangle_quadrature", "rho_extrapolate",
]


# ---------------------------------------------------------------------------
# triangle quadrature (barycentric points, weights summing to 1)

_CENTROID = (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0]))
_THREE_POINT = (
    np.array([[4, 1, 1], [1, 4, 1], [1, 1, 4]], dtype=float) / 6.0,
    np.full(3, 1.0 / 3.0),
)
# 6-point rule, exact through quartics
_D4A, _D4B = 0.445948490915965, 0.091576213509771
_D4WA, _D4WB = 0.223381589678011, 0.109951743655322
_SIX_POINT = (
    np.array([
        [1 - 2 * _D4A, _D4A, _D4A], [_D4A, 1 - 2 * _D4A, _D4A], [_D4A, _D4A, 1 - 2 * _D4A],
        [1 - 2 * _D4B, _D4B, _D4B], [_D4B, 1 - 2 * _D4B, _D4B], [_D4B, _D4B, 1 - 2 * _D4B],
    ]),
    np.array([_D4WA, _D4WA, _D4WA, _D4WB, _D4WB, _D4WB]),
)

_RULES = {1: _CENTROID, 2: _THREE_POINT, 4: _SIX_POINT}


def triangle_quadrature(order: int):
    """Barycentric (points, weights) for the smallest rule of degree >= order."""
    for deg in (1, 2, 4):
        if order <= deg:
            return _RULES[deg]
    raise ValueError(f"no triangle rule of degree {order}; best available is 4")


@lru_cache(maxsize=32)
def _bary_points(order: int, subdivide: int):
    """Quadrature points of a (possibly uniformly subdivided) reference
    triangle, expressed in the parent's barycentric coordinates."""
    pts, wts = triangle_quadrature(order)
    tris = np.eye(3)[None, :, :]  # one triangle, rows = corner barycentrics
    for _ in range(subdivide):
        p, q, r = tris[:, 0], tris[:, 1], tris[:, 2]
        mpq, mqr, mrp = 0.5 * (p + q), 0.5 * (q + r), 0.5 * (r + p)
        tris = np.concatenate([
            np.stack([p, mpq, mrp], axis=1),
            np.stack([mpq, q, mqr], axis=1),
            np.stack([mrp, mqr, r], axis=1),
            np.stack([mpq, mqr, mrp], axis=1),
        ], axis=0)
    bary = np.einsum("qc,kcb->kqb", pts, tris).reshape(-1, 3)
    w = np.tile(wts, len(tris)) / len(tris)  # children all have area A/4^s
    return bary, w


# ---------------------------------------------------------------------------
# bulk term


def bulk_term(y: DeformationField, density: BulkDensity) -> float:
    """Integral of W(Dy) over the mesh.

    Gradients are constant per triangle, so one point per element is exact;
    index-ascending pairwise summation keeps the value reproducible.
    """
    F = y.element_gradients()
    det = _det2(F)
    if np.any(det <= 0.0):
        t = int(np.argmin(det))
        raise InfeasibleEnergyError(
            f"non-positive determinant {det[t]:.3e} in triangle {t}", triangle=t)
    return float(np.sum(y.mesh.areas * density.energy(F)))


# ---------------------------------------------------------------------------
# anisotropic perimeter


def anisotropic_perimeter(boundary, phi: SurfaceDensity) -> float:
    """Edgewise phi-weighted length of a closed polyline.

    One-homogeneity absorbs the edge length into the normal argument:
    |e| * phi(nu_e) = phi((e_y, -e_x)) when the polyline runs counterclockwise.
    """
    poly = np.asarray(boundary, dtype=float)
    if len(poly) >= 2 and np.array_equal(poly[0], poly[-1]):
        poly = poly[:-1]
    if len(poly) < 3:
        raise DomainError("closed boundary needs at least 3 distinct vertices")
    poly = ensure_ccw(poly)
    if not polygon_is_simple(poly):
        warnings.warn("self-intersecting cavity boundary; perimeter is formal",
                      RuntimeWarning, stacklevel=2)
    e = np.roll(poly, -1, axis=0) - poly
    keep = (e[:, 0] != 0.0) | (e[:, 1] != 0.0)  # zero edges contribute nothing
    z = np.stack([e[keep, 1], -e[keep, 0]], axis=1)
    return float(np.sum(phi.value(z)))


# ---------------------------------------------------------------------------
# cavity detection and the total energy


@dataclass
class EnergyBreakdown:
    """The two terms of the stored energy plus per-cavity bookkeeping.

    `total` is formed as bulk + surface in that order, nothing recomputed.
    `rho_artifact` is the phi-perimeter the reference punctures carry even
    when nothing opens; subtracting it (or extrapolating rho -> 0) isolates
    the energy genuinely spent on new surface.
    """

    bulk: float
    surface: float
    total: float
    per_cavity: list
    cavities: list
    rho_artifact: float
    inv_passed: bool | None = None

    def as_text(self) -> str:
        lines = [
            f"bulk = {self.bulk:.12g}",
            f"surface = {self.surface:.12g}",
            f"total = {self.total:.12g}",
            f"rho_artifact = {self.rho_artifact:.12g}",
            f"n_cavities = {len(self.cavities)}",
        ]
        for k, (site, per) in enumerate(self.per_cavity):
            lines.append(f"cavity_{k}_site = {site[0]:.12g} {site[1]:.12g}")
            lines.append(f"cavity_{k}_perimeter = {per:.12g}")
        if self.inv_passed is not None:
            lines.append(f"inv_check = {'PASS' if self.inv_passed else 'FAIL'}")
        return "\n".join(lines)


def detect_cavities(y: DeformationField, phi: SurfaceDensity, *,
                    slow_path: bool = False, delta: float = 0.02,
                    m: int = 192) -> list:
    """CavityRecord per puncture, boundary = deformed puncture loop.

    With slow_path=True each fast-path polygon is cross-checked against the
    raster contour from the degree construction and the Hausdorff distance
    between the two is recorded.
    """
    records = []
    for (center, rho), ids in zip(y.mesh.punctures, y.mesh.puncture_loops()):
        img = ensure_ccw(y.positions[ids])
        simple = polygon_is_simple(img)
        per = anisotropic_perimeter(img, phi)
        rec = CavityRecord(site=np.asarray(center, dtype=float),
                           puncture_radius=float(rho), boundary=img,
                           area=abs(polygon_signed_area(img)),
                           aniso_perimeter=per, simple=simple)
        if slow_path:
            radii = _default_radii(y.mesh, rec.site)
            slow = topological_image_point(y, rec.site, radii, delta, m=m)
            if slow is not None:
                rec = replace(rec, slow_path_hausdorff=float(
                    hausdorff_distance(img, slow.boundary)))
        records.append(rec)
    return records


def total_energy(y: DeformationField, density: BulkDensity,
                 phi: SurfaceDensity, *, slow_path: bool = False,
                 delta: float = 0.02, m: int = 192,
                 inv_report=None) -> EnergyBreakdown:
    """Bulk term plus anisotropic perimeter of every detected cavity.

    `inv_report`, when supplied (a report from degree.check_inv), is only
    recorded; admissibility failures surface through bulk_term.
    """
    bulk = bulk_term(y, density)
    cavities = detect_cavities(y, phi, slow_path=slow_path, delta=delta, m=m)
    surface = 0.0
    for rec in cavities:
        surface += rec.aniso_perimeter
    rho_artifact = 0.0
    for ids in y.mesh.puncture_loops():
        rho_artifact += anisotropic_perimeter(y.mesh.vertices[ids], phi)
    return EnergyBreakdown(
        bulk=bulk, surface=surface, total=bulk + surface,
        per_cavity=[(rec.site, rec.aniso_perimeter) for rec in cavities],
        cavities=cavities, rho_artifact=rho_artifact,
        inv_passed=None if inv_report is None else bool(inv_report.passed))


def surface_functional_S_sum(y: DeformationField) -> float:
    """Sum of plain cavity perimeters (the isotropic specialization).

    Kept independent of SurfaceDensity on purpose: edge lengths are summed
    directly so the anisotropic route can be checked against it.
    """
    F = y.element_gradients()
    det = _det2(F)
    if np.any(det <= 0.0):
        t = int(np.argmin(det))
        raise InfeasibleEnergyError(
            f"non-positive determinant {det[t]:.3e} in triangle {t}", triangle=t)
    total = 0.0
    for ids in y.mesh.puncture_loops():
        img = ensure_ccw(y.positions[ids])
        e = np.roll(img, -1, axis=0) - img
        total += float(np.sum(np.hypot(e[:, 1], -e[:, 0])))
    return total


# ---------------------------------------------------------------------------
# test-field form of the surface functional


def surface_functional_S_testfield(y: DeformationField, eta, order: int = 4,
                                   subdivide: int = 0, *,
                                   check_sup: bool = True,
                                   seed: int = 0) -> float:
    """Quadrature of S_y(eta) = int cof Dy : D_x eta(x,y) + det Dy * div_xi eta(x,y).

    eta must provide value/grad_x/div_xi taking batched (n,2) arrays of
    reference points and deformed points. Every admissible eta (C1, compactly
    supported, sup norm <= 1) gives a lower bound for the surface sum.
    """
    mesh = y.mesh
    bary, w = _bary_points(order, subdivide)
    xv = mesh.vertices[mesh.triangles]      # (m,3,2)
    yv = y.positions[mesh.triangles]
    xq = np.einsum("qb,mbi->mqi", bary, xv)
    yq = np.einsum("qb,mbi->mqi", bary, yv)
    nt, nq = xq.shape[0], xq.shape[1]
    X = xq.reshape(-1, 2)
    XI = yq.reshape(-1, 2)

    if check_sup:
        vals = np.linalg.norm(eta.value(X, XI), axis=1)
        rng = np.random.default_rng(seed)
        lo, hi = XI.min(axis=0), XI.max(axis=0)
        xr = mesh.vertices[rng.integers(0, len(mesh.vertices), 256)]
        xir = rng.uniform(lo, hi, size=(256, 2))
        vals_r = np.linalg.norm(eta.value(xr, xir), axis=1)
        sup = max(float(vals.max(initial=0.0)), float(vals_r.max(initial=0.0)))
        if sup > 1.0 + 1e-9:
            raise DomainError(f"test field sup norm {sup:.6g} exceeds 1")

    F = y.element_gradients()
    det = _det2(F)
    cof = _cof2(F)
    G = eta.grad_x(X, XI).reshape(nt, nq, 2, 2)
    D = eta.div_xi(X, XI).reshape(nt, nq)
    integrand = np.einsum("mij,mqij->mq", cof, G) + D * det[:, None]
    return float(np.sum(mesh.areas[:, None] * (w[None, :] * integrand)))


def _smoothstep_plateau(r, r0, r1, r2, r3):
    """Profile 0 -> 1 -> 0 with C1 smoothstep ramps on [r0,r1] and [r2,r3].

    Returns (g, dg). Outside [r0, r3] both vanish.
    """
    g = np.zeros_like(r)
    dg = np.zeros_like(r)
    up = (r > r0) & (r < r1)
    u = (r[up] - r0) / (r1 - r0)
    g[up] = u * u * (3.0 - 2.0 * u)
    dg[up] = 6.0 * u * (1.0 - u) / (r1 - r0)
    g[(r >= r1) & (r <= r2)] = 1.0
    dn = (r > r2) & (r < r3)
    u = (r[dn] - r2) / (r3 - r2)
    g[dn] = 1.0 - u * u * (3.0 - 2.0 * u)
    dg[dn] = -6.0 * u * (1.0 - u) / (r3 - r2)
    return g, dg


@dataclass(frozen=True)
class SeparableTestField:
    """eta(x, xi) = bump(|x - x0| / width) * V(xi).

    The reference factor is the C1 bump (1 - t^2)^2; the deformed factor is a
    radial field sign * g(|xi - xi0|) * e_r with a smoothstep plateau g
    supported on radii (r0, r1, r2, r3). sup |eta| <= 1 by construction.
    sign = -1 points toward xi0, the orientation that detects new surface
    enclosing xi0.
    """

    x0: tuple
    width: float
    xi0: tuple
    radii: tuple
    sign: float = -1.0

    def __post_init__(self):
        r0, r1, r2, r3 = self.radii
        if not (0.0 <= r0 < r1 <= r2 < r3):
            raise ValueError("radii must satisfy 0 <= r0 < r1 <= r2 < r3")
        if self.width <= 0.0:
            raise ValueError("width must be positive")
        if self.sign not in (-1.0, 1.0):
            raise ValueError("sign must be -1 or +1")

    def _bump(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.x0, dtype=float)
        t2 = np.einsum("ni,ni->n", d, d) / self.width ** 2
        inside = t2 < 1.0
        b = np.where(inside, (1.0 - t2) ** 2, 0.0)
        # grad b = -4 (1 - t^2) (x - x0) / width^2, smooth through the center
        coef = np.where(inside, -4.0 * (1.0 - t2), 0.0) / self.width ** 2
        return b, coef[:, None] * d

    def _radial(self, xi):
        d = np.asarray(xi, dtype=float) - np.asarray(self.xi0, dtype=float)
        r = np.hypot(d[:, 0], d[:, 1])
        g, dg = _smoothstep_plateau(r, *self.radii)
        safe = np.where(r > 0.0, r, 1.0)
        u = d / safe[:, None]
        V = self.sign * g[:, None] * u
        divV = self.sign * np.where(r > 0.0, dg + g / safe, 0.0)
        return V, divV

    def value(self, x, xi):
        b, _ = self._bump(x)
        V, _ = self._radial(xi)
        return b[:, None] * V

    def grad_x(self, x, xi):
        b, gb = self._bump(x)
        V, _ = self._radial(xi)
        return V[:, :, None] * gb[:, None, :]

    def div_xi(self, x, xi):
        b, _ = self._bump(x)
        _, divV = self._radial(xi)
        return b * divV


# ---------------------------------------------------------------------------
# rho bookkeeping


def rho_extrapolate(rhos, values):
    """Linear fit of values against rho; returns (intercept at 0, slope)."""
    rhos = np.asarray(rhos, dtype=float)
    values = np.asarray(values, dtype=float)
    if rhos.size < 2:
        raise ValueError("need at least two rho values to extrapolate")
    slope, intercept = np.polyfit(rhos, values, 1)
    return float(intercept), float(slope)
