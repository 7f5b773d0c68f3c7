"""Discrete inverse deformation on a raster over the deformed image.

Cells covered by a deformed triangle carry the barycentric pre-image; cells
inside a cavity carry a fixed marker point o placed outside the reference
domain; everything else is outside the image. The jump set of the inverse is
the marching-squares contour of the marker region.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from ._polyline import ensure_ccw
from .degree import _winding_no_boundary_guard, marching_squares
from .exceptions import DomainError
from .geometry import DeformationField, Mesh

OUTSIDE, MATERIAL, CAVITY = 0, 1, 2

__all__ = [
    "InverseField", "JumpContour", "default_marker", "build_inverse_field",
    "invert_point", "inverse_gradient", "extract_jump_set",
    "area_formula_check", "jump_set_to_csv",
]


def default_marker(mesh: Mesh) -> np.ndarray:
    """The point o: domain centroid shifted 3 diameters along +x."""
    areas = mesh.areas
    com = (areas[:, None] * mesh.vertices[mesh.triangles].mean(axis=1)).sum(axis=0)
    com /= areas.sum()
    hull = mesh.vertices[ConvexHull(mesh.vertices).vertices]
    gaps = np.linalg.norm(hull[:, None, :] - hull[None, :, :], axis=-1)
    return com + 3.0 * float(gaps.max()) * np.array([1.0, 0.0])


@dataclass
class InverseField:
    """Raster inverse: per-cell kind (outside/material/cavity), pre-image,
    containing deformed triangle, and the marker o."""

    origin: np.ndarray
    delta: float
    kind: np.ndarray
    ref: np.ndarray
    tri: np.ndarray
    marker: np.ndarray
    jump_set: list | None = None

    def cell_centers(self):
        ny, nx = self.kind.shape
        xs = self.origin[0] + self.delta * np.arange(nx)
        ys = self.origin[1] + self.delta * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def to_csv(self, path):
        """Rows xi_x,xi_y followed by the pre-image or the word CAVITY."""
        centers = self.cell_centers()
        lines = ["xi_x,xi_y,x_x,x_y"]
        ny, nx = self.kind.shape
        for iy in range(ny):
            for ix in range(nx):
                k = self.kind[iy, ix]
                if k == OUTSIDE:
                    continue
                cx, cy = centers[iy, ix]
                if k == CAVITY:
                    lines.append(f"{cx:.12g},{cy:.12g},CAVITY,CAVITY")
                else:
                    rx, ry = self.ref[iy, ix]
                    lines.append(f"{cx:.12g},{cy:.12g},{rx:.12g},{ry:.12g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _cavity_membership(y: DeformationField, pts: np.ndarray) -> np.ndarray:
    inside = np.zeros(len(pts), dtype=bool)
    for ids in y.mesh.puncture_loops():
        loop = y.positions[ids]
        inside |= _winding_no_boundary_guard(loop, pts) != 0
    return inside


def build_inverse_field(y: DeformationField, delta: float, marker=None,
                        margin: int = 2) -> InverseField:
    """Populate the raster inverse over a grid covering the deformed image."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    marker = default_marker(y.mesh) if marker is None else np.asarray(marker, float)
    lo = y.positions.min(axis=0) - margin * delta
    hi = y.positions.max(axis=0) + margin * delta
    nx = int(np.ceil((hi[0] - lo[0]) / delta)) + 1
    ny = int(np.ceil((hi[1] - lo[1]) / delta)) + 1
    xs = lo[0] + delta * np.arange(nx)
    ys = lo[1] + delta * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)

    tri, bary = y.deformed_locator().locate(pts)
    kind = np.full(len(pts), OUTSIDE, dtype=np.uint8)
    ref = np.full((len(pts), 2), np.nan)
    hit = tri >= 0
    kind[hit] = MATERIAL
    verts = y.mesh.vertices[y.mesh.triangles[tri[hit]]]
    ref[hit] = np.einsum("kb,kbi->ki", bary[hit], verts)
    miss = ~hit
    if miss.any() and y.mesh.punctures:
        cav = np.zeros(len(pts), dtype=bool)
        cav[miss] = _cavity_membership(y, pts[miss])
        kind[cav] = CAVITY
    return InverseField(origin=lo, delta=float(delta),
                        kind=kind.reshape(ny, nx), ref=ref.reshape(ny, nx, 2),
                        tri=tri.reshape(ny, nx), marker=marker)


def invert_point(y: DeformationField, xi, *, locator=None, marker=None):
    """Pre-image of one deformed point.

    Returns ("material", x), ("cavity", o) or ("outside", None). Points on a
    shared deformed edge resolve through either adjacent triangle; conforming
    meshes give the same pre-image.
    """
    xi = np.asarray(xi, dtype=float)
    loc = y.deformed_locator() if locator is None else locator
    tri, bary = loc.locate(xi[None])
    if tri[0] >= 0:
        x = bary[0] @ y.mesh.vertices[y.mesh.triangles[tri[0]]]
        return "material", x
    if y.mesh.punctures and _cavity_membership(y, xi[None])[0]:
        o = default_marker(y.mesh) if marker is None else np.asarray(marker, float)
        return "cavity", o
    return "outside", None


def inverse_gradient(y: DeformationField, xi, *, locator=None):
    """(grad y)^{-1} at the pre-image of xi; batched when xi is (n, 2).

    The distributional gradient of the inverse has no absolutely continuous
    part on cavities, so cavity points raise; so do points off the image.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None] if single else xi
    loc = y.deformed_locator() if locator is None else locator
    tri, _ = loc.locate(pts)
    if np.any(tri < 0):
        bad = pts[tri < 0]
        if y.mesh.punctures and _cavity_membership(y, bad).any():
            raise DomainError("no absolutely continuous part on a cavity")
        raise DomainError("point outside the deformed image")
    F = y.element_gradients()[tri]
    out = np.linalg.inv(F)
    return out[0] if single else out


@dataclass
class JumpContour:
    """One jump-set component: closed polyline, per-segment outward normal
    (out of the cavity; the inverse's jump normal is its negative) and jump
    amplitude |a - o| read from the adjacent material cell."""

    points: np.ndarray
    normals: np.ndarray
    amplitudes: np.ndarray


def _probe_ref(inv: InverseField, pts: np.ndarray):
    idx = np.rint((pts - inv.origin) / inv.delta).astype(int)
    ny, nx = inv.kind.shape
    ok = (idx[:, 0] >= 0) & (idx[:, 0] < nx) & (idx[:, 1] >= 0) & (idx[:, 1] < ny)
    vals = np.full((len(pts), 2), np.nan)
    sub = idx[ok]
    mat = inv.kind[sub[:, 1], sub[:, 0]] == MATERIAL
    rows = np.nonzero(ok)[0][mat]
    vals[rows] = inv.ref[sub[mat, 1], sub[mat, 0]]
    return vals


def extract_jump_set(inv: InverseField) -> list:
    """Jump-set contours of the inverse: boundaries of the marker region."""
    contours = []
    mask = inv.kind == CAVITY
    if mask.any():
        for loop in marching_squares(mask, inv.origin, inv.delta):
            pts = ensure_ccw(loop)
            e = np.roll(pts, -1, axis=0) - pts
            nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)
            nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-300)
            mids = 0.5 * (pts + np.roll(pts, -1, axis=0))
            a = _probe_ref(inv, mids + 0.6 * inv.delta * nrm)
            retry = np.isnan(a[:, 0])
            if retry.any():
                a[retry] = _probe_ref(inv, mids[retry] + 1.2 * inv.delta * nrm[retry])
            amp = np.linalg.norm(a - inv.marker, axis=1)
            contours.append(JumpContour(points=pts, normals=nrm, amplitudes=amp))
    inv.jump_set = contours
    return contours


def jump_set_to_csv(contours, path):
    lines = ["contour,x,y,nx,ny,amplitude"]
    for c, jc in enumerate(contours):
        for p, n, a in zip(jc.points, jc.normals, jc.amplitudes):
            lines.append(f"{c},{p[0]:.12g},{p[1]:.12g},{n[0]:.12g},{n[1]:.12g},{a:.12g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def area_formula_check(y: DeformationField, f, delta: float = 0.02,
                       inv: InverseField | None = None):
    """Raster integral of f(det grad inverse) vs exact reference integral.

    Left: delta^2 * sum over material cells of f(1/det). Right: per-triangle
    sum of area * det * f(1/det). f must accept numpy arrays elementwise.
    Returns (left, right).
    """
    if inv is None:
        inv = build_inverse_field(y, delta)
    det = y.element_dets()
    mask = inv.kind == MATERIAL
    tri = inv.tri[mask]
    left = float(np.sum(np.asarray(f(1.0 / det[tri])))) * inv.delta ** 2
    right = float(np.sum(y.mesh.areas * det * np.asarray(f(1.0 / det))))
    return left, right
