"""Stored-energy densities for the bulk and for created cavity surface.

The bulk density acts on 2x2 deformation gradients F with det F > 0:

    W(F) = (mu/2) |F|^2 + a (det F)^2 - b log(det F)

with |F| the Frobenius norm.  The three parameter groups play the usual
roles: mu is the shear stiffness, the a-term penalizes dilation, the log
term blows up under compression so that finite energy forces det F > 0.
The density is polyconvex (a convex function of (F, det F)) and satisfies
the growth and stress-control bounds that the energy functional needs;
`coercivity_gap` and `stress_control_ratio` expose those bounds as
checkable numbers.

The surface density phi acts on boundary normals (or un-normalized normal
vectors, by one-homogeneity) and prices a unit of created cavity surface:

    isotropic    phi(z) = |z|
    elliptic     phi(z) = sqrt(z . A z),  A symmetric positive definite
    smoothed_l1  phi(z) = sum_i sqrt(z_i^2 + eps^2 |z|^2) / sqrt(1 + 2 eps^2)

All three are positively one-homogeneous, convex, bounded below by a
positive multiple of |z|, and continuously differentiable away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError


def _frob2(F):
    """Squared Frobenius norm over the trailing 2x2 axes."""
    return np.einsum("...ab,...ab->...", F, F)


def _det2(F):
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def _cof2(F):
    """Cofactor matrix of a 2x2 batch: cof(F)_ij = d(det F)/dF_ij."""
    c = np.empty_like(F)
    c[..., 0, 0] = F[..., 1, 1]
    c[..., 0, 1] = -F[..., 1, 0]
    c[..., 1, 0] = -F[..., 0, 1]
    c[..., 1, 1] = F[..., 0, 0]
    return c


@dataclass(frozen=True)
class BulkDensity:
    """W(F) = (mu/2)|F|^2 + a (det F)^2 - b log(det F), growth exponent p = 2.

    mu, a, b must be positive.  `energy` and `stress` accept a single 2x2
    array or any (..., 2, 2) batch and raise DomainError when det F <= 0
    anywhere in the batch.
    """

    mu: float = 1.0
    a: float = 1.0
    b: float = 1.0
    p: float = field(default=2.0)

    def __post_init__(self):
        if min(self.mu, self.a, self.b) <= 0.0:
            raise ValueError("mu, a, b must all be positive")
        if self.p != 2.0:
            raise ValueError("only the quadratic growth exponent p = 2 is implemented")

    def energy(self, F):
        F = np.asarray(F, dtype=float)
        det = _det2(F)
        if np.any(det <= 0.0):
            raise DomainError("det F <= 0: deformation gradient outside the admissible cone")
        return 0.5 * self.mu * _frob2(F) + self.a * det ** 2 - self.b * np.log(det)

    def stress(self, F):
        """DW(F) = mu F + (2 a det F - b / det F) cof F."""
        F = np.asarray(F, dtype=float)
        det = _det2(F)
        if np.any(det <= 0.0):
            raise DomainError("det F <= 0: deformation gradient outside the admissible cone")
        coef = 2.0 * self.a * det - self.b / det
        return self.mu * F + coef[..., None, None] * _cof2(F)

    def gamma(self, h):
        """Volumetric part a h^2 - b log h, shifted to be nonnegative.

        The shift is max(0, -min gamma_raw); for b <= 2 a e the raw minimum
        is already nonnegative and the shift is zero.
        """
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0.0):
            raise DomainError("gamma is defined for positive arguments only")
        raw = self.a * h ** 2 - self.b * np.log(h)
        return raw + self._gamma_shift()

    def _gamma_shift(self):
        hstar2 = self.b / (2.0 * self.a)
        raw_min = 0.5 * self.b * (1.0 - np.log(hstar2))
        return max(0.0, -raw_min)

    def coercivity_gap(self, F):
        """W(F) - [(mu/2)|F|^p + gamma(det F)]; nonnegative gap means the
        coercivity bound holds at F with c = mu/2."""
        F = np.asarray(F, dtype=float)
        return self.energy(F) - (0.5 * self.mu * _frob2(F) ** (self.p / 2.0) + self.gamma(_det2(F)))

    def stress_control_ratio(self, F):
        """|DW(F) F^T| / (W(F) + 1).  Bounded on det F > 0; the supremum over a
        sample is an empirical stress-control constant."""
        F = np.asarray(F, dtype=float)
        S = self.stress(F) @ np.swapaxes(F, -1, -2)
        return np.sqrt(_frob2(S)) / (self.energy(F) + 1.0)


_KINDS = ("isotropic", "elliptic", "smoothed_l1")


@dataclass(frozen=True)
class SurfaceDensity:
    """Positively one-homogeneous surface density phi with gradient and,
    for the twice differentiable kinds, Hessian.

    kind "elliptic" needs a symmetric positive definite 2x2 matrix A;
    kind "smoothed_l1" needs eps > 0 (the corner-rounding width).
    """

    kind: str = "isotropic"
    A: np.ndarray | None = None
    eps: float = 0.1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown surface density kind {self.kind!r}; choose from {_KINDS}")
        if self.kind == "elliptic":
            A = np.asarray(self.A, dtype=float)
            if A.shape != (2, 2) or not np.allclose(A, A.T):
                raise ValueError("elliptic kind needs a symmetric 2x2 matrix A")
            if np.linalg.eigvalsh(A)[0] <= 0.0:
                raise ValueError("elliptic kind needs a positive definite A")
            object.__setattr__(self, "A", A)
        if self.kind == "smoothed_l1" and self.eps <= 0.0:
            raise ValueError("smoothed_l1 kind needs eps > 0")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        self._reject_zero(z)
        if self.kind == "isotropic":
            return np.hypot(z[..., 0], z[..., 1])
        if self.kind == "elliptic":
            return np.sqrt(np.einsum("...i,ij,...j->...", z, self.A, z))
        n2 = z[..., 0] ** 2 + z[..., 1] ** 2
        e2 = self.eps ** 2
        s = np.sqrt(z[..., 0] ** 2 + e2 * n2) + np.sqrt(z[..., 1] ** 2 + e2 * n2)
        return s / np.sqrt(1.0 + 2.0 * e2)

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        self._reject_zero(z)
        if self.kind == "isotropic":
            return z / np.hypot(z[..., 0], z[..., 1])[..., None]
        if self.kind == "elliptic":
            Az = np.einsum("ij,...j->...i", self.A, z)
            val = np.sqrt(np.einsum("...i,...i->...", z, Az))
            return Az / val[..., None]
        e2 = self.eps ** 2
        n2 = (z[..., 0] ** 2 + z[..., 1] ** 2)[..., None]
        t = np.sqrt(z ** 2 + e2 * n2)  # (..., 2): one radical per coordinate
        # d t_i / d z_j = (delta_ij z_i + e2 z_j) / t_i, summed over i
        g = z / t + e2 * z * (1.0 / t).sum(axis=-1, keepdims=True)
        return g / np.sqrt(1.0 + 2.0 * e2)

    def hessian(self, z):
        """Second derivative of phi at z != 0.  Only the isotropic and
        elliptic kinds are twice differentiable in the sense used by the
        curvature checks; smoothed_l1 raises."""
        if self.kind == "smoothed_l1":
            raise ValueError("Hessian unavailable for the smoothed_l1 surface density")
        z = np.asarray(z, dtype=float)
        self._reject_zero(z)
        if self.kind == "isotropic":
            n = np.hypot(z[..., 0], z[..., 1])
            zh = z / n[..., None]
            eye = np.eye(2)
            return (eye - zh[..., :, None] * zh[..., None, :]) / n[..., None, None]
        Az = np.einsum("ij,...j->...i", self.A, z)
        val = np.sqrt(np.einsum("...i,...i->...", z, Az))
        return self.A / val[..., None, None] - Az[..., :, None] * Az[..., None, :] / val[..., None, None] ** 3

    def lower_bound_constant(self, samples: int = 256) -> float:
        """min over unit directions of phi, a certified positive lower-bound
        constant (coarse directional sampling; all kinds are smooth enough
        for 256 directions to be representative)."""
        th = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return float(self.value(dirs).min())

    @staticmethod
    def _reject_zero(z):
        n2 = z[..., 0] ** 2 + z[..., 1] ** 2
        if np.any(n2 == 0.0):
            raise DomainError("surface density is undefined at the zero vector")


# Thin functional aliases; the dataclasses above carry the state.

def bulk_energy(density: BulkDensity, F):
    """W(F) for one gradient or a (..., 2, 2) batch."""
    return density.energy(F)


def bulk_stress(density: BulkDensity, F):
    """DW(F) for one gradient or a (..., 2, 2) batch."""
    return density.stress(F)


def surface_density(phi: SurfaceDensity, z):
    """phi(z) for one vector or a (..., 2) batch."""
    return phi.value(z)


def surface_density_gradient(phi: SurfaceDensity, z):
    """Dphi(z) for one vector or a (..., 2) batch."""
    return phi.gradient(z)
