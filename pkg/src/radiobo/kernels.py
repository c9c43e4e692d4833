"""Constant-scaled RBF plus white noise covariance over raw lat/lon degrees.

Distances are Euclidean in *degree* coordinates, so the lengthscale is in
degrees too. Degrees of longitude are shorter than degrees of latitude away
from the equator; the kernel deliberately ignores that anisotropy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geo import GeoPoint, as_coords

JITTER = 1e-10

NAMES = ("scale_gamma2", "lengthscale_ell", "noise_level")


@dataclass(frozen=True)
class HyperParams:
    scale_gamma2: float = 1.0
    lengthscale_ell: float = 0.00276
    noise_level: float = 0.33

    def __post_init__(self):
        for name in NAMES:
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.scale_gamma2, self.lengthscale_ell, self.noise_level])

    @classmethod
    def from_array(cls, theta) -> "HyperParams":
        return cls(*(float(t) for t in theta))

    def replace(self, **kw) -> "HyperParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class HyperBounds:
    scale_gamma2: tuple[float, float] = (1e-3, 1e3)
    lengthscale_ell: tuple[float, float] = (0.001, 0.004)
    noise_level: tuple[float, float] = (1e-4, 1e2)

    def __post_init__(self):
        for name in NAMES:
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise ValueError(f"bounds for {name} need 0 < lower < upper, got ({lo}, {hi})")

    def lower(self) -> np.ndarray:
        return np.array([getattr(self, n)[0] for n in NAMES])

    def upper(self) -> np.ndarray:
        return np.array([getattr(self, n)[1] for n in NAMES])

    def clip(self, params: HyperParams) -> HyperParams:
        return HyperParams.from_array(np.clip(params.as_array(), self.lower(), self.upper()))

    def contains(self, params: HyperParams) -> bool:
        theta = params.as_array()
        return bool(np.all(theta >= self.lower()) and np.all(theta <= self.upper()))


def k_rbf(x: GeoPoint, x2: GeoPoint, params: HyperParams) -> float:
    d2 = (x.lat - x2.lat) ** 2 + (x.lon - x2.lon) ** 2
    return params.scale_gamma2 * float(np.exp(-d2 / (2.0 * params.lengthscale_ell**2)))


def k_full(x: GeoPoint, x2: GeoPoint, params: HyperParams, same_point: bool) -> float:
    # White noise is tied to sample identity, not location: two distinct
    # samples taken at the same spot share no noise.
    return k_rbf(x, x2, params) + (params.noise_level if same_point else 0.0)


def sq_dists(a, b) -> np.ndarray:
    a = as_coords(a)
    b = as_coords(b)
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def cross_rbf(a, b, params: HyperParams) -> np.ndarray:
    """RBF covariance between two point sets, shape (len(a), len(b))."""
    return params.scale_gamma2 * np.exp(-sq_dists(a, b) / (2.0 * params.lengthscale_ell**2))


def build_matrix(points, params: HyperParams) -> np.ndarray:
    K = cross_rbf(points, points, params)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] += params.noise_level
    return K


def matrix_grad(points, params: HyperParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partials of the training covariance w.r.t. (gamma2, ell, noise_level)."""
    D2 = sq_dists(points, points)
    ell = params.lengthscale_ell
    E = np.exp(-D2 / (2.0 * ell**2))
    dK_dgamma2 = E
    dK_dell = params.scale_gamma2 * E * D2 / ell**3
    dK_dnoise = np.eye(D2.shape[0])
    return dK_dgamma2, dK_dell, dK_dnoise
