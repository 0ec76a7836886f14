"""Finsler norms, their polars, Wulff-shape geometry and anisotropic perimeter.

Three norm families are supported, all with closed-form polar norms and
gradients so the duality identities can be tested exactly:

* ``euclidean``   H(xi) = |xi|
* ``ellipse``     H(xi) = sqrt(xi . A xi) for a symmetric positive-definite A
* ``power``       H(xi) = (sum |xi_i|^s)^(1/s) for 1 < s < inf

The power norm with s < 2 is not twice differentiable on the coordinate
axes; callers sampling gradients there must perturb their inputs.
"""

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

EUCLIDEAN = "euclidean"
ELLIPSE = "ellipse"
POWER = "power"


class SingularGradientError(ValueError):
    """Gradient of a norm requested at the origin, where it is undefined."""


def _ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class NormSpec:
    """A concrete anisotropy: one of the three supported norm families."""

    variant: str
    dimension: int = 2
    matrix: np.ndarray | None = None
    exponent: float | None = None

    def __post_init__(self):
        if self.variant not in (EUCLIDEAN, ELLIPSE, POWER):
            raise ValueError(f"unknown norm variant {self.variant!r}")
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.variant == ELLIPSE:
            if self.matrix is None:
                raise ValueError("ellipse norm requires a matrix")
            a = np.array(self.matrix, dtype=float)
            if a.shape != (self.dimension, self.dimension):
                raise ValueError("matrix shape does not match dimension")
            if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
                raise ValueError("ellipse matrix must be symmetric")
            eigs = np.linalg.eigvalsh(a)
            if eigs.min() <= 0.0:
                raise ValueError("ellipse matrix must be positive definite")
            a.setflags(write=False)
            object.__setattr__(self, "matrix", a)
            inv = np.linalg.inv(a)
            inv.setflags(write=False)
            object.__setattr__(self, "_inverse", inv)
            object.__setattr__(self, "_eig_range", (float(eigs.min()), float(eigs.max())))
        elif self.variant == POWER:
            s = self.exponent
            if s is None or not math.isfinite(s) or not 1.0 < s:
                raise ValueError("power norm exponent must satisfy 1 < s < inf")
        else:
            if self.matrix is not None or self.exponent is not None:
                raise ValueError("euclidean norm takes no parameters")

    @classmethod
    def euclidean(cls, dimension=2):
        return cls(EUCLIDEAN, dimension)

    @classmethod
    def ellipse(cls, matrix, dimension=None):
        matrix = np.asarray(matrix, dtype=float)
        if dimension is None:
            dimension = matrix.shape[0]
        return cls(ELLIPSE, dimension, matrix=matrix)

    @classmethod
    def power(cls, exponent, dimension=2):
        return cls(POWER, dimension, exponent=float(exponent))

    @property
    def conjugate_exponent(self):
        """Holder conjugate s' = s/(s-1) of a power norm."""
        if self.variant != POWER:
            raise ValueError("conjugate exponent is only defined for power norms")
        return self.exponent / (self.exponent - 1.0)


def _check_vectors(spec, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != spec.dimension:
        raise ValueError(f"expected vectors of length {spec.dimension}, got shape {xi.shape}")
    if not np.all(np.isfinite(xi)):
        raise ValueError("non-finite input vector")
    return xi


def eval_H(spec, xi):
    """Evaluate the norm H(xi); broadcasts over leading axes of ``xi``."""
    xi = _check_vectors(spec, xi)
    if spec.variant == EUCLIDEAN:
        return np.sqrt((xi * xi).sum(axis=-1))
    if spec.variant == ELLIPSE:
        return np.sqrt(np.einsum("...i,ij,...j", xi, spec.matrix, xi))
    s = spec.exponent
    return (np.abs(xi) ** s).sum(axis=-1) ** (1.0 / s)


def eval_H_grad(spec, xi):
    """Gradient of H at xi != 0; 0-homogeneous. Raises at the origin."""
    xi = _check_vectors(spec, xi)
    h = eval_H(spec, xi)
    if np.any(h == 0.0):
        raise SingularGradientError("norm gradient is undefined at the origin")
    if spec.variant == EUCLIDEAN:
        return xi / h[..., None]
    if spec.variant == ELLIPSE:
        return np.einsum("ij,...j", spec.matrix, xi) / h[..., None]
    s = spec.exponent
    return np.sign(xi) * np.abs(xi) ** (s - 1.0) / h[..., None] ** (s - 1.0)


def polar_spec(spec):
    """The polar norm H-degree as a NormSpec (closed form per variant)."""
    if spec.variant == EUCLIDEAN:
        return spec
    if spec.variant == ELLIPSE:
        return NormSpec.ellipse(np.linalg.inv(spec.matrix), spec.dimension)
    return NormSpec.power(spec.conjugate_exponent, spec.dimension)


def eval_H_polar(spec, x):
    """Evaluate the polar norm of ``spec`` at x."""
    return eval_H(polar_spec(spec), x)


def eval_H_polar_grad(spec, x):
    """Gradient of the polar norm at x != 0."""
    return eval_H_grad(polar_spec(spec), x)


def norm_bounds(spec):
    """Constants (gamma, delta) with gamma |xi| <= H(xi) <= delta |xi|."""
    if spec.variant == EUCLIDEAN:
        return 1.0, 1.0
    if spec.variant == ELLIPSE:
        lo, hi = spec._eig_range
        return math.sqrt(lo), math.sqrt(hi)
    s, n = spec.exponent, spec.dimension
    c = n ** (1.0 / s - 0.5)
    # |.|_s <= |.|_2 for s >= 2 and vice versa; c compares the extremes
    if s >= 2.0:
        return c, 1.0
    return 1.0, c


def wulff_measure(spec, n=None):
    """Measure k_n of the unit Wulff shape {H-degree < 1} in closed form."""
    if n is None:
        n = spec.dimension
    if n != spec.dimension:
        raise ValueError("dimension mismatch between norm and request")
    if spec.variant == EUCLIDEAN:
        return _ball_volume(n)
    if spec.variant == ELLIPSE:
        return _ball_volume(n) * math.sqrt(np.linalg.det(spec.matrix))
    sp = spec.conjugate_exponent
    return 2.0 ** n * math.gamma(1.0 + 1.0 / sp) ** n / math.gamma(1.0 + n / sp)


@dataclass(frozen=True)
class Polygon:
    """A simple closed polygon with counterclockwise vertices (no repeat of the first)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite polygon vertex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.signed_area <= 0.0:
            raise ValueError("polygon must be counterclockwise with positive area")
        if not _ShapelyPolygon(v).is_valid:
            raise ValueError("polygon must be simple (non-self-intersecting)")

    @property
    def signed_area(self):
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def area(self):
        return abs(self.signed_area)

    def edge_vectors(self):
        v = self.vertices
        return np.roll(v, -1, axis=0) - v


def anisotropic_perimeter(spec, polygon):
    """Boundary integral of H on the outward unit normal of a polygon.

    By 1-homogeneity H(nu_e) * len(e) = H((dy, -dx)) for edge vector (dx, dy),
    so each edge contributes a single norm evaluation. Zero-length edges are
    skipped.
    """
    if spec.dimension != 2:
        raise ValueError("polygon perimeter requires a planar norm")
    e = polygon.edge_vectors()
    keep = (e * e).sum(axis=1) > 0.0
    e = e[keep]
    outward = np.stack([e[:, 1], -e[:, 0]], axis=-1)
    return float(eval_H(spec, outward).sum())


def isoperimetric_deficit(spec, polygon):
    """P_H(polygon) minus the sharp lower bound n k_n^(1/n) |polygon|^(1-1/n)."""
    if spec.dimension != 2:
        raise ValueError("isoperimetric deficit is implemented for n = 2")
    kn = wulff_measure(spec, 2)
    return anisotropic_perimeter(spec, polygon) - 2.0 * math.sqrt(kn * polygon.area)


def wulff_shape_polygon(spec, radius=1.0, num_vertices=256):
    """Inscribed polygonal approximation of the Wulff shape {H-degree < radius}."""
    if spec.dimension != 2:
        raise ValueError("polygonal Wulff shapes are planar only")
    theta = np.linspace(0.0, 2.0 * math.pi, num_vertices, endpoint=False)
    d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    scale = radius / eval_H_polar(spec, d)
    return Polygon(d * scale[:, None])
