"""Built-in domain generators on centered uniform grids.

All shapes are centered at the origin. Axis-aligned shapes are laid out so
the zero ghost cells of the forward-difference stencil land exactly on the
boundary. Curved boundaries are eroded by ``BOUNDARY_OFFSET`` cell widths
along the Euclidean normal, an offset calibrated so masked Dirichlet
eigenvalues match continuum values to a few tenths of a percent at h = 1/64.
"""

import numpy as np

from .anisotropy import NormSpec
from .rearrangement import ScalarField, wulff_grid

BOUNDARY_OFFSET = 0.35


def _attach_weight(h, mask, weight):
    if weight is None:
        w = None
    elif callable(weight):
        nx, ny = mask.shape
        x = (np.arange(nx) - (nx - 1) / 2.0) * h
        y = (np.arange(ny) - (ny - 1) / 2.0) * h
        X, Y = np.meshgrid(x, y, indexing="ij")
        w = np.where(mask, weight(X, Y), 0.0)
    else:
        w = np.where(mask, float(weight), 0.0)
    return ScalarField(h, mask, np.zeros(mask.shape), w)


def rectangle(a, b, h, weight=None):
    """Axis-aligned a x b rectangle; side lengths are rounded to multiples of h."""
    na, nb = round(a / h), round(b / h)
    if na < 2 or nb < 2:
        raise ValueError("rectangle sides must span at least two cells")
    mask = np.ones((na - 1, nb - 1), dtype=bool)
    return _attach_weight(h, mask, weight)


def square(side, h, weight=None):
    return rectangle(side, side, h, weight)


def wulff_domain(spec, radius, h, weight=None, erode=BOUNDARY_OFFSET):
    """Wulff shape {gauge < radius} of the given norm."""
    mask, _ = wulff_grid(spec, radius, h, erode=erode)
    if not mask.any():
        raise ValueError("grid too coarse for the requested Wulff shape")
    return _attach_weight(h, mask, weight)


def disk(radius, h, weight=None, erode=BOUNDARY_OFFSET):
    return wulff_domain(NormSpec.euclidean(2), radius, h, weight, erode)


def annulus(r_in, r_out, h, weight=None, erode=BOUNDARY_OFFSET):
    """Euclidean annulus r_in < |x| < r_out."""
    if not 0.0 < r_in < r_out:
        raise ValueError("annulus needs 0 < r_in < r_out")
    mask, gauge = wulff_grid(NormSpec.euclidean(2), r_out, h, erode=erode)
    mask &= gauge > r_in + erode * h
    if not mask.any():
        raise ValueError("grid too coarse for the requested annulus")
    return _attach_weight(h, mask, weight)
