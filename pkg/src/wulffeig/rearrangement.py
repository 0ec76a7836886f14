"""Masked grid fields, decreasing rearrangement and convex symmetrization.

The central objects are ``ScalarField`` (a function plus a positive weight
sampled on a masked uniform grid, each sample owning measure h^2) and
``DecreasingProfile`` (a right-continuous nonincreasing step function on the
measure axis [0, |Omega|]). Rearrangement inequalities (Hardy-Littlewood,
dominated rearrangement, the symmetrization principle for the gradient
energy) are provided as gap / predicate operations.

Gradients use a single forward-difference stencil on the zero-extended
field; the eigenvalue solver shares it so energies are directly comparable.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import eval_H, eval_H_grad, norm_bounds, wulff_measure

FLOAT_FMT = "%.17g"

# first-order discretization budget for the symmetrization energy gap,
# calibrated on the Euclidean cone (regression constant, not a theorem)
PS_BUDGET_CONSTANT = 5.0


@dataclass
class ScalarField:
    """Scalar samples and a positive weight on a masked uniform 2D grid.

    Cell (i, j) sits at ((i - (nx-1)/2) h, (j - (ny-1)/2) h): the grid block
    is centered at the origin. Values are forced to zero outside the mask.
    """

    h: float
    mask: np.ndarray
    values: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.h <= 0.0 or not np.isfinite(self.h):
            raise ValueError("grid spacing must be positive and finite")
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError("mask must be a 2D array")
        if not self.mask.any():
            raise ValueError("mask must contain at least one cell")
        vals = np.zeros(self.mask.shape, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.mask.shape:
            raise ValueError("values shape must match mask shape")
        if not np.all(np.isfinite(values[self.mask])):
            raise ValueError("non-finite value on a masked cell")
        vals[self.mask] = values[self.mask]
        self.values = vals
        if self.weight is None:
            w = np.where(self.mask, 1.0, 0.0)
        else:
            w = np.asarray(self.weight, dtype=float)
            if w.shape != self.mask.shape:
                raise ValueError("weight shape must match mask shape")
            if not np.all(np.isfinite(w[self.mask])) or np.any(w[self.mask] <= 0.0):
                raise ValueError("weight must be positive and finite on the mask")
            w = np.where(self.mask, w, 0.0)
        self.weight = w

    @property
    def cell_measure(self):
        return self.h * self.h

    @property
    def domain_measure(self):
        return float(self.mask.sum()) * self.cell_measure

    def cell_centers(self):
        nx, ny = self.mask.shape
        x = (np.arange(nx) - (nx - 1) / 2.0) * self.h
        y = (np.arange(ny) - (ny - 1) / 2.0) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def masked_values(self):
        return self.values[self.mask]

    def with_values(self, values):
        return ScalarField(self.h, self.mask, values, self.weight)

    def lp_norm(self, p):
        return float((np.abs(self.masked_values()) ** p).sum() * self.cell_measure) ** (1.0 / p)

    def sup_norm(self):
        return float(np.abs(self.masked_values()).max())

    def weighted_norm(self, q):
        """The weighted Lebesgue norm ||f||_{q,m} of the carried weight m."""
        m = self.weight[self.mask]
        v = np.abs(self.masked_values())
        return float((m * v**q).sum() * self.cell_measure) ** (1.0 / q)

    def save_csv(self, path):
        nx, ny = self.mask.shape
        with open(path, "w") as fh:
            fh.write("h,nx,ny\n")
            fh.write(f"{self.h:.17g},{nx},{ny}\n")
            fh.write("i,j,mask,value,weight\n")
            for i in range(nx):
                for j in range(ny):
                    fh.write(
                        f"{i},{j},{int(self.mask[i, j])},"
                        f"{self.values[i, j]:.17g},{self.weight[i, j]:.17g}\n"
                    )

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip()
            if header.split(",")[:3] != ["h", "nx", "ny"]:
                raise ValueError(f"bad field CSV header in {path}")
            h_str, nx_str, ny_str = fh.readline().strip().split(",")
            h, nx, ny = float(h_str), int(nx_str), int(ny_str)
            fh.readline()  # column header
            mask = np.zeros((nx, ny), dtype=bool)
            values = np.zeros((nx, ny))
            weight = np.ones((nx, ny))
            for line in fh:
                if not line.strip():
                    continue
                i_s, j_s, m_s, v_s, w_s = line.strip().split(",")
                i, j = int(i_s), int(j_s)
                mask[i, j] = bool(int(m_s))
                values[i, j] = float(v_s)
                weight[i, j] = float(w_s)
        weight[~mask] = 1.0  # placeholder outside; constructor zeroes it
        return cls(h, mask, values, weight)


@dataclass
class DecreasingProfile:
    """Right-continuous nonincreasing step function on the measure axis.

    ``values[k]`` is the height on [edges[k], edges[k+1]); lookups are
    clamped to [0, total_measure].
    """

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if e.ndim != 1 or v.ndim != 1 or e.size != v.size + 1 or v.size == 0:
            raise ValueError("need K+1 edges for K step values")
        if e[0] != 0.0 or np.any(np.diff(e) <= 0.0):
            raise ValueError("edges must increase from 0")
        scale = max(abs(float(v[0])), 1.0)
        if np.any(np.diff(v) > 1e-12 * scale):
            raise ValueError("profile values must be nonincreasing")
        if v[-1] < -1e-12 * scale:
            raise ValueError("profile values must be nonnegative")
        self.edges = e
        self.values = v
        self._cum = np.concatenate([[0.0], np.cumsum(v * np.diff(e))])

    @property
    def total_measure(self):
        return float(self.edges[-1])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.edges, np.clip(s, 0.0, self.total_measure), side="right") - 1
        out = self.values[np.clip(idx, 0, self.values.size - 1)]
        return out if out.ndim else float(out)

    def cumulative(self, s):
        """Exact integral of the step profile over [0, s] (clamped)."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.total_measure)
        idx = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, self.values.size - 1)
        out = self._cum[idx] + self.values[idx] * (s - self.edges[idx])
        return out if out.ndim else float(out)

    def integral(self):
        return float(self._cum[-1])

    def power(self, r):
        if r <= 0.0:
            raise ValueError("power transform needs a positive exponent")
        return DecreasingProfile(self.edges, np.maximum(self.values, 0.0) ** r)

    def scaled(self, c):
        if c < 0.0:
            raise ValueError("profiles stay nonnegative; scale factor must be >= 0")
        return DecreasingProfile(self.edges, self.values * c)

    def lp_norm(self, p):
        return self.power(p).integral() ** (1.0 / p)

    def rebinned(self, num_bins):
        """Equal-width rebinning by exact bin averages (stays nonincreasing)."""
        if num_bins < 1:
            raise ValueError("need at least one bin")
        e = np.linspace(0.0, self.total_measure, num_bins + 1)
        c = self.cumulative(e)
        return DecreasingProfile(e, np.diff(c) / np.diff(e))

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("s,value\n")
            for s, v in zip(self.edges[:-1], self.values):
                fh.write(f"{s:.17g},{v:.17g}\n")
            fh.write(f"{self.edges[-1]:.17g},{self.values[-1]:.17g}\n")

    @classmethod
    def load_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        return cls(data[:, 0], data[:-1, 1])


def profile_product(a, b):
    """Pointwise product of two nonincreasing profiles on the union grid."""
    if not np.isclose(a.total_measure, b.total_measure, rtol=1e-10):
        raise ValueError("profiles live on different measure axes")
    e = np.union1d(a.edges, b.edges)
    mid = 0.5 * (e[:-1] + e[1:])
    return DecreasingProfile(e, np.maximum(a(mid), 0.0) * np.maximum(b(mid), 0.0))


def distribution_function(f, t):
    """Measure of the superlevel set {|f| > t}."""
    if t < 0.0:
        raise ValueError("threshold must be nonnegative")
    return float((np.abs(f.masked_values()) > t).sum()) * f.cell_measure


def decreasing_rearrangement(f):
    """Step profile of |f| values sorted descending, each step of width h^2.

    Ties are broken by flat cell index so the profile is deterministic.
    """
    vals = np.abs(f.masked_values())
    order = np.lexsort((np.arange(vals.size), -vals))
    edges = np.arange(vals.size + 1, dtype=float) * f.cell_measure
    return DecreasingProfile(edges, vals[order])


_weight_profile_cache: dict = {}


def weight_profile(f):
    """Decreasing rearrangement of the weight, cached per (mask, weight, h)."""
    key = hashlib.sha1(
        np.float64(f.h).tobytes() + f.mask.tobytes() + f.weight.tobytes()
    ).hexdigest()
    if key not in _weight_profile_cache:
        if len(_weight_profile_cache) > 64:
            _weight_profile_cache.clear()
        _weight_profile_cache[key] = decreasing_rearrangement(f.with_values(f.weight))
    return _weight_profile_cache[key]


def wulff_grid(spec, radius, h, erode=0.0, margin=2):
    """Centered grid mask covering the Wulff shape of the given gauge radius.

    ``erode`` shrinks the mask by that many cell widths measured along the
    Euclidean normal; eigenvalue solves use a calibrated offset (see
    ``domains``), measure-faithful constructions use zero.
    """
    _, delta = norm_bounds(spec)
    half = delta * radius + margin * h
    n = 2 * int(np.ceil(half / h)) + 1
    x = (np.arange(n) - (n - 1) / 2.0) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    gauge = eval_H(_polar_of(spec), pts)
    slack = np.ones_like(gauge)
    nz = gauge > 0.0
    if erode != 0.0:
        grad = eval_H_grad(_polar_of(spec), pts[nz])
        slack_nz = np.sqrt((grad * grad).sum(axis=-1))
        slack[nz] = slack_nz
    mask = gauge + erode * h * slack < radius
    return mask, gauge


def _polar_of(spec):
    from .anisotropy import polar_spec

    return polar_spec(spec)


def convex_symmetrand(profile, spec, h):
    """Wulff-symmetric field with the given profile along the gauge of H.

    The output grid covers the Wulff shape of measure equal to the profile's
    total measure; each cell takes the profile value at k_n * gauge(x)^n.
    """
    if spec.dimension != 2:
        raise ValueError("symmetrands are built on planar grids")
    total = profile.total_measure
    if total <= 0.0:
        raise ValueError("profile must carry positive measure")
    kn = wulff_measure(spec, 2)
    radius = (total / kn) ** 0.5
    mask, gauge = wulff_grid(spec, radius, h)
    values = np.zeros(mask.shape)
    values[mask] = profile(kn * gauge[mask] ** 2)
    return ScalarField(h, mask, values)


def hardy_littlewood_gap(f, g):
    """Integral of the aligned rearrangements minus the integral of |f g|."""
    if f.mask.shape != g.mask.shape or not np.array_equal(f.mask, g.mask):
        raise ValueError("fields must share one grid mask")
    if f.h != g.h:
        raise ValueError("fields must share one grid spacing")
    fv = np.abs(f.masked_values())
    gv = np.abs(g.masked_values())
    paired = float((fv * gv).sum())
    aligned = float((np.sort(fv)[::-1] * np.sort(gv)[::-1]).sum())
    return (aligned - paired) * f.cell_measure


def dominates(f, g, rtol=1e-10):
    """True iff g is dominated by f: cumulative majorization with equal totals."""
    if not np.isclose(f.total_measure, g.total_measure, rtol=1e-10):
        raise ValueError("profiles live on different measure axes")
    s = np.union1d(f.edges, g.edges)
    cf = f.cumulative(s)
    cg = g.cumulative(s)
    scale = max(cf[-1], cg[-1], 1e-300)
    if abs(cf[-1] - cg[-1]) > rtol * scale:
        return False
    return bool(np.all(cg <= cf + rtol * scale))


def convex_order_gap(h_prof, f, g, r):
    """Gap of the convex-order inequality for the power map t -> t^r, r > 1.

    Requires h*g dominated by h*f (checked on the profile products); returns
    None when the precondition fails, so callers can report the comparison
    as inapplicable rather than failed.
    """
    if r <= 1.0:
        raise ValueError("the convex map registry holds powers t^r with r > 1")
    hf = profile_product(h_prof, f)
    hg = profile_product(h_prof, g)
    if not dominates(hf, hg):
        return None
    upper = profile_product(h_prof, f.power(r)).integral()
    lower = profile_product(h_prof, g.power(r)).integral()
    return upper - lower


def gradient_sites(f):
    """Forward differences of the zero-extended field, collocated per padded node.

    Returns an array of shape (nx+1, ny+1, 2); site (a, b) differences the
    padded field at (a, b) against (a+1, b) and (a, b+1).
    """
    nx, ny = f.mask.shape
    arr = np.zeros((nx + 2, ny + 2))
    arr[1:-1, 1:-1] = f.values
    gx = (arr[1:, :-1] - arr[:-1, :-1]) / f.h
    gy = (arr[:-1, 1:] - arr[:-1, :-1]) / f.h
    return np.stack([gx, gy], axis=-1)


def dirichlet_energy(f, spec, p):
    """Integral of H(grad f)^p with the shared forward-difference stencil."""
    if p <= 1.0:
        raise ValueError("energy exponent must satisfy p > 1")
    g = gradient_sites(f)
    hn = eval_H(spec, g)
    return float((hn**p).sum()) * f.cell_measure


def polya_szego_gap(f, spec, p):
    """Energy of f minus the energy of its convex symmetrand (same h)."""
    if np.any(f.masked_values() < 0.0):
        raise ValueError("symmetrization gap is defined for nonnegative fields")
    star = convex_symmetrand(decreasing_rearrangement(f), spec, f.h)
    return dirichlet_energy(f, spec, p) - dirichlet_energy(star, spec, p)


def polya_szego_budget(f, spec, p):
    """Discretization allowance for the symmetrization gap: C * h * energy scale."""
    return PS_BUDGET_CONSTANT * f.h * dirichlet_energy(f, spec, p)
