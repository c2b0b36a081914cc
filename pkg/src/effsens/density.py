"""Preliminary density estimate: boundary-corrected bivariate Epanechnikov KDE.

The estimate is fitted on the preliminary split only. Mirror reflection at the
four rectangle edges keeps the mass inside the domain, a floor clamp keeps the
density (and hence every conditional denominator) bounded away from zero, and
two renormalization passes keep the total mass at one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConfigurationError
from .orthobasis import Interval
from .quadrature import adaptive_simpson, gauss_rule

NORMALIZATION_ORDER = 64
MARGINAL_SIMPSON_TOL = 1e-8


@dataclass(frozen=True)
class Domain:
    x: Interval
    y: Interval

    @property
    def area(self) -> float:
        return self.x.width * self.y.width


def _padded_interval(values: np.ndarray, pad_fraction: float) -> Interval:
    lo, hi = float(np.min(values)), float(np.max(values))
    rng = hi - lo
    if rng > 0:
        pad = pad_fraction * rng
    else:
        pad = max(abs(lo), 1.0) * pad_fraction
    if rng + 2 * pad <= 0:
        raise ArgumentError(
            "degenerate axis (all values equal) needs pad_fraction > 0 to form a domain"
        )
    return Interval(lo - pad, hi + pad)


def infer_domain(x, y, pad_fraction: float = 0.0) -> Domain:
    """Axis-aligned bounding rectangle of the sample, padded per axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ArgumentError("cannot infer a domain from an empty sample")
    if pad_fraction < 0:
        raise ArgumentError(f"pad_fraction must be >= 0, got {pad_fraction}")
    return Domain(_padded_interval(x, pad_fraction), _padded_interval(y, pad_fraction))


def silverman_bandwidth(values: np.ndarray, width: float) -> float:
    """1.06 * sigma * n^(-1/5), truncated to a quarter of the axis width."""
    n = values.size
    sigma = float(np.std(values, ddof=1)) if n > 1 else 0.0
    h = 1.06 * sigma * n ** (-0.2)
    if h <= 0:
        h = 0.25 * width
    return min(h, 0.25 * width)


def _axis_kernel_matrix(points, data, h, lo, hi):
    """Mirror-corrected Epanechnikov kernel values, shape (len(points), len(data))."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))[:, None]
    centers = np.stack([data, 2.0 * lo - data, 2.0 * hi - data])
    out = np.zeros((pts.shape[0], data.size))
    for c in centers:
        u = (pts - c[None, :]) / h
        out += np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return out / h


class DensityEstimate:
    """Fitted bivariate density with cached normalization constants.

    Immutable after construction; all evaluators are pure.
    """

    def __init__(self, xs, ys, domain: Domain, bandwidths=None):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.size < 10:
            raise ConfigurationError(
                f"preliminary sample must have >= 10 points, got {xs.size}"
            )
        if xs.shape != ys.shape:
            raise ArgumentError("x and y arrays must have equal length")
        inside = domain.x.contains(xs) & domain.y.contains(ys)
        if not np.all(inside):
            idx = int(np.argmin(inside))
            raise ArgumentError(
                f"preliminary point ({xs[idx]}, {ys[idx]}) lies outside the domain"
            )
        self.domain = domain
        self.xs = xs
        self.ys = ys
        if bandwidths is None:
            hx = silverman_bandwidth(xs, domain.x.width)
            hy = silverman_bandwidth(ys, domain.y.width)
        else:
            hx, hy = bandwidths
            if hx <= 0 or hy <= 0:
                raise ConfigurationError(f"bandwidths must be positive, got {bandwidths}")
        self.bandwidths = (float(hx), float(hy))
        self.floor = 1e-6 / domain.area
        self._rx = gauss_rule(NORMALIZATION_ORDER, domain.x)
        self._ry = gauss_rule(NORMALIZATION_ORDER, domain.y)
        raw = self._raw_grid(self._rx.nodes, self._ry.nodes)
        self._z1 = float(self._rx.weights @ raw @ self._ry.weights)
        clamped = np.maximum(raw / self._z1, self.floor)
        self._z2 = float(self._rx.weights @ clamped @ self._ry.weights)

    # -- raw (pre-clamp) evaluation ------------------------------------------------

    def _kx(self, x):
        return _axis_kernel_matrix(x, self.xs, self.bandwidths[0], self.domain.x.lo, self.domain.x.hi)

    def _ky(self, y):
        return _axis_kernel_matrix(y, self.ys, self.bandwidths[1], self.domain.y.lo, self.domain.y.hi)

    def _raw_grid(self, xg, yg):
        return self._kx(xg) @ self._ky(yg).T / self.xs.size

    # -- public evaluators ---------------------------------------------------------

    def pdf_grid(self, xg, yg) -> np.ndarray:
        """Density on the tensor grid xg x yg, shape (len(xg), len(yg))."""
        self._check_domain(xg, yg=None)
        self._check_domain(None, yg)
        raw = self._raw_grid(np.asarray(xg, dtype=float), np.asarray(yg, dtype=float))
        return np.maximum(raw / self._z1, self.floor) / self._z2

    def pdf(self, x, y):
        """Pointwise density; x and y broadcast elementwise."""
        self._check_domain(x, y)
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        raw = np.einsum("ij,ij->i", self._kx(x.ravel()), self._ky(y.ravel())) / self.xs.size
        out = np.maximum(raw / self._z1, self.floor) / self._z2
        return float(out[0]) if scalar else out.reshape(x.shape)

    def _check_domain(self, x=None, yg=None):
        if x is not None and not np.all(self.domain.x.contains(x)):
            raise ArgumentError("x value outside domain")
        if yg is not None and not np.all(self.domain.y.contains(yg)):
            raise ArgumentError("y value outside domain")

    def marginal_x(self, x: float) -> float:
        """Integral of the density over y at fixed x, via adaptive Simpson."""
        self._check_domain(x, None)
        val = adaptive_simpson(
            lambda y: float(self.pdf(x, y)), self.domain.y, MARGINAL_SIMPSON_TOL
        )
        return max(val, self.floor * self.domain.y.width)

    def conditional_mean(self, phi, phi_bounds, x: float) -> float:
        """Smoothed conditional expectation of phi(Y) given X = x, clamped to phi_bounds."""
        lo, hi = phi_bounds
        num = adaptive_simpson(
            lambda y: phi(y) * float(self.pdf(x, y)), self.domain.y, MARGINAL_SIMPSON_TOL
        )
        m = num / self.marginal_x(x)
        return min(max(m, lo), hi)

    def conditional_second_moment(self, phi, phi_bounds, x: float) -> float:
        lo, hi = phi_bounds
        num = adaptive_simpson(
            lambda y: phi(y) ** 2 * float(self.pdf(x, y)), self.domain.y, MARGINAL_SIMPSON_TOL
        )
        v = num / self.marginal_x(x)
        lo2, hi2 = _square_bounds(lo, hi)
        return min(max(v, lo2), hi2)

    def moment_cache(self, phi, phi_bounds, nx: int = 257, ny: int = 64) -> "ConditionalMomentCache":
        return ConditionalMomentCache(self, phi, phi_bounds, nx, ny)


def _square_bounds(lo, hi):
    hi2 = max(lo * lo, hi * hi)
    lo2 = 0.0 if lo <= 0.0 <= hi else min(lo * lo, hi * hi)
    return lo2, hi2


class ConditionalMomentCache:
    """Vectorized m(x), v(x) and marginal(x) via a dense x-grid.

    The adaptive-Simpson evaluators above are the reference; the cache replaces
    the inner y-integral by a fixed Gauss rule and interpolates linearly in x,
    which is what the bulk estimator paths use.
    """

    def __init__(self, de: DensityEstimate, phi, phi_bounds, nx: int, ny: int):
        self.de = de
        self.phi_bounds = (float(phi_bounds[0]), float(phi_bounds[1]))
        dom = de.domain
        self.xg = np.linspace(dom.x.lo, dom.x.hi, nx)
        ry = gauss_rule(ny, dom.y)
        fvals = de.pdf_grid(self.xg, ry.nodes)  # (nx, ny)
        phi_y = np.asarray(phi(ry.nodes), dtype=float)
        phi_y = np.broadcast_to(phi_y, ry.nodes.shape)
        marg = fvals @ ry.weights
        self._marg = np.maximum(marg, de.floor * dom.y.width)
        lo, hi = self.phi_bounds
        self._m = np.clip(fvals @ (ry.weights * phi_y) / self._marg, lo, hi)
        lo2, hi2 = _square_bounds(lo, hi)
        self._v = np.clip(fvals @ (ry.weights * phi_y ** 2) / self._marg, lo2, hi2)

    def marginal(self, x):
        return np.interp(x, self.xg, self._marg)

    def mean(self, x):
        return np.interp(x, self.xg, self._m)

    def second_moment(self, x):
        return np.interp(x, self.xg, self._v)


def fit_kde(x, y, domain: Domain, bandwidths=None) -> DensityEstimate:
    """Fit the boundary-corrected KDE on the preliminary split."""
    return DensityEstimate(x, y, domain, bandwidths)


def split_sizes(n: int) -> tuple[int, int]:
    """Preliminary/main split: n1 = max(ceil(n / log n), 20), n2 = n - n1."""
    if n < 40:
        raise ConfigurationError(f"need n >= 40 to split the sample, got {n}")
    n1 = max(math.ceil(n / math.log(n)), 20)
    return n1, n - n1
