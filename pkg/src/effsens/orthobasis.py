"""Orthonormal Legendre bases on intervals and their tensor products.

The one-dimensional basis of degree k on [lo, hi] is the shifted Legendre
polynomial P_k rescaled to unit L2 norm under the Lebesgue measure, so that
integrating alpha_j * alpha_k over the interval gives delta_jk exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ArgumentError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo >= self.hi:
            raise ArgumentError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class LegendreBasis1D:
    interval: Interval
    max_degree: int

    def __post_init__(self):
        if self.max_degree < 0:
            raise ArgumentError(f"max_degree must be >= 0, got {self.max_degree}")

    def _check_inside(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(self.interval.contains(x)):
            bad = np.asarray(x)[~self.interval.contains(x)]
            raise ArgumentError(
                f"evaluation point(s) {bad!r} outside interval "
                f"[{self.interval.lo}, {self.interval.hi}]"
            )
        return x

    def table(self, x) -> np.ndarray:
        """Values of all basis functions 0..max_degree at ``x``.

        Returns an array of shape x.shape + (max_degree + 1,), computed with
        the three-term recurrence on the affinely mapped argument.
        """
        x = self._check_inside(x)
        shape = x.shape
        flat = np.atleast_1d(x).ravel()
        t = 2.0 * (flat - self.interval.lo) / self.interval.width - 1.0
        k = self.max_degree + 1
        p = np.empty((flat.size, k))
        p[:, 0] = 1.0
        if k > 1:
            p[:, 1] = t
        for d in range(1, k - 1):
            p[:, d + 1] = ((2 * d + 1) * t * p[:, d] - d * p[:, d - 1]) / (d + 1)
        norms = np.sqrt((2.0 * np.arange(k) + 1.0) / self.interval.width)
        p *= norms
        return p.reshape(shape + (k,))

    def eval(self, degree: int, x) -> float:
        if degree < 0 or degree > self.max_degree:
            raise ArgumentError(
                f"degree {degree} out of range [0, {self.max_degree}]"
            )
        tab = self.table(x)
        val = tab[..., degree]
        return float(val) if np.ndim(val) == 0 else val


def legendre_eval(basis: LegendreBasis1D, degree: int, x: float) -> float:
    """Orthonormal Legendre value; thin alias kept for a functional call style."""
    return basis.eval(degree, x)


@dataclass(frozen=True)
class BasisIndexSet:
    """Rectangular tensor index set {(i_alpha, i_beta) : i_alpha < k_x, i_beta < k_y}."""

    k_x: int
    k_y: int
    pairs: tuple = field(default=None)

    def __post_init__(self):
        if self.k_x < 1 or self.k_y < 1:
            raise ArgumentError("index set needs k_x, k_y >= 1")
        if self.pairs is None:
            object.__setattr__(
                self,
                "pairs",
                tuple((ia, ib) for ia in range(self.k_x) for ib in range(self.k_y)),
            )
        else:
            object.__setattr__(self, "pairs", tuple(self.pairs))
            if len(set(self.pairs)) != len(self.pairs):
                raise ArgumentError("duplicate index pairs")
            for ia, ib in self.pairs:
                if not (0 <= ia < self.k_x and 0 <= ib < self.k_y):
                    raise ArgumentError(f"index pair ({ia}, {ib}) outside grid")

    @property
    def size(self) -> int:
        return len(self.pairs)

    def flatten(self, ia: int, ib: int) -> int:
        return ia * self.k_y + ib


def build_index_set(n2: int, k_override: int | None = None) -> BasisIndexSet:
    """Rectangular k x k index set with k = round(n2**0.25), so |M| ~ sqrt(n2)."""
    if n2 < 4:
        raise ArgumentError(f"main sample size must be >= 4, got {n2}")
    if k_override is not None:
        if k_override < 1:
            raise ArgumentError(f"k_override must be >= 1, got {k_override}")
        k = k_override
    else:
        k = max(1, int(round(n2 ** 0.25)))
    return BasisIndexSet(k_x=k, k_y=k)


def tensor_eval(bx: LegendreBasis1D, by: LegendreBasis1D, index, x, y):
    """Value of the tensor basis function p_(ia,ib)(x, y) = alpha_ia(x) * beta_ib(y)."""
    ia, ib = index
    return bx.eval(ia, x) * by.eval(ib, y)


def project_coefficients(target, M: BasisIndexSet, rule) -> np.ndarray:
    """Projection coefficients a_i = integral of target * p_i over the rectangle.

    ``rule`` is a :class:`~effsens.quadrature.QuadratureRule2D`; ``target`` must
    accept broadcastable arrays. Ordering follows ``M.pairs``.
    """
    rx, ry = rule.x, rule.y
    bx = LegendreBasis1D(rx.interval, M.k_x - 1)
    by = LegendreBasis1D(ry.interval, M.k_y - 1)
    ax = bx.table(rx.nodes) * rx.weights[:, None]  # (Gx, k_x)
    ay = by.table(ry.nodes) * ry.weights[:, None]  # (Gy, k_y)
    fvals = np.asarray(target(rx.nodes[:, None], ry.nodes[None, :]), dtype=float)
    fvals = np.broadcast_to(fvals, (rx.nodes.size, ry.nodes.size))
    grid = ax.T @ fvals @ ay  # (k_x, k_y)
    return np.array([grid[ia, ib] for ia, ib in M.pairs])


def evaluate_projection(coeffs, M: BasisIndexSet, bx: LegendreBasis1D, by: LegendreBasis1D, x, y):
    """Evaluate the truncated expansion sum_i a_i p_i at (x, y)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != M.size:
        raise ArgumentError(
            f"coefficient length {coeffs.shape[0]} does not match |M| = {M.size}"
        )
    tx = np.atleast_2d(bx.table(x))
    ty = np.atleast_2d(by.table(y))
    total = 0.0
    for a, (ia, ib) in zip(coeffs, M.pairs):
        total = total + a * tx[..., ia] * ty[..., ib]
    if np.isscalar(x) and np.isscalar(y):
        return float(np.squeeze(total))
    return np.squeeze(total)
