"""Numerical integration rules.

Gauss-Legendre tensor rules carry the basis-coefficient integrals; adaptive
Simpson handles one-dimensional integrals against the fitted density.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AccuracyWarning, ArgumentError
from .orthobasis import Interval

MAX_SIMPSON_DEPTH = 50


@dataclass(frozen=True)
class QuadratureRule1D:
    nodes: np.ndarray
    weights: np.ndarray
    interval: Interval

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class QuadratureRule2D:
    x: QuadratureRule1D
    y: QuadratureRule1D

    def integrate(self, f) -> float:
        fx = f(self.x.nodes[:, None], self.y.nodes[None, :])
        return float(self.x.weights @ fx @ self.y.weights)


@dataclass(frozen=True)
class QuadratureRule3D:
    x: QuadratureRule1D
    y1: QuadratureRule1D
    y2: QuadratureRule1D

    def integrate(self, f) -> float:
        fx = f(
            self.x.nodes[:, None, None],
            self.y1.nodes[None, :, None],
            self.y2.nodes[None, None, :],
        )
        return float(
            np.einsum("i,j,k,ijk->", self.x.weights, self.y1.weights, self.y2.weights, fx)
        )


def gauss_rule(order: int, interval: Interval) -> QuadratureRule1D:
    """Gauss-Legendre rule mapped to ``interval``.

    Exact for polynomials of degree <= 2*order - 1.
    """
    if order < 1:
        raise ArgumentError(f"quadrature order must be >= 1, got {order}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * interval.width
    mid = 0.5 * (interval.lo + interval.hi)
    return QuadratureRule1D(mid + half * nodes, half * weights, interval)


def gauss_rule_2d(order: int, ix: Interval, iy: Interval) -> QuadratureRule2D:
    return QuadratureRule2D(gauss_rule(order, ix), gauss_rule(order, iy))


def gauss_rule_3d(order: int, ix: Interval, iy: Interval) -> QuadratureRule3D:
    ry = gauss_rule(order, iy)
    return QuadratureRule3D(gauss_rule(order, ix), ry, ry)


def integrate_2d(f, rule: QuadratureRule2D) -> float:
    return rule.integrate(f)


def integrate_3d(f, rule: QuadratureRule3D) -> float:
    return rule.integrate(f)


def adaptive_simpson(f: Callable[[float], float], interval: Interval, tol: float) -> float:
    """Recursive adaptive Simpson with the classical Richardson acceptance test.

    A panel is accepted when |S_left + S_right - S_whole| <= 15 * local tol.
    Hitting the maximum recursion depth emits an :class:`AccuracyWarning`
    instead of failing.
    """
    if tol <= 0:
        raise ArgumentError(f"tolerance must be positive, got {tol}")
    a, b = interval.lo, interval.hi
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    result, exhausted = _simpson_recurse(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
    if exhausted:
        warnings.warn(
            "adaptive Simpson hit maximum recursion depth; requested tolerance "
            "may not be met",
            AccuracyWarning,
            stacklevel=2,
        )
    return result


def _simpson_recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, False
    if depth <= 0:
        return left + right + delta / 15.0, True
    rl, el = _simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
    rr, er = _simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    return rl + rr, el or er
