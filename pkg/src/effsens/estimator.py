"""Efficient estimation of conditional-moment functionals and Sobol indices.

The target is T(f) = E(psi(E(phi(Y)|X))). The estimate combines a linear term,
the sample mean of H over the main split, with the quadratic correction given
by the crossed U-statistic with kernel K built from the preliminary density.
First-order Sobol indices are the specialization psi(t) = t^2, phi = identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .density import (
    ConditionalMomentCache,
    DensityEstimate,
    Domain,
    fit_kde,
    infer_domain,
    silverman_bandwidth,
    split_sizes,
)
from .errors import ArgumentError, ConfigurationError, DataError
from .orthobasis import BasisIndexSet, Interval, LegendreBasis1D, build_index_set
from .quadfunc import SymmetricKernel, estimate_theta, lambda_plugin
from .quadrature import gauss_rule

Z_95 = 1.959963984540054

# The quadratic kernel is switched off where the fitted X-marginal drops
# below this fraction of the uniform level (see k_kernel).
SUPPORT_FRACTION = 0.35

# The x-bandwidth is floored at this multiple of the largest spacing of the
# preliminary x-points (domain edges included).  The kernel has compact
# support, so without the floor a spacing wider than 2h leaves the fitted
# X-marginal near zero between points, and the 1/marginal factors in the
# conditional mean and the quadratic kernel amplify that gap into arbitrarily
# large terms.
GAP_FLOOR_FACTOR = 1.5


@dataclass(frozen=True)
class FunctionalSpec:
    """The function pair (psi, phi) with psi's first two derivatives.

    phi must satisfy phi_bounds[0] <= phi <= phi_bounds[1] on the y-domain;
    psi must be smooth on [phi_bounds[0], phi_bounds[1]].
    """

    psi: Callable
    psi_d1: Callable
    psi_d2: Callable
    phi: Callable
    phi_bounds: tuple

    def __post_init__(self):
        lo, hi = self.phi_bounds
        if not lo < hi:
            raise ConfigurationError(f"phi_bounds must satisfy lo < hi, got {self.phi_bounds}")

    def validate_derivatives(self, seed: int = 0, rel_tol: float = 1e-4):
        """Central finite-difference consistency check of psi_d1 and psi_d2."""
        lo, hi = self.phi_bounds
        rng = np.random.Generator(np.random.Philox(key=seed))
        eps = 1e-5 * (hi - lo)
        xs = lo + eps + (hi - lo - 2 * eps) * rng.random(100)
        scale = max(1.0, float(np.max(np.abs(self._v(self.psi_d1, xs)))))
        fd1 = (self._v(self.psi, xs + eps) - self._v(self.psi, xs - eps)) / (2 * eps)
        if np.max(np.abs(fd1 - self._v(self.psi_d1, xs))) > rel_tol * scale:
            raise ConfigurationError("psi_d1 inconsistent with psi under finite differences")
        scale2 = max(1.0, float(np.max(np.abs(self._v(self.psi_d2, xs)))))
        fd2 = (
            self._v(self.psi, xs + eps) - 2 * self._v(self.psi, xs) + self._v(self.psi, xs - eps)
        ) / eps**2
        if np.max(np.abs(fd2 - self._v(self.psi_d2, xs))) > rel_tol * scale2:
            raise ConfigurationError("psi_d2 inconsistent with psi under finite differences")

    @staticmethod
    def _v(f, xs):
        return np.broadcast_to(np.asarray(f(xs), dtype=float), xs.shape)

    @classmethod
    def second_moment(cls, phi_bounds) -> "FunctionalSpec":
        """psi(t) = t^2, phi = identity: the Sobol-index specialization."""
        return cls(
            psi=lambda t: t * t,
            psi_d1=lambda t: 2.0 * t,
            psi_d2=lambda t: 2.0 * np.ones_like(np.asarray(t, dtype=float)),
            phi=lambda y: y,
            phi_bounds=(float(phi_bounds[0]), float(phi_bounds[1])),
        )


@dataclass(frozen=True)
class EstimatorConfig:
    seed: int = 0
    k_override: Optional[int] = None
    bandwidths: Optional[tuple] = None
    quad_order: int = 32
    pad_fraction: float = 0.0
    domain: Optional[Domain] = None
    mean_grid_nx: int = 257
    mean_grid_ny: int = 64

    def echo(self) -> dict:
        d = {
            "seed": self.seed,
            "k_override": self.k_override,
            "bandwidths": list(self.bandwidths) if self.bandwidths else None,
            "quad_order": self.quad_order,
            "pad_fraction": self.pad_fraction,
            "mean_grid_nx": self.mean_grid_nx,
            "mean_grid_ny": self.mean_grid_ny,
        }
        if self.domain is not None:
            d["domain"] = [
                [self.domain.x.lo, self.domain.x.hi],
                [self.domain.y.lo, self.domain.y.hi],
            ]
        return d


@dataclass
class SobolBlock:
    index_raw: float
    index_clipped: float
    mean_y: float
    var_y: float
    degenerate: bool = False


@dataclass
class EstimateReport:
    t_hat: float
    linear_term: float
    quadratic_term: float
    variance_hat: float
    ci_95: tuple
    diagnostics: dict
    config_echo: dict
    sobol: Optional[SobolBlock] = None


def _moments(de_or_cache, spec: FunctionalSpec):
    if isinstance(de_or_cache, ConditionalMomentCache):
        return de_or_cache
    return de_or_cache.moment_cache(spec.phi, spec.phi_bounds)


def h_term(de_or_cache, spec: FunctionalSpec, x, y):
    """Linear expansion term H = [phi(y) - m(x)] psi'(m(x)) + psi(m(x))."""
    cache = _moments(de_or_cache, spec)
    m = cache.mean(x)
    phi_y = spec.phi(np.asarray(y, dtype=float))
    return (phi_y - m) * spec.psi_d1(m) + spec.psi(m)


def k_kernel(de_or_cache, spec: FunctionalSpec) -> SymmetricKernel:
    """Quadratic expansion kernel K(x, y, z), symmetric in (y, z) by construction.

    The kernel is zeroed wherever the fitted X-marginal falls below a small
    fraction of the uniform level 1/width(X).  The quadratic correction is only
    meaningful on the estimated support of the density; outside it the
    1/marginal factor amplifies clamp-floor noise without limit, so those
    regions are excluded from the correction rather than divided through.
    """
    cache = _moments(de_or_cache, spec)
    de = cache.de
    marg_cutoff = SUPPORT_FRACTION / de.domain.x.width

    def fn(x, y1, y2):
        m = cache.mean(x)
        marg = cache.marginal(x)
        inside = marg > marg_cutoff
        value = 0.5 * spec.psi_d2(m) / np.where(inside, marg, 1.0) * (
            m - spec.phi(np.asarray(y1, dtype=float))
        ) * (m - spec.phi(np.asarray(y2, dtype=float)))
        return np.where(inside, value, 0.0)

    lo, hi = spec.phi_bounds
    grid = np.linspace(lo, hi, 201)
    sup_d2 = float(np.max(np.abs(np.broadcast_to(np.asarray(spec.psi_d2(grid), dtype=float), grid.shape))))
    sup = 0.5 * sup_d2 * (hi - lo) ** 2 / (de.floor * de.domain.y.width)
    return SymmetricKernel(fn=fn, sup_bound=sup)


def c_plugin(de_or_cache, spec: FunctionalSpec, order: int = 32) -> float:
    """Plug-in asymptotic variance C = E(Var(phi(Y)|X) psi'(m(X))^2) + Var(psi(m(X)))."""
    cache = _moments(de_or_cache, spec)
    de = cache.de
    rx = gauss_rule(order, de.domain.x)
    ry = gauss_rule(order, de.domain.y)
    fvals = de.pdf_grid(rx.nodes, ry.nodes)
    fx = fvals @ ry.weights  # marginal density of X at the x nodes
    m = cache.mean(rx.nodes)
    v = cache.second_moment(rx.nodes)
    cond_var = np.maximum(v - m * m, 0.0)
    psi_m = np.broadcast_to(np.asarray(spec.psi(m), dtype=float), m.shape)
    d1_m = np.broadcast_to(np.asarray(spec.psi_d1(m), dtype=float), m.shape)
    first = float(rx.weights @ (cond_var * d1_m**2 * fx))
    e_psi = float(rx.weights @ (psi_m * fx))
    e_psi2 = float(rx.weights @ (psi_m**2 * fx))
    return max(first + e_psi2 - e_psi**2, 0.0)


def _validate_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ArgumentError("sample must be two equal-length 1-d arrays")
    bad = ~(np.isfinite(x) & np.isfinite(y))
    if np.any(bad):
        raise DataError(f"non-finite value in sample at row {int(np.argmax(bad))}")
    return x, y


def _default_bandwidths(xp, yp, domain) -> tuple:
    """Silverman bandwidths, with the x-axis floored by the largest point gap.

    The y-axis needs no floor: every 1/density denominator in the pipeline is
    an integral over y, so only gaps along x can empty it out.
    """
    hx = silverman_bandwidth(xp, domain.x.width)
    hy = silverman_bandwidth(yp, domain.y.width)
    edges = np.concatenate([[domain.x.lo], np.sort(xp), [domain.x.hi]])
    hx = max(hx, GAP_FLOOR_FACTOR * float(np.diff(edges).max()))
    return (min(hx, 0.25 * domain.x.width), hy)


def estimate_T(x, y, spec: FunctionalSpec, config: EstimatorConfig = EstimatorConfig()) -> EstimateReport:
    """Full pipeline: split, preliminary density, linear + quadratic terms, CI."""
    x, y = _validate_xy(x, y)
    n = x.size
    if n < 40:
        raise ConfigurationError(f"need n >= 40, got {n}")
    domain = config.domain or infer_domain(x, y, config.pad_fraction)
    n1, n2 = split_sizes(n)
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    perm = rng.permutation(n)
    xp, yp = x[perm[:n1]], y[perm[:n1]]
    xm, ym = x[perm[n1:]], y[perm[n1:]]
    de = fit_kde(xp, yp, domain, config.bandwidths or _default_bandwidths(xp, yp, domain))
    cache = de.moment_cache(spec.phi, spec.phi_bounds, config.mean_grid_nx, config.mean_grid_ny)

    linear = float(np.mean(h_term(cache, spec, xm, ym)))
    eta = k_kernel(cache, spec)
    M = build_index_set(n2, config.k_override)
    bx = LegendreBasis1D(domain.x, M.k_x - 1)
    by = LegendreBasis1D(domain.y, M.k_y - 1)
    theta = estimate_theta(xm, ym, eta, M, bx, by, order=config.quad_order)
    var_hat = c_plugin(cache, spec, order=config.quad_order)
    t_hat = linear + theta.value
    half = Z_95 * np.sqrt(var_hat / n2)
    return EstimateReport(
        t_hat=t_hat,
        linear_term=linear,
        quadratic_term=theta.value,
        variance_hat=var_hat,
        ci_95=(t_hat - half, t_hat + half),
        diagnostics={
            "n": n,
            "n1": n1,
            "n2": n2,
            "m_size": M.size,
            "bandwidths": list(de.bandwidths),
            "domain": [[domain.x.lo, domain.x.hi], [domain.y.lo, domain.y.hi]],
        },
        config_echo=config.echo(),
    )


def sobol_first_order(inputs, output, j: int,
                      config: EstimatorConfig = EstimatorConfig()) -> EstimateReport:
    """First-order Sobol index of input column j.

    Runs the functional estimator with psi(t) = t^2 and phi = identity on the
    pair (inputs[:, j], output) and normalizes with the full-sample moments.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    output = np.asarray(output, dtype=float)
    if inputs.ndim != 2 or inputs.shape[0] != output.size:
        raise ArgumentError("inputs must be (n, l) with one output per row")
    if not 0 <= j < inputs.shape[1]:
        raise ArgumentError(f"column index {j} out of range [0, {inputs.shape[1]})")
    x = inputs[:, j]
    _validate_xy(x, output)
    mean_y = float(np.mean(output))
    var_y = float(np.var(output, ddof=1)) if output.size > 1 else 0.0
    if var_y <= 0 or float(np.var(x, ddof=1)) <= 0:
        warnings.warn(
            "degenerate input/output column: Sobol index defined as 0",
            UserWarning,
            stacklevel=2,
        )
        return EstimateReport(
            t_hat=mean_y**2,
            linear_term=mean_y**2,
            quadratic_term=0.0,
            variance_hat=0.0,
            ci_95=(mean_y**2, mean_y**2),
            diagnostics={"n": output.size, "degenerate": True},
            config_echo=config.echo(),
            sobol=SobolBlock(0.0, 0.0, mean_y, var_y, degenerate=True),
        )
    domain = config.domain or infer_domain(x, output, config.pad_fraction)
    spec = FunctionalSpec.second_moment((domain.y.lo, domain.y.hi))
    cfg = EstimatorConfig(
        seed=config.seed,
        k_override=config.k_override,
        bandwidths=config.bandwidths,
        quad_order=config.quad_order,
        pad_fraction=config.pad_fraction,
        domain=domain,
        mean_grid_nx=config.mean_grid_nx,
        mean_grid_ny=config.mean_grid_ny,
    )
    report = estimate_T(x, output, spec, cfg)
    raw = (report.t_hat - mean_y**2) / var_y
    report.sobol = SobolBlock(
        index_raw=raw,
        index_clipped=float(np.clip(raw, 0.0, 1.0)),
        mean_y=mean_y,
        var_y=var_y,
    )
    return report
