"""Analytical benchmark models and independent ground-truth oracles.

Samplers use the counter-based Philox generator keyed directly by the seed, so
replication tables are reproducible across platforms and parallel schedules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ArgumentError
from .orthobasis import Interval
from .quadrature import gauss_rule

MODEL1_SCALES = {"a": 1.0, "b": 3.0, "c": 5.0}


@dataclass(frozen=True)
class BenchmarkModel:
    name: str
    dim: int
    bounds: tuple  # per-input Interval
    response: Callable  # (n, dim) -> (n,)


def model1(config: str) -> BenchmarkModel:
    """Y = tau_1 + tau_2^4 with independent uniform inputs on (0, u)."""
    if config not in MODEL1_SCALES:
        raise ArgumentError(f"model1 config must be one of {sorted(MODEL1_SCALES)}, got {config!r}")
    u = MODEL1_SCALES[config]
    return BenchmarkModel(
        name=f"model1-{config}",
        dim=2,
        bounds=(Interval(0.0, u), Interval(0.0, u)),
        response=lambda tau: tau[:, 0] + tau[:, 1] ** 4,
    )


def _model2_response(tau: np.ndarray) -> np.ndarray:
    t1, t2 = tau[:, 0], tau[:, 1]
    return (
        0.2 * np.exp(t1 - 3.0)
        + 2.2 * np.abs(t2)
        + 1.3 * t2**6
        - 2.0 * t2**2
        - 0.5 * t2**4
        - 0.5 * t1**4
        + 2.5 * t1**2
        + 0.7 * t1**3
        + 3.0 / ((8.0 * t1 - 2.0) ** 2 + (5.0 * t2 - 3.0) ** 2 + 1.0)
        + np.sin(5.0 * t1) * np.cos(3.0 * t1**2)
    )


def model2() -> BenchmarkModel:
    """Peak-and-valleys model with independent uniform inputs on [-1, 1]."""
    return BenchmarkModel(
        name="model2",
        dim=2,
        bounds=(Interval(-1.0, 1.0), Interval(-1.0, 1.0)),
        response=_model2_response,
    )


def get_model(name: str) -> BenchmarkModel:
    if name.startswith("model1-") and len(name) == len("model1-") + 1:
        return model1(name[-1])
    if name == "model2":
        return model2()
    raise ArgumentError(f"unknown model {name!r}; expected model1-a/b/c or model2")


def sample_model(model: BenchmarkModel, n: int, seed: int):
    """n i.i.d. input rows and responses; bit-reproducible for a fixed seed."""
    if n < 1:
        raise ArgumentError(f"need n >= 1, got {n}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random((n, model.dim))
    lo = np.array([b.lo for b in model.bounds])
    width = np.array([b.width for b in model.bounds])
    tau = lo + width * u
    return tau, model.response(tau)


def true_value_model1(config: str, j: int) -> float:
    """Closed-form E(E(Y|tau_j)^2) for Y = tau_1 + tau_2^4, tau ~ U(0, u).

    For j=1: E((tau_1 + u^4/5)^2) = u^2/3 + 2 (u^4/5)(u/2) + (u^4/5)^2.
    For j=2: E((u/2 + tau_2^4)^2) = (u/2)^2 + 2 (u/2)(u^4/5) + u^8/9.
    """
    if j not in (1, 2):
        raise ArgumentError(f"input index must be 1 or 2, got {j}")
    if config not in MODEL1_SCALES:
        raise ArgumentError(f"unknown config {config!r}")
    u = MODEL1_SCALES[config]
    if j == 1:
        return u**2 / 3.0 + u**5 / 5.0 + (u**4 / 5.0) ** 2
    return (u / 2.0) ** 2 + u**5 / 5.0 + u**8 / 9.0


@lru_cache(maxsize=None)
def _model2_conditional_table(j: int, order: int = 200):
    m = model2()
    rj = gauss_rule(order, m.bounds[j - 1])
    ro = gauss_rule(order, m.bounds[2 - j])
    tj, to = np.meshgrid(rj.nodes, ro.nodes, indexing="ij")
    tau = np.column_stack([tj.ravel(), to.ravel()] if j == 1 else [to.ravel(), tj.ravel()])
    yv = m.response(tau).reshape(order, order)
    cond = yv @ ro.weights / m.bounds[2 - j].width  # E(Y | tau_j = node)
    return rj, cond


@lru_cache(maxsize=None)
def true_value_model2(j: int) -> float:
    """Var(E(Y|tau_j)) for the peak-and-valleys model, by dense tensor quadrature."""
    if j not in (1, 2):
        raise ArgumentError(f"input index must be 1 or 2, got {j}")
    m = model2()
    rj, cond = _model2_conditional_table(j)
    w = rj.weights / m.bounds[j - 1].width
    e1 = float(w @ cond)
    e2 = float(w @ cond**2)
    return e2 - e1**2


@lru_cache(maxsize=None)
def model2_output_moments(order: int = 200):
    """(mean, variance) of the model2 output, by 2D tensor quadrature."""
    m = model2()
    r1 = gauss_rule(order, m.bounds[0])
    r2 = gauss_rule(order, m.bounds[1])
    t1, t2 = np.meshgrid(r1.nodes, r2.nodes, indexing="ij")
    yv = m.response(np.column_stack([t1.ravel(), t2.ravel()])).reshape(order, order)
    w = np.outer(r1.weights, r2.weights) / (m.bounds[0].width * m.bounds[1].width)
    mean = float(np.sum(w * yv))
    var = float(np.sum(w * yv**2)) - mean**2
    return mean, var


@dataclass(frozen=True)
class OracleResult:
    value: float
    stderr: float
    n: int


def pick_freeze_oracle(model: BenchmarkModel, j: int, N: int, seed: int) -> OracleResult:
    """Unbiased Monte-Carlo oracle for E(E(Y|tau_j)^2).

    Averages Y * Y' where Y' shares the j-th input and redraws all others.
    """
    if N < 1000:
        raise ArgumentError(f"oracle needs N >= 1000, got {N}")
    if not 1 <= j <= model.dim:
        raise ArgumentError(f"input index must be in [1, {model.dim}], got {j}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo = np.array([b.lo for b in model.bounds])
    width = np.array([b.width for b in model.bounds])
    tau = lo + width * rng.random((N, model.dim))
    tau_frozen = lo + width * rng.random((N, model.dim))
    tau_frozen[:, j - 1] = tau[:, j - 1]
    prod = model.response(tau) * model.response(tau_frozen)
    value = float(np.mean(prod))
    stderr = float(np.std(prod, ddof=1) / np.sqrt(N))
    return OracleResult(value=value, stderr=stderr, n=N)
