"""Simulation scenarios with covariate- and space-dependent regression structure.

Two families:

``covariate``
    ``x1, x2 ~ U[-1, 1]``, ``x3..x5 ~ N(0, 1)``; weight covariates ``(x1, x2)``.
``spatial``
    locations ``s ~ U[-1, 1]^2``; ``x1, x2`` built from two exponential-kernel
    Gaussian processes with correlation ``rho``; a spatial random effect
    ``w``; weight covariates ``s``. Features are ``(s1, s2, x1..x5)``.

Every dataset carries its noiseless mean in ``truth["mu"]`` (and ``w`` for
the spatial family).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._linalg import FactorizationError, spd_factor
from .dataset import Dataset

FAMILIES = {"covariate": (1, 2), "spatial": (1, 2, 3, 4)}


@dataclass(frozen=True)
class GpKernelSpec:
    """Exponential covariance ``variance * exp(-d / range)``."""

    variance: float = 1.0
    range: float = 0.5

    def __post_init__(self):
        if not (self.variance > 0 and self.range > 0):
            raise ValueError("kernel variance and range must be positive")

    def __call__(self, a, b=None):
        a = np.asarray(a, dtype=float)
        b = a if b is None else np.asarray(b, dtype=float)
        return self.variance * np.exp(-cdist(a, b) / self.range)


def gp_sample(locations, kernel: GpKernelSpec, seed, size=None):
    """Draw from ``N(0, K)`` at ``locations`` via a jittered Cholesky factor.

    ``seed`` is an int or a :class:`numpy.random.Generator`. With ``size``
    set, returns ``size`` independent draws as rows.
    """
    locations = np.asarray(locations, dtype=float)
    if locations.ndim != 2 or locations.shape[0] < 1:
        raise ValueError("locations must be a non-empty m x 2 matrix")
    if not np.all(np.isfinite(locations)):
        raise ValueError("non-finite location")
    m = locations.shape[0]
    K = kernel(locations)
    K[np.diag_indices(m)] += 1e-8 * kernel.variance
    try:
        (L, _), _ = spd_factor(K, start=1e-8, stop=1e-2)
    except FactorizationError as exc:
        raise ValueError(f"GP covariance factorization failed: {exc}") from None
    rng = np.random.default_rng(seed)
    if size is None:
        return L @ rng.standard_normal(m)
    return rng.standard_normal((size, m)) @ L.T


@dataclass(frozen=True)
class ScenarioSpec:
    family: str
    scenario: int
    n: int = 400
    seed: int = 0
    noise_sd: float = 0.7
    gp_range: float = 0.5
    rho: float = 0.2
    effect_scale: float = 0.3  # range of the random-effect kernel
    effect_sd: float = 0.3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown scenario family {self.family!r}")
        if self.scenario not in FAMILIES[self.family]:
            raise ValueError(f"{self.family} scenarios are {FAMILIES[self.family]}, got {self.scenario}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")


def covariate_mean(scenario, x):
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    if scenario == 1:
        return np.where(x1 < 0, 2 * (x1 + x2), 4 * x2**2 - x1)
    if scenario == 2:
        return 2 * (1 + x1) * x2 + (1 - x1) * x3**2
    raise ValueError(f"invalid covariate scenario {scenario}")


def spatial_mean(scenario, s, x, w):
    s1, s2 = s[:, 0], s[:, 1]
    x1, x2, x3, x4, x5 = x.T
    if scenario == 1:
        return w + x3**2 * np.exp(-0.3 * (s1**2 + s2**2)) + s2 * np.sin(2 * x2)
    if scenario == 2:
        return 2 * w + 0.5 * np.sin(np.pi * x1 * x2) + (x3 - 0.5) ** 2 + 0.5 * x4 + 0.25 * x5
    if scenario == 3:
        return 2 * w + (s1 + 1) * x1 + (1 - s1) * x3**2
    if scenario == 4:
        return 2 * (s1 + 1) * w + x1 + (1 - s1) * x3**2
    raise ValueError(f"invalid spatial scenario {scenario}")


def gen_covariate_case(spec: ScenarioSpec) -> Dataset:
    if spec.family != "covariate":
        raise ValueError("gen_covariate_case needs the covariate family")
    rng = np.random.default_rng(spec.seed)
    x = np.column_stack([rng.uniform(-1, 1, (spec.n, 2)), rng.standard_normal((spec.n, 3))])
    mu = covariate_mean(spec.scenario, x)
    y = mu + spec.noise_sd * rng.standard_normal(spec.n)
    names = ("x1", "x2", "x3", "x4", "x5")
    return Dataset(x, x[:, :2], y, names, names[:2], {"mu": mu})


def gen_spatial_case(spec: ScenarioSpec) -> Dataset:
    if spec.family != "spatial":
        raise ValueError("gen_spatial_case needs the spatial family")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    s = rng.uniform(-1, 1, (n, 2))
    cov_kernel = GpKernelSpec(1.0, spec.gp_range)
    z1 = gp_sample(s, cov_kernel, rng)
    z2 = gp_sample(s, cov_kernel, rng)
    w = gp_sample(s, GpKernelSpec(spec.effect_sd**2, spec.effect_scale), rng)
    x1 = z1
    x2 = spec.rho * z1 + np.sqrt(1 - spec.rho**2) * z2
    x = np.column_stack([x1, x2, rng.standard_normal((n, 3))])
    mu = spatial_mean(spec.scenario, s, x, w)
    y = mu + spec.noise_sd * rng.standard_normal(n)
    names = ("s1", "s2", "x1", "x2", "x3", "x4", "x5")
    return Dataset(np.column_stack([s, x]), s, y, names, names[:2], {"mu": mu, "w": w})


def generate(spec: ScenarioSpec) -> Dataset:
    if spec.family == "covariate":
        return gen_covariate_case(spec)
    return gen_spatial_case(spec)
