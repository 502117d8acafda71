"""Gaussian radial basis functions over the weight-covariate space.

Centers come from Lloyd's k-means, an equally spaced grid over the data's
bounding box, or (``product`` placement) the Cartesian product of k-means
centers fitted separately on blocks of columns, e.g. space and time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    wcss: list  # within-cluster sum of squares after each iteration
    n_iter: int
    converged: bool


def _sq_dists(points, centers):
    d = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def kmeans_fit(points, k, seed=0, max_iter=100) -> KMeansResult:
    """Lloyd's algorithm from ``k`` distinct data points chosen at random.

    Empty clusters are re-seeded with the point farthest from its current
    center. Iteration stops when assignments no longer change.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if k <= 0:
        raise BasisError(f"k must be positive, got {k}")
    if max_iter < 1:
        raise BasisError(f"max_iter must be >= 1, got {max_iter}")
    distinct = np.unique(points, axis=0)
    if k > distinct.shape[0]:
        raise BasisError(f"k={k} exceeds the number of distinct points ({distinct.shape[0]})")

    rng = np.random.default_rng(seed)
    centers = distinct[np.sort(rng.choice(distinct.shape[0], size=k, replace=False))].copy()
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    wcss = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
        # re-seed empty clusters one at a time from the worst-fit point
        for c in range(k):
            if not np.any(labels == c):
                resid = np.einsum("ij,ij->i", points - centers[labels], points - centers[labels])
                far = int(np.argmax(resid))
                centers[c] = points[far]
                labels[far] = c
        d2 = _sq_dists(points, centers)
        new_labels = np.argmin(d2, axis=1)
        wcss.append(float(d2[np.arange(len(points)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    return KMeansResult(centers, labels, wcss, it, converged)


def kmeans(points, k, seed=0, max_iter=100) -> np.ndarray:
    """Return the ``k`` cluster centers found by :func:`kmeans_fit`."""
    return kmeans_fit(points, k, seed, max_iter).centers


@dataclass(frozen=True)
class BasisSpec:
    """How to place basis centers.

    ``placement`` is ``"kmeans"``, ``"grid"`` or ``"product"``. For
    ``product``, ``blocks`` lists the weight-covariate columns of each block,
    ``block_counts`` the k-means cluster count per block (so
    ``M = prod(block_counts)``) and ``bandwidths`` one value per block.
    ``grid_counts`` gives per-dimension grid sizes for ``grid``. ``M = 0``
    means no basis at all (constant weights).
    """

    placement: str = "kmeans"
    M: int = 10
    bandwidths: tuple = (1.0,)
    blocks: tuple | None = None
    block_counts: tuple | None = None
    grid_counts: tuple | None = None
    kmeans_seed: int = 0
    kmeans_max_iter: int = 100

    def __post_init__(self):
        bw = self.bandwidths
        bw = (float(bw),) if np.isscalar(bw) else tuple(float(b) for b in bw)
        object.__setattr__(self, "bandwidths", bw)
        if self.placement not in ("kmeans", "grid", "product"):
            raise BasisError(f"unknown placement {self.placement!r}")
        if any(not b > 0 for b in bw) or not bw:
            raise BasisError(f"bandwidths must be positive, got {bw}")
        if self.placement == "product":
            if self.blocks is None or self.block_counts is None:
                raise BasisError("product placement needs blocks and block_counts")
            blocks = tuple(tuple(int(c) for c in b) for b in self.blocks)
            counts = tuple(int(c) for c in self.block_counts)
            object.__setattr__(self, "blocks", blocks)
            object.__setattr__(self, "block_counts", counts)
            if len(counts) != len(blocks) or len(bw) != len(blocks):
                raise BasisError("blocks, block_counts and bandwidths must have equal length")
            if int(np.prod(counts)) != self.M:
                raise BasisError(f"block counts {counts} do not multiply to M={self.M}")
        elif len(bw) != 1:
            raise BasisError(f"{self.placement} placement takes a single bandwidth")
        if self.M < 0:
            raise BasisError(f"M must be >= 0, got {self.M}")
        if self.grid_counts is not None:
            object.__setattr__(self, "grid_counts", tuple(int(c) for c in self.grid_counts))


@dataclass(frozen=True)
class BasisEvaluator:
    """``M`` Gaussian bumps. ``blocks`` partitions the columns; each block
    has its own bandwidth."""

    centers: np.ndarray
    blocks: tuple
    bandwidths: tuple

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.ndim != 2:
            raise BasisError("centers must be an M x d~ matrix")
        if not np.all(np.isfinite(c)):
            raise BasisError("non-finite basis center")
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        bws = tuple(float(h) for h in self.bandwidths)
        cols = sorted(i for b in blocks for i in b)
        if cols != list(range(c.shape[1])):
            raise BasisError(f"blocks {blocks} do not partition {c.shape[1]} columns")
        if len(bws) != len(blocks) or any(not h > 0 for h in bws):
            raise BasisError("one positive bandwidth per block required")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "bandwidths", bws)

    @property
    def M(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    def __call__(self, xtilde):
        return eval_basis(self, xtilde)

    def scaled(self, c):
        """Evaluator returning ``c`` times this one's output."""
        return ScaledBasis(self, float(c))


@dataclass(frozen=True)
class ScaledBasis:
    base: BasisEvaluator
    scale: float

    @property
    def M(self):
        return self.base.M

    @property
    def dim(self):
        return self.base.dim

    def __call__(self, xtilde):
        return self.scale * eval_basis(self.base, xtilde)


def _grid_centers(points, counts):
    lo, hi = points.min(axis=0), points.max(axis=0)
    axes = [np.linspace(a, b, c) if c > 1 else np.array([(a + b) / 2]) for a, b, c in zip(lo, hi, counts)]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, points.shape[1])


def build_basis(spec: BasisSpec, points) -> BasisEvaluator:
    """Place basis centers for ``spec`` using the weight-covariate rows ``points``."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 0:
        raise BasisError("no points to place basis centers")
    d = points.shape[1]
    whole = (tuple(range(d)),)

    if spec.M == 0:
        return BasisEvaluator(np.empty((0, d)), whole, spec.bandwidths[:1])

    if spec.placement == "kmeans":
        centers = kmeans(points, spec.M, spec.kmeans_seed, spec.kmeans_max_iter)
        return BasisEvaluator(centers, whole, spec.bandwidths)

    if spec.placement == "grid":
        counts = spec.grid_counts
        if counts is None:
            per = round(spec.M ** (1.0 / d))
            if per ** d != spec.M:
                raise BasisError(f"M={spec.M} is not a perfect {d}-th power; give grid_counts")
            counts = (per,) * d
        if len(counts) != d or int(np.prod(counts)) != spec.M:
            raise BasisError(f"grid counts {counts} inconsistent with M={spec.M} in {d} dimensions")
        return BasisEvaluator(_grid_centers(points, counts), whole, spec.bandwidths)

    cols = sorted(i for b in spec.blocks for i in b)
    if cols != list(range(d)):
        raise BasisError(f"blocks {spec.blocks} do not partition the {d} weight-covariate columns")
    block_centers = [
        kmeans(points[:, list(b)], k, spec.kmeans_seed, spec.kmeans_max_iter)
        for b, k in zip(spec.blocks, spec.block_counts)
    ]
    centers = np.empty((spec.M, d))
    for m, combo in enumerate(itertools.product(*[range(k) for k in spec.block_counts])):
        for b, cb, i in zip(spec.blocks, block_centers, combo):
            centers[m, list(b)] = cb[i]
    return BasisEvaluator(centers, spec.blocks, spec.bandwidths)


def eval_basis(ev: BasisEvaluator, xtilde) -> np.ndarray:
    """Return the ``m x M`` matrix ``E`` with
    ``E[i, m] = exp(-sum_b ||x_b - c_b||^2 / (2 h_b^2))``."""
    xtilde = np.asarray(xtilde, dtype=float)
    if xtilde.ndim == 1:
        xtilde = xtilde[:, None]
    if xtilde.shape[1] != ev.dim:
        raise BasisError(f"xtilde has {xtilde.shape[1]} columns, basis expects {ev.dim}")
    expo = np.zeros((xtilde.shape[0], ev.M))
    for b, h in zip(ev.blocks, ev.bandwidths):
        b = list(b)
        expo += _sq_dists(xtilde[:, b], ev.centers[:, b]) / (2.0 * h * h)
    return np.exp(-expo)
