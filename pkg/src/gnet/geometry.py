"""Metric-space primitives: spaces, distances, greedy nets, packing counts.

Point sets are plain ``(n, dim)`` float arrays.  Spheres ``S^Q`` live in
``R^{Q+1}`` with the geodesic metric; cubes ``[-1, 1]^Q`` and point clouds
use the Euclidean metric.
"""

from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import InputError
from .fitting import LineFit, fit_slope

log = logging.getLogger(__name__)

SPHERE = "sphere"
CUBE = "cube"
POINT_CLOUD = "point-cloud"
_KINDS = (SPHERE, CUBE, POINT_CLOUD)
_UNIT_TOL = 1e-12


def _check_Q(Q):
    if int(Q) != Q or Q < 1:
        raise InputError("space dimension must be an integer >= 1")


def _sphere_kappas(Q):
    # normalized cap measure is 0.5 * I_{sin^2 d}(Q/2, 1/2) for d <= pi/2;
    # cap(d) / d^Q decreases on (0, 1], so the extremes sit at d -> 0 and d = 1
    total = math.sqrt(math.pi) * math.gamma(Q / 2) / math.gamma((Q + 1) / 2)
    kappa2 = 1.0 / (Q * total)
    kappa1 = 0.5 * float(special.betainc(Q / 2, 0.5, math.sin(1.0) ** 2))
    return kappa1, kappa2


def _cube_kappas(Q):
    vol = math.pi ** (Q / 2) / math.gamma(Q / 2 + 1)
    return vol / 4.0**Q, vol / 2.0**Q


@dataclass(frozen=True)
class SpaceDescriptor:
    """Metric measure space metadata.

    ``Q`` is the dimension parameter: ``S^Q`` for spheres, ``[-1,1]^Q`` for
    cubes and the (declared) intrinsic dimension for point clouds.  The
    ball-measure constants ``kappa1 <= kappa2`` are filled in analytically for
    spheres and cubes and left ``None`` for point clouds.
    """

    kind: str
    Q: int
    ambient: int
    kappa1: Optional[float] = None
    kappa2: Optional[float] = None
    metric: str = "euclidean"
    cloud: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InputError(f"unknown space kind {self.kind!r}")
        if self.Q < 1 or self.ambient < 1:
            raise InputError("space dimension must be >= 1")
        if (self.kappa1 is None) != (self.kappa2 is None):
            raise InputError("kappa1 and kappa2 must be given together")
        if self.kappa1 is not None and not 0 < self.kappa1 <= self.kappa2:
            raise InputError("need 0 < kappa1 <= kappa2")

    @classmethod
    def sphere(cls, Q: int) -> "SpaceDescriptor":
        _check_Q(Q)
        k1, k2 = _sphere_kappas(Q)
        return cls(SPHERE, Q, Q + 1, k1, k2, metric="geodesic")

    @classmethod
    def cube(cls, Q: int) -> "SpaceDescriptor":
        _check_Q(Q)
        k1, k2 = _cube_kappas(Q)
        return cls(CUBE, Q, Q, k1, k2)

    @classmethod
    def point_cloud(cls, points, Q: Optional[int] = None, metric: str = "euclidean") -> "SpaceDescriptor":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 0:
            raise InputError("point cloud is empty")
        if metric not in ("euclidean", "geodesic-graph"):
            raise InputError(f"unknown point-cloud metric {metric!r}")
        if metric == "geodesic-graph":
            log.warning("geodesic-graph metric requested; using ambient Euclidean distances")
        return cls(POINT_CLOUD, int(Q or pts.shape[1]), pts.shape[1], metric=metric, cloud=pts)

    @property
    def has_kappas(self) -> bool:
        return self.kappa1 is not None

    def to_dict(self) -> dict:
        if self.kind == POINT_CLOUD:
            return {"kind": self.kind, "Q": self.Q, "ambient": self.ambient, "metric": self.metric}
        return {"kind": self.kind, "Q": self.Q}

    @classmethod
    def from_dict(cls, d: dict, points=None) -> "SpaceDescriptor":
        kind = d.get("kind")
        if kind == SPHERE:
            return cls.sphere(int(d["Q"]))
        if kind == CUBE:
            return cls.cube(int(d["Q"]))
        if kind == POINT_CLOUD:
            cloud = d.get("points", points)
            if cloud is None:
                raise InputError("point-cloud space needs points")
            return cls.point_cloud(cloud, d.get("Q"), d.get("metric", "euclidean"))
        raise InputError(f"unknown space kind {kind!r}")

    def uniform_sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` i.i.d. points from the normalized volume measure."""
        if self.kind == SPHERE:
            g = rng.standard_normal((n, self.ambient))
            return g / np.linalg.norm(g, axis=1, keepdims=True)
        if self.kind == CUBE:
            return rng.uniform(-1.0, 1.0, size=(n, self.Q))
        idx = rng.integers(0, self.cloud.shape[0], size=n)
        return self.cloud[idx].copy()


def as_points(space: SpaceDescriptor, points) -> np.ndarray:
    """Validate and return ``points`` as a 2-D float array for ``space``."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("point set must be a nonempty 2-D array")
    if X.shape[1] != space.ambient:
        raise InputError(f"points have dimension {X.shape[1]}, space expects {space.ambient}")
    if space.kind == SPHERE:
        err = np.abs(np.linalg.norm(X, axis=1) - 1.0)
        if err.max() > _UNIT_TOL:
            raise InputError(f"sphere points must be unit vectors (off by {err.max():.3g})")
    return X


def _geodesic(X, y):
    # arcsin forms are accurate near 0 and pi, unlike arccos of the dot product
    d = np.linalg.norm(X - y, axis=-1)
    s = np.linalg.norm(X + y, axis=-1)
    near = 2.0 * np.arcsin(np.minimum(d / 2.0, 1.0))
    far = np.pi - 2.0 * np.arcsin(np.minimum(s / 2.0, 1.0))
    return np.where(d <= s, near, far)


def distances_from(space: SpaceDescriptor, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distances from every row of ``X`` to the single point ``y``."""
    if space.kind == SPHERE:
        return _geodesic(X, y)
    return np.linalg.norm(X - y, axis=-1)


def pairwise(space: SpaceDescriptor, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Distance matrix of shape ``(len(X), len(Y))``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if space.kind == SPHERE:
        return _geodesic(X[:, None, :], Y[None, :, :])
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.sqrt(np.maximum(sq, 0.0))


def distance(space: SpaceDescriptor, x, y) -> float:
    x = as_points(space, x)
    y = as_points(space, y)
    if x.shape[0] != 1 or y.shape[0] != 1:
        raise InputError("distance takes two single points")
    return float(distances_from(space, x, y[0])[0])


@dataclass(frozen=True)
class Net:
    """Indices of an eps-distinguishable subset of some source point set."""

    centers: np.ndarray
    eps: float

    def __len__(self):
        return len(self.centers)


def greedy_eps_net(space: SpaceDescriptor, points, eps: float, seed: Optional[int] = 0) -> Net:
    """Maximal eps-distinguishable subset by farthest-point insertion.

    ``seed`` picks the first center (``None`` starts from index 0); later
    centers are the farthest remaining point, ties to the lowest index, for as
    long as that distance is at least ``eps``.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    X = as_points(space, points)
    first = 0 if seed is None else int(np.random.default_rng(seed).integers(X.shape[0]))
    centers = [first]
    dmin = distances_from(space, X, X[first])
    while True:
        j = int(np.argmax(dmin))
        if dmin[j] < eps:
            break
        centers.append(j)
        np.minimum(dmin, distances_from(space, X, X[j]), out=dmin)
    return Net(np.asarray(centers, dtype=np.intp), float(eps))


def mesh_norm(space: SpaceDescriptor, C, K) -> float:
    """max over ``K`` of the distance to the nearest point of ``C``."""
    C = np.asarray(C, dtype=float)
    if C.size == 0:
        raise InputError("mesh norm of an empty center set")
    C = as_points(space, C)
    K = as_points(space, K)
    best = np.full(K.shape[0], np.inf)
    for c in C:
        np.minimum(best, distances_from(space, K, c), out=best)
    return float(best.max())


def separation(space: SpaceDescriptor, C) -> float:
    """Minimal pairwise distance; ``inf`` for fewer than two points."""
    C = np.asarray(C, dtype=float)
    if C.size == 0:
        raise InputError("separation of an empty set")
    C = as_points(space, C)
    if C.shape[0] < 2:
        return math.inf
    best = math.inf
    for i in range(C.shape[0] - 1):
        best = min(best, float(distances_from(space, C[i + 1:], C[i]).min()))
    return best


def packing_number(space: SpaceDescriptor, A, eps: float, seed: Optional[int] = 0) -> int:
    """Size of a greedy maximal eps-distinguishable subset of ``A``."""
    return len(greedy_eps_net(space, A, eps, seed))


def dimension_estimate(space: SpaceDescriptor, A, eps_grid: Sequence[float], seed: Optional[int] = 0) -> LineFit:
    """Slope of ``log H_eps(A)`` against ``log(1/eps)``."""
    eps_grid = np.asarray(sorted(set(float(e) for e in eps_grid)))
    if eps_grid.size < 3 or eps_grid[0] <= 0 or eps_grid[-1] / eps_grid[0] < 10.0:
        raise InputError("eps grid needs >= 3 positive values spanning a decade")
    counts = [packing_number(space, A, e, seed) for e in eps_grid]
    return fit_slope(np.column_stack([np.log(1.0 / eps_grid), np.log(counts)]))


def intersection_bound(space: SpaceDescriptor, gamma: float) -> float:
    """Upper bound on how many centers of a net lie within gamma*separation of any point."""
    if not space.has_kappas:
        raise InputError("intersection bound needs analytic ball-measure constants")
    return space.kappa2 / space.kappa1 * (3.0 * gamma + 1.0) ** space.Q


def farthest_point_subset(space: SpaceDescriptor, X, m: int, seed: Optional[int] = 0) -> np.ndarray:
    """Indices of ``m`` quasi-uniform points of ``X`` by farthest-point sampling."""
    X = as_points(space, X)
    m = min(int(m), X.shape[0])
    first = 0 if seed is None else int(np.random.default_rng(seed).integers(X.shape[0]))
    out = np.empty(m, dtype=np.intp)
    out[0] = first
    dmin = distances_from(space, X, X[first])
    for k in range(1, m):
        j = int(np.argmax(dmin))
        out[k] = j
        np.minimum(dmin, distances_from(space, X, X[j]), out=dmin)
    return out
