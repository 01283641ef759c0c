"""Sparse G-network synthesis.

Pipeline for a nonnegative part of tau at resolution ``n``:

1. greedy ``eps``-net of the support with ``eps = 1 / (2n)``;
2. measure-respecting partition of the support;
3. per cell ``A``, a random moment-matching quadrature of ``tau|A / tau(A)``
   with at most ``rank + 1`` atoms, giving terms ``(tau(A) b_j, x_j)``;
4. repeat for ``T`` independent draws and keep the network with the
   smallest sup error on the evaluation grid.

Signed measures are split into positive and negative parts which share a
draw index; their term lists are concatenated with the negative part's
coefficients negated.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import logging
import math
import os
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import GNetError, InputError
from .geometry import POINT_CLOUD, SpaceDescriptor, farthest_point_subset
from .kernels import KernelSpec, TargetFunction, target_eval, validate_target
from .measures import DiscreteMeasure, jordan_decompose, total_variation
from .partition import Partition, PartitionDiagnostics, build_partition, verify_partition
from .recombination import MomentSystem, PolynomialBasis

log = logging.getLogger(__name__)

MODES = ("randomized", "deterministic", "monte-carlo-baseline")

# stream tags for SeedSequence keys
_TAG_GRID, _TAG_REF, _TAG_DRAW, _TAG_MC = 1, 2, 4, 5


@dataclass(frozen=True)
class GNetwork:
    """``x -> sum_k a[k] G(x, y[k])``."""

    kernel: KernelSpec
    space: SpaceDescriptor
    coefficients: np.ndarray
    centers: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.coefficients.shape[0]

    @property
    def terms(self) -> List[Tuple[float, np.ndarray]]:
        return list(zip(self.coefficients.tolist(), self.centers))

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "space": self.space.to_dict(),
            "terms": [{"a": float(a), "y": [float(v) for v in y]}
                      for a, y in zip(self.coefficients, self.centers)],
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        # json emits floats with repr, the shortest round-trip form
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "GNetwork":
        terms = d.get("terms", [])
        a = np.array([t["a"] for t in terms], dtype=float)
        Y = np.array([t["y"] for t in terms], dtype=float)
        sd = d["space"]
        if sd.get("kind") == POINT_CLOUD:
            cloud = Y if len(terms) else np.zeros((1, int(sd["ambient"])))
            space = SpaceDescriptor.point_cloud(cloud, sd.get("Q"), sd.get("metric", "euclidean"))
        else:
            space = SpaceDescriptor.from_dict(sd)
        if not len(terms):
            Y = np.zeros((0, space.ambient))
        return cls(KernelSpec.from_dict(d["kernel"]), space, a, Y, dict(d.get("meta", {})))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "GNetwork":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def evaluate_network(net: GNetwork, points, chunk: int = 4096) -> np.ndarray:
    """Network values at ``points``; summation runs in term order."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != net.space.ambient:
        raise InputError(f"points have dimension {X.shape[1]}, network expects {net.space.ambient}")
    if len(net) == 0:
        return np.zeros(X.shape[0])
    out = np.empty(X.shape[0])
    for i in range(0, X.shape[0], chunk):
        out[i:i + chunk] = net.kernel.matrix(X[i:i + chunk], net.centers) @ net.coefficients
    return out


def sup_error(net: GNetwork, target: TargetFunction, grid) -> float:
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise InputError("empty evaluation grid")
    return float(np.max(np.abs(target_eval(target, grid) - evaluate_network(net, grid))))


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs of one synthesis run.

    ``n`` is the resolution (``eps = 1/(2n)``); real values are accepted so
    sweeps can be finer than the integers.  ``R`` is the moment degree bound
    (total degree ``< R``).
    """

    n: float = 4
    R: int = 2
    draws: int = 32
    eval_grid_size: int = 2000
    seed: int = 0
    mode: str = "randomized"
    reference_size: Optional[int] = None
    diagnostics: bool = True

    def __post_init__(self):
        if not self.n >= 1:
            raise InputError("n must be >= 1")
        if self.R < 1 or self.draws < 1:
            raise InputError("need R >= 1 and draws >= 1")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}")
        if self.eval_grid_size < 1:
            raise InputError("eval grid must be nonempty")

    @property
    def eps(self) -> float:
        return 1.0 / (2.0 * self.n)

    def meta(self) -> dict:
        n = int(self.n) if float(self.n).is_integer() else float(self.n)
        return {"n": n, "R": int(self.R), "seed": int(self.seed), "draws": int(self.draws)}


@dataclass
class SynthesisReport:
    N: int
    sup_error: float
    l2_error: float
    draw_errors: List[float]
    best_draw: int
    n_cells: int
    max_rank: int
    partition: List[PartitionDiagnostics]
    grid_size: int
    wall_ms: float

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "partition"}
        d["partition"] = [p.to_dict() for p in self.partition]
        return d


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("GNET_THREADS", "1") or 1)
    return max(1, int(threads))


def _seq(seed, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**64 - 1), *key])


def eval_grid(space: SpaceDescriptor, size: int, seed: int = 0, oversample: int = 4) -> np.ndarray:
    """Quasi-uniform grid: farthest-point subset of a larger uniform sample.

    Point clouds use the cloud itself as the candidate pool.
    """
    rng = np.random.default_rng(_seq(seed, _TAG_GRID))
    if space.kind == POINT_CLOUD:
        pool = space.cloud
    else:
        pool = space.uniform_sample(max(size * oversample, size), rng)
    idx = farthest_point_subset(space, pool, size, seed=int(rng.integers(2**31)))
    return pool[idx]


def reference_measure(space: SpaceDescriptor, size: int, seed: int) -> DiscreteMeasure:
    """Equal-weight stand-in for the volume measure (the cloud itself for point clouds)."""
    if space.kind == POINT_CLOUD:
        return DiscreteMeasure.uniform(space.cloud)
    rng = np.random.default_rng(_seq(seed, _TAG_REF))
    return DiscreteMeasure.uniform(space.uniform_sample(size, rng))


class _Cell:
    __slots__ = ("key", "index", "mass", "system")

    def __init__(self, key, index, mass, system):
        self.key, self.index, self.mass, self.system = key, index, mass, system


@dataclass
class _Part:
    sign: float
    measure: DiscreteMeasure
    cells: List[_Cell]
    partition: Partition


def _prepare_part(space, part, sign, cfg, reference, basis) -> _Part:
    supp = part.support()
    p = build_partition(space, supp, reference, cfg.eps, seed=cfg.seed)
    cells = []
    for c in p.cell_ids:
        idx = p.members(c)
        mass = float(supp.weights[idx].sum())
        system = MomentSystem(supp.points[idx], supp.weights[idx] / mass, basis)
        cells.append(_Cell(int(p.seeds[c]), idx, mass, system))
    return _Part(sign, supp, cells, p)


def _draw(parts, cfg, t):
    coef, cent = [], []
    for k, part in enumerate(parts):
        for cell in part.cells:
            if cfg.mode == "deterministic":
                rng = None
            else:
                rng = np.random.default_rng(_seq(cfg.seed, _TAG_DRAW, t, k, cell.key))
            b = cell.system.reduce(rng)
            nz = np.flatnonzero(b > 0)
            coef.append(part.sign * cell.mass * b[nz])
            cent.append(part.measure.points[cell.index[nz]])
    if not coef:
        return np.zeros(0), None
    return np.concatenate(coef), np.vstack(cent)


def _mc_draw(measure, N, rng):
    aw = np.abs(measure.weights)
    tv = float(aw.sum())
    idx = rng.choice(len(measure), size=int(N), p=aw / tv)
    return np.sign(measure.weights[idx]) * tv / N, measure.points[idx]


def synthesize(space: SpaceDescriptor, target: TargetFunction, cfg: SynthesisConfig,
               grid=None, threads: Optional[int] = None) -> Tuple[GNetwork, SynthesisReport]:
    """Build the best-of-``T`` network for ``target`` (see module docstring)."""
    t0 = time.perf_counter()
    validate_target(space, target)
    tau = target.measure.support()
    if len(tau) == 0:
        raise InputError("target measure is zero")
    if grid is None:
        grid = eval_grid(space, cfg.eval_grid_size, cfg.seed)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    f_grid = target_eval(target, grid)

    basis = PolynomialBasis(space.ambient, cfg.R)
    ref_size = cfg.reference_size or max(2048, len(tau))
    reference = reference_measure(space, ref_size, cfg.seed)
    parts = []
    for sign, part in zip((1.0, -1.0), jordan_decompose(tau)):
        if total_variation(part) > 0:
            try:
                parts.append(_prepare_part(space, part, sign, cfg, reference, basis))
            except GNetError as exc:
                raise type(exc)(f"{'positive' if sign > 0 else 'negative'} part: {exc}") from exc

    diags = []
    if cfg.diagnostics:
        for part in parts:
            diags.append(verify_partition(space, part.partition, part.measure, reference))

    bound = sum(min(cell.system.target, len(cell.index)) for part in parts for cell in part.cells)
    draws = 1 if cfg.mode == "deterministic" else cfg.draws

    def run(t):
        if cfg.mode == "monte-carlo-baseline":
            rng = np.random.default_rng(_seq(cfg.seed, _TAG_MC, t))
            a, Y = _mc_draw(tau, bound, rng)
        else:
            a, Y = _draw(parts, cfg, t)
        net = GNetwork(target.kernel, space, a, Y, cfg.meta())
        return net, f_grid - evaluate_network(net, grid)

    with ThreadPoolExecutor(max_workers=_threads(threads)) as pool:
        results = list(pool.map(run, range(draws)))

    errors = [float(np.max(np.abs(e))) for _, e in results]
    best = int(np.argmin(errors))
    net, err = results[best]
    report = SynthesisReport(
        N=len(net),
        sup_error=errors[best],
        l2_error=float(np.sqrt(np.mean(err**2))),
        draw_errors=errors,
        best_draw=best,
        n_cells=sum(len(p.cells) for p in parts),
        max_rank=max((c.system.rank for p in parts for c in p.cells), default=0),
        partition=diags,
        grid_size=int(grid.shape[0]),
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )
    return net, report


def monte_carlo_baseline(space: SpaceDescriptor, target: TargetFunction, N: int, seed: int = 0) -> GNetwork:
    """``N`` i.i.d. atoms from ``|tau| / TV`` with coefficients ``sign * TV / N``."""
    if N < 1:
        raise InputError("N must be >= 1")
    tau = target.measure.support()
    if len(tau) == 0:
        return GNetwork(target.kernel, space, np.zeros(0), np.zeros((0, space.ambient)))
    a, Y = _mc_draw(tau, N, np.random.default_rng(_seq(seed, _TAG_MC)))
    return GNetwork(target.kernel, space, a, Y, {"N": int(N), "seed": int(seed)})


def hoeffding_bound(ranges: Sequence[Tuple[float, float]], t: float) -> float:
    """``2 exp(-2 t^2 / sum (b - a)^2)`` for independent zero-mean summands."""
    if not t > 0:
        raise InputError("t must be positive")
    r = np.asarray(ranges, dtype=float).reshape(-1, 2)
    if np.any(r[:, 1] < r[:, 0]):
        raise InputError("each range needs b >= a")
    total = float(((r[:, 1] - r[:, 0]) ** 2).sum())
    if total == 0:
        return 0.0
    return 2.0 * math.exp(-2.0 * t * t / total)
