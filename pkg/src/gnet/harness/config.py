"""Experiment configuration and builtin measure generators."""

from dataclasses import dataclass, field, replace
import json
import os
from typing import Optional, Tuple

import numpy as np

from ..errors import InputError
from ..geometry import CUBE, SPHERE, SpaceDescriptor, farthest_point_subset
from ..kernels import KernelSpec
from ..measures import DiscreteMeasure, load_measure

EXPERIMENTS = ("synth", "rate-study", "oos-study", "quad-study", "check-partition")
BUILTINS = ("uniform-sphere", "uniform-cube", "circle-in-sphere", "torus-in-cube")
MANIFOLDS = ("circle-in-sphere", "torus-in-cube")

TORUS_RADII = (0.6, 0.25)
_CIRCLE_NORMAL = np.ones(3) / np.sqrt(3.0)
_CIRCLE_U = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
_CIRCLE_V = np.cross(_CIRCLE_NORMAL, _CIRCLE_U)

# SeedSequence stream tags
_TAG_TAU, _TAG_GRID, _TAG_TUBE = 11, 12, 13


def seq(seed, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**64 - 1), *key])


def circle_in_sphere(m: int, rng: np.random.Generator) -> np.ndarray:
    """Great circle of S^2 in the plane orthogonal to (1, 1, 1)."""
    th = rng.uniform(0.0, 2.0 * np.pi, size=m)
    return np.cos(th)[:, None] * _CIRCLE_U + np.sin(th)[:, None] * _CIRCLE_V


def torus_in_cube(m: int, rng: np.random.Generator) -> np.ndarray:
    """Area-uniform sample of the standard torus with radii (0.6, 0.25)."""
    big, small = TORUS_RADII
    out = np.empty((0, 3))
    while out.shape[0] < m:
        k = 2 * (m - out.shape[0]) + 16
        th = rng.uniform(0.0, 2.0 * np.pi, size=k)
        ph = rng.uniform(0.0, 2.0 * np.pi, size=k)
        # area element is proportional to big + small cos(th)
        ok = rng.uniform(0.0, big + small, size=k) < big + small * np.cos(th)
        th, ph = th[ok], ph[ok]
        ring = big + small * np.cos(th)
        pts = np.column_stack([ring * np.cos(ph), ring * np.sin(ph), small * np.sin(th)])
        out = np.vstack([out, pts])
    return out[:m]


@dataclass(frozen=True)
class TauSource:
    builtin: Optional[str] = None
    samples: int = 0
    file: Optional[str] = None

    def __post_init__(self):
        if (self.builtin is None) == (self.file is None):
            raise InputError("tau needs exactly one of 'builtin' or 'file'")
        if self.builtin is not None:
            if self.builtin not in BUILTINS:
                raise InputError(f"builtin tau must be one of {BUILTINS}")
            if self.samples < 1:
                raise InputError("builtin tau needs a positive sample count")

    @property
    def is_manifold(self) -> bool:
        return self.builtin in MANIFOLDS

    def to_dict(self) -> dict:
        if self.file is not None:
            return {"file": self.file}
        return {"builtin": self.builtin, "samples": self.samples}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment file.  Unknown keys are rejected."""

    experiment: str
    kernel: KernelSpec
    tau: TauSource
    space: Optional[dict] = None
    n_sweep: Tuple[float, ...] = ()
    n: float = 4
    R: int = 2
    T: int = 32
    eval_grid_size: int = 2000
    tube_delta: float = 0.1
    test_functions: int = 10
    test_atoms: int = 4
    mc_repeats: int = 5
    mc_crossover: float = 100
    eps: Optional[float] = None
    q: Optional[float] = None
    s: Optional[float] = None
    seed: int = 0
    mode: str = "randomized"
    output: Optional[str] = None
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"experiment must be one of {EXPERIMENTS}")
        sweep = tuple(float(v) for v in self.n_sweep)
        object.__setattr__(self, "n_sweep", sweep)
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise InputError("n_sweep must be strictly increasing")
        if sweep and sweep[0] < 1:
            raise InputError("n_sweep entries must be >= 1")
        if self.experiment in ("rate-study", "oos-study", "quad-study") and not sweep:
            raise InputError(f"{self.experiment} needs a nonempty n_sweep")
        if self.experiment == "oos-study":
            if not self.tau.is_manifold:
                raise InputError("oos-study needs a lower-dimensional builtin tau")
            if not self.tube_delta > 0:
                raise InputError("tube_delta must be positive")
        if self.R < 1 or self.T < 1 or self.eval_grid_size < 1:
            raise InputError("need R >= 1, T >= 1 and eval_grid_size >= 1")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentConfig":
        d = dict(d)
        try:
            kernel = KernelSpec.from_dict(d.pop("kernel"))
            tau = TauSource(**d.pop("tau"))
            experiment = d.pop("experiment")
        except KeyError as exc:
            raise InputError(f"config is missing {exc.args[0]!r}") from None
        except TypeError as exc:
            raise InputError(f"bad tau source: {exc}") from None
        known = set(cls.__dataclass_fields__) - {"experiment", "kernel", "tau", "base_dir"}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        return cls(experiment=experiment, kernel=kernel, tau=tau, base_dir=base_dir, **d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), base_dir=os.path.dirname(os.path.abspath(path)))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            if k == "base_dir":
                continue
            v = getattr(self, k)
            if k in ("kernel", "tau"):
                v = v.to_dict()
            elif k == "n_sweep":
                v = list(v)
            out[k] = v
        return out


@dataclass
class Problem:
    """Materialized inputs: the synthesis space, tau and an evaluation grid."""

    space: SpaceDescriptor
    tau: DiscreteMeasure
    grid: np.ndarray
    q: float
    manifold: Optional[str] = None


def _base_space(cfg: ExperimentConfig, default_kind: str, default_Q: int) -> SpaceDescriptor:
    d = dict(cfg.space or {})
    kind = d.get("kind", default_kind)
    Q = int(d.get("Q", default_Q))
    if kind == SPHERE:
        return SpaceDescriptor.sphere(Q)
    if kind == CUBE:
        return SpaceDescriptor.cube(Q)
    raise InputError(f"builtin tau cannot live on a {kind!r} space")


def manifold_sample(name: str, m: int, rng: np.random.Generator) -> np.ndarray:
    return circle_in_sphere(m, rng) if name == "circle-in-sphere" else torus_in_cube(m, rng)


def manifold_grid(name: str, size: int, seed: int, oversample: int = 4) -> np.ndarray:
    """Quasi-uniform grid on a builtin manifold from a fresh, denser sample."""
    pool = manifold_sample(name, size * oversample, np.random.default_rng(seq(seed, _TAG_GRID)))
    cloud = SpaceDescriptor.point_cloud(pool)
    return pool[farthest_point_subset(cloud, pool, size, seed=0)]


def tube_grid(base: np.ndarray, delta: float, seed: int, on_sphere: bool = False) -> np.ndarray:
    """Points within ``delta`` of ``base``: one uniform ball offset per base point.

    With ``on_sphere`` the offsets are projected back to the unit sphere so
    sphere-only kernels stay defined.
    """
    rng = np.random.default_rng(seq(seed, _TAG_TUBE))
    u = rng.standard_normal(base.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = delta * rng.uniform(0.0, 1.0, size=(base.shape[0], 1)) ** (1.0 / base.shape[1])
    out = base + r * u
    if on_sphere:
        out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out


def build_problem(cfg: ExperimentConfig) -> Problem:
    from ..synthesis import eval_grid

    src = cfg.tau
    if src.file is not None:
        path = src.file if os.path.isabs(src.file) else os.path.join(cfg.base_dir, src.file)
        space, tau = load_measure(path)
        q = cfg.q if cfg.q is not None else float(space.Q)
        return Problem(space, tau, eval_grid(space, cfg.eval_grid_size, cfg.seed), q)
    rng = np.random.default_rng(seq(cfg.seed, _TAG_TAU))
    if src.is_manifold:
        pts = manifold_sample(src.builtin, src.samples, rng)
        Q = 1 if src.builtin == "circle-in-sphere" else 2
        space = SpaceDescriptor.point_cloud(pts, Q=Q)
        grid = manifold_grid(src.builtin, cfg.eval_grid_size, cfg.seed)
        if cfg.kernel.on_sphere:
            grid /= np.linalg.norm(grid, axis=1, keepdims=True)
        q = cfg.q if cfg.q is not None else float(Q)
        return Problem(space, DiscreteMeasure.uniform(pts), grid, q, src.builtin)
    if src.builtin == "uniform-sphere":
        space = _base_space(cfg, SPHERE, 2)
    else:
        space = _base_space(cfg, CUBE, 3)
    if (space.kind == SPHERE) != (src.builtin == "uniform-sphere"):
        raise InputError(f"{src.builtin} does not match a {space.kind} space")
    pts = space.uniform_sample(src.samples, rng)
    q = cfg.q if cfg.q is not None else float(space.Q)
    return Problem(space, DiscreteMeasure.uniform(pts), eval_grid(space, cfg.eval_grid_size, cfg.seed), q)
