"""Measure-respecting partitions of a sampled support.

Stage 1 assigns every point to the lowest-indexed net center within
``2 eps``.  Two merge passes then fold cells that are too light, first with
respect to a reference (volume) measure and then with respect to ``tau``.
Each merge maps a dropped center to the kept center whose cell carries the
most mass inside the dropped center's ball, so cells only ever coarsen:

    stage 1  Z_y  in B(y, 2 eps)
    stage 2  Y~_y in B(y, 6 eps)     (reference measure, gamma = 2)
    stage 3  Y_y  in B(y, 18 eps)    (tau, gamma = 6)

Cells are never materialized as regions; a partition is the ordered seed
list, the ball radius and the seed -> owner map, which together assign any
point of the ambient space.
"""

from dataclasses import dataclass, field, replace
import logging
from typing import Optional, Tuple

import numpy as np

from .errors import ConstructionError, InputError
from .geometry import (Net, SpaceDescriptor, as_points, distances_from,
                       greedy_eps_net, mesh_norm, packing_number, separation)
from .measures import DiscreteMeasure

log = logging.getLogger(__name__)

CONTAIN_SLACK = 1e-9


@dataclass(frozen=True)
class Partition:
    """Cell structure over ``points`` (the support sample).

    ``seeds`` are indices into ``points`` in enumeration order; cells are
    identified by seed position.  ``owner[k]`` is the seed position of the
    cell that seed ``k`` has been merged into.  ``labels`` gives the cell of
    every support point (``-1`` outside all balls).
    """

    space: SpaceDescriptor
    points: np.ndarray
    seeds: np.ndarray
    radius: float
    eps: float
    owner: np.ndarray
    labels: np.ndarray
    history: Tuple[np.ndarray, ...] = ()
    tau_masses: Optional[np.ndarray] = field(default=None, repr=False)
    reference_masses: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def cell_ids(self) -> np.ndarray:
        return np.unique(self.owner)

    @property
    def centers(self) -> np.ndarray:
        """Support indices of the surviving centers, in enumeration order."""
        return self.seeds[self.cell_ids]

    @property
    def n_cells(self) -> int:
        return int(self.cell_ids.size)

    @property
    def unassigned(self) -> np.ndarray:
        return np.flatnonzero(self.labels < 0)

    def seed_labels(self, X) -> np.ndarray:
        """Stage-1 cell (seed position) of each row of ``X``; -1 if uncovered."""
        return _lowest_ball(self.space, self.points[self.seeds], self.radius, X)

    def assign(self, X) -> np.ndarray:
        lab = self.seed_labels(X)
        out = np.full(lab.shape, -1, dtype=np.intp)
        ok = lab >= 0
        out[ok] = self.owner[lab[ok]]
        return out

    def cell_masses(self, m: DiscreteMeasure, labels=None) -> np.ndarray:
        """Mass of ``m`` per seed position (zero for merged-away seeds)."""
        lab = self.assign(m.points) if labels is None else labels
        ok = lab >= 0
        return np.bincount(lab[ok], weights=m.weights[ok], minlength=len(self.seeds))

    def members(self, cell: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cell)


def _lowest_ball(space, centers, radius, X):
    X = np.asarray(X, dtype=float)
    lab = np.full(X.shape[0], -1, dtype=np.intp)
    for k, c in enumerate(centers):
        free = lab < 0
        if not free.any():
            break
        idx = np.flatnonzero(free)
        hit = distances_from(space, X[idx], c) <= radius
        lab[idx[hit]] = k
    return lab


def initial_ball_partition(space: SpaceDescriptor, net: Net, radius: float, points) -> Partition:
    """Assign each point to the lowest-indexed center within ``radius``."""
    if len(net) == 0:
        raise InputError("empty net")
    if radius < net.eps:
        raise InputError("radius must be at least the net eps")
    X = as_points(space, points)
    seeds = np.asarray(net.centers, dtype=np.intp)
    labels = _lowest_ball(space, X[seeds], radius, X)
    owner = np.arange(seeds.size, dtype=np.intp)
    if (labels < 0).any():
        log.info("%d points lie outside every stage-1 ball", int((labels < 0).sum()))
    return Partition(space, X, seeds, float(radius), float(net.eps), owner, labels, (owner.copy(),))


def _threshold(space, gamma, m, nu_weights, masses):
    if space.has_kappas:
        return space.kappa1 / space.kappa2 * (3.0 * gamma + 1.0) ** (-space.Q) * m
    # no analytic constants: one atom, or the 1% quantile of cell masses
    one = float(nu_weights[nu_weights > 0].min())
    return max(one, float(np.quantile(masses, 0.01)))


def merge_small_cells(space: SpaceDescriptor, p: Partition, nu: DiscreteMeasure,
                      gamma: float, eta: float) -> Partition:
    """Fold cells with ``nu`` mass below the threshold into heavy neighbours.

    With ``m`` the least ``nu`` mass of a radius-``eta`` ball around a current
    center, cells of mass at least ``C m`` are kept.  A dropped center ``z``
    joins the kept cell ``y`` maximizing ``nu(B(z, eta) & cell_y)``, ties to
    the lowest index.
    """
    if not nu.is_nonnegative:
        raise InputError("merge measure must be nonnegative")
    cells = p.cell_ids
    if len(nu) == 0:
        return p
    X = as_points(space, nu.points)
    w = nu.weights
    lab = p.assign(X)
    masses = np.bincount(lab[lab >= 0], weights=w[lab >= 0], minlength=len(p.seeds))
    centers = p.points[p.seeds]
    in_ball = {int(z): distances_from(space, X, centers[z]) <= eta for z in cells}
    ball = np.array([w[in_ball[int(z)]].sum() for z in cells])
    m = float(ball.min())
    if m <= 0:
        log.info("a center ball carries no mass; merge is the identity")
        return p
    thr = _threshold(space, gamma, m, w, masses[cells])
    keep = cells[masses[cells] >= thr]
    if keep.size == 0:
        raise ConstructionError("every cell is below the merge threshold",
                                {"threshold": thr, "min_ball_mass": m, "cells": int(cells.size),
                                 "max_cell_mass": float(masses[cells].max())})
    kept = np.zeros(len(p.seeds), dtype=bool)
    kept[keep] = True
    phi = np.arange(len(p.seeds), dtype=np.intp)
    for z in cells:
        if kept[z]:
            continue
        sel = in_ball[int(z)] & (lab >= 0)
        overlap = np.bincount(lab[sel], weights=w[sel], minlength=len(p.seeds))
        overlap[~kept] = -1.0
        y = int(np.argmax(overlap))
        if overlap[y] <= 0:
            d = distances_from(space, centers[keep], centers[z])
            y = int(keep[np.argmin(d)])
            log.warning("center %d has no kept neighbour mass; joined nearest kept center %d", z, y)
        phi[z] = y
    owner = phi[p.owner]
    # labels already hold owners, so remap them through phi directly
    labels = np.where(p.labels >= 0, phi[np.maximum(p.labels, 0)], -1)
    return replace(p, owner=owner, labels=labels, history=p.history + (owner.copy(),))


def build_partition(space: SpaceDescriptor, tau: DiscreteMeasure, reference: DiscreteMeasure,
                    eps: float, seed: Optional[int] = 0) -> Partition:
    """Net, ball partition, reference merge (gamma 2), tau merge (gamma 6)."""
    if not eps > 0:
        raise InputError("eps must be positive")
    if not tau.is_nonnegative:
        raise InputError("partition needs a nonnegative tau; decompose signed measures first")
    supp = tau.support()
    if len(supp) == 0:
        raise InputError("tau has empty support")
    net = greedy_eps_net(space, supp.points, eps, seed)
    p = initial_ball_partition(space, net, 2.0 * eps, supp.points)
    p = merge_small_cells(space, p, reference, 2.0, 2.0 * eps)
    p = merge_small_cells(space, p, supp, 6.0, 6.0 * eps)
    return replace(p, tau_masses=p.cell_masses(supp, p.labels),
                   reference_masses=p.cell_masses(reference))


@dataclass(frozen=True)
class PartitionDiagnostics:
    n_cells: int
    min_reference_mass: float
    min_tau_mass: float
    separation: float
    mesh_norm: float
    max_intersection_count: int
    max_center_distance: float
    eps: float
    reference_mass_bound: Optional[float]
    intersection_bound: Optional[float]
    volume_ok: bool
    density_ok: bool
    intersection_ok: bool

    @property
    def passed(self) -> bool:
        return self.volume_ok and self.density_ok and self.intersection_ok

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["passed"] = self.passed
        return out


def verify_partition(space: SpaceDescriptor, p: Partition, tau: DiscreteMeasure,
                     reference: DiscreteMeasure, probes: int = 256, seed: int = 0) -> PartitionDiagnostics:
    """Recompute the volume, density and intersection properties from scratch.

    Volume: every cell within ``18 eps`` of its center and of positive tau
    mass.  Density: centers ``eps``-separated and ``18 eps``-dense in ``K``
    (support plus the reference points that fall inside the stage-1 balls).
    Intersection: the most cells met by a ball ``B(x, eps)`` over probe
    points ``x`` of ``K``.
    """
    eps = p.eps
    supp = tau.support()
    S = as_points(space, supp.points)
    lab_t = p.assign(S)
    ref_lab = p.assign(reference.points) if len(reference) else np.zeros(0, dtype=np.intp)
    K = np.vstack([S, reference.points[ref_lab >= 0]]) if len(reference) else S
    K_lab = np.concatenate([lab_t, ref_lab[ref_lab >= 0]])
    centers = p.points[p.seeds]

    covered = bool((lab_t >= 0).all())
    dist = np.zeros(K.shape[0])
    for c in np.unique(K_lab[K_lab >= 0]):
        sel = K_lab == c
        dist[sel] = distances_from(space, K[sel], centers[c])
    max_d = float(dist.max()) if dist.size else 0.0
    contain_ok = max_d <= 18.0 * eps * (1.0 + CONTAIN_SLACK)

    cells = p.cell_ids
    t_mass = np.bincount(lab_t[lab_t >= 0], weights=supp.weights[lab_t >= 0], minlength=len(p.seeds))[cells]
    if len(reference):
        ok = ref_lab >= 0
        r_mass = np.bincount(ref_lab[ok], weights=reference.weights[ok], minlength=len(p.seeds))[cells]
    else:
        r_mass = np.zeros(cells.size)
    ref_bound = None
    if space.has_kappas:
        ref_bound = space.kappa1 / space.kappa2 * 7.0 ** (-space.Q) * eps**space.Q

    C = centers[cells]
    sep = separation(space, C)
    mesh = mesh_norm(space, C, K)
    density_ok = sep >= eps and mesh <= 18.0 * eps * (1.0 + CONTAIN_SLACK)

    rng = np.random.default_rng(seed)
    pick = rng.choice(K.shape[0], size=min(probes, K.shape[0]), replace=False)
    worst, worst_bound_ok = 0, True
    for i in pick:
        near = distances_from(space, K, K[i]) <= eps
        met = np.unique(K_lab[near])
        count = int((met >= 0).sum())
        worst = max(worst, count)
        if space.has_kappas:
            h = packing_number(space, K[near], eps, None)
            worst_bound_ok &= count <= space.kappa2**2 / space.kappa1 * 133.0**space.Q * h
    inter_bound = space.kappa2**2 / space.kappa1 * 133.0**space.Q if space.has_kappas else None

    return PartitionDiagnostics(
        n_cells=int(cells.size),
        min_reference_mass=float(r_mass.min()) if r_mass.size else 0.0,
        min_tau_mass=float(t_mass.min()),
        separation=float(sep),
        mesh_norm=float(mesh),
        max_intersection_count=worst,
        max_center_distance=max_d,
        eps=float(eps),
        reference_mass_bound=ref_bound,
        intersection_bound=inter_bound,
        volume_ok=bool(covered and contain_ok and t_mass.min() > 0),
        density_ok=bool(density_ok),
        intersection_ok=bool(worst_bound_ok),
    )


def stage_radii(space: SpaceDescriptor, p: Partition) -> Tuple[float, ...]:
    """Largest point-to-center distance after each stage, in units of eps."""
    stage1 = p.seed_labels(p.points)
    centers = p.points[p.seeds]
    out = []
    for owner in p.history:
        lab = np.where(stage1 >= 0, owner[np.maximum(stage1, 0)], -1)
        worst = 0.0
        for c in np.unique(lab[lab >= 0]):
            sel = lab == c
            worst = max(worst, float(distances_from(space, p.points[sel], centers[c]).max()))
        out.append(worst / p.eps)
    return tuple(out)

