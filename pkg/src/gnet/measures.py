"""Signed discrete measures and q-admissibility diagnostics."""

from dataclasses import dataclass
import json
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .fitting import fit_slope
from .geometry import SpaceDescriptor, as_points, distances_from


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point set ``sum_i w_i delta_{x_i}`` with signed weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise InputError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not np.all(np.isfinite(w)):
            raise InputError("weights must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    def __len__(self):
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.weights >= 0))

    def support(self) -> "DiscreteMeasure":
        """The same measure with zero-weight atoms dropped."""
        keep = self.weights != 0
        return DiscreteMeasure(self.points[keep], self.weights[keep])

    def mass(self) -> float:
        return float(self.weights.sum())

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * factor)

    def restrict(self, mask) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points[mask], self.weights[mask])


def total_variation(m: DiscreteMeasure) -> float:
    return float(np.abs(m.weights).sum())


def normalize(m: DiscreteMeasure) -> DiscreteMeasure:
    """Divide by the total variation (no-op for the zero measure)."""
    tv = total_variation(m)
    return m if tv == 0 else m.scaled(1.0 / tv)


def jordan_decompose(m: DiscreteMeasure) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Split ``m`` into nonnegative parts with ``m = pos - neg``."""
    w = m.weights
    return (DiscreteMeasure(m.points, np.where(w > 0, w, 0.0)),
            DiscreteMeasure(m.points, np.where(w < 0, -w, 0.0)))


def ball_mass(space: SpaceDescriptor, m: DiscreteMeasure, x, delta: float) -> float:
    """``|m|`` mass of the closed ball ``B(x, delta)``."""
    if not delta > 0:
        raise InputError("delta must be positive")
    if len(m) == 0:
        return 0.0
    x = as_points(space, x)[0]
    d = distances_from(space, as_points(space, m.points), x)
    return float(np.abs(m.weights)[d <= delta].sum())


class AdmissibilityReport(NamedTuple):
    q_hat: float
    c_hat: float
    max_violation: float


def admissibility_check(space: SpaceDescriptor, m: DiscreteMeasure, probe_count: int,
                        delta_grid: Sequence[float], seed: Optional[int] = 0) -> AdmissibilityReport:
    """Fit ``|m|(B(x, d)) ~ c d^q TV(m)`` over random support probes.

    Probes are support atoms, so every ball mass is positive.  The violation
    ratio is ``max ball_mass / (d^q_hat TV)`` over all probes and radii.
    """
    deltas = np.asarray(sorted(float(d) for d in delta_grid))
    if deltas.size < 2 or deltas[0] <= 0 or deltas[-1] / deltas[0] < 10.0:
        raise InputError("delta grid must be positive and span at least one decade")
    supp = m.support()
    if len(supp) == 0:
        raise InputError("measure has empty support")
    tv = total_variation(supp)
    rng = np.random.default_rng(seed)
    probes = rng.choice(len(supp), size=min(int(probe_count), len(supp)), replace=False)
    X = as_points(space, supp.points)
    aw = np.abs(supp.weights)
    rows = []
    for i in probes:
        d = distances_from(space, X, X[i])
        for delta in deltas:
            rows.append((np.log(delta), np.log(aw[d <= delta].sum() / tv)))
    rows = np.asarray(rows)
    fit = fit_slope(rows)
    ratio = np.exp(rows[:, 1] - fit.slope * rows[:, 0])
    return AdmissibilityReport(fit.slope, float(np.exp(fit.intercept)), float(ratio.max()))


def load_measure(path) -> Tuple[SpaceDescriptor, DiscreteMeasure]:
    """Read ``{"space": {...}, "points": [...], "weights": [...]}``.

    Missing weights default to uniform ``1/n``.
    """
    with open(path) as fh:
        doc = json.load(fh)
    return measure_from_dict(doc)


def measure_from_dict(doc: dict) -> Tuple[SpaceDescriptor, DiscreteMeasure]:
    if "points" not in doc or "space" not in doc:
        raise InputError("measure document needs 'space' and 'points'")
    pts = np.asarray(doc["points"], dtype=float)
    space = SpaceDescriptor.from_dict(doc["space"], points=pts)
    pts = as_points(space, pts)
    if doc.get("weights") is None:
        return space, DiscreteMeasure.uniform(pts)
    return space, DiscreteMeasure(pts, doc["weights"])


def measure_to_dict(space: SpaceDescriptor, m: DiscreteMeasure) -> dict:
    return {"space": space.to_dict(), "points": m.points.tolist(), "weights": m.weights.tolist()}
