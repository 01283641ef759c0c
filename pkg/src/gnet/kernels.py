"""Kernel families, their smoothness metadata and predicted rates."""

from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import InputError
from .fitting import fit_slope
from .geometry import SPHERE, SpaceDescriptor, as_points
from .measures import DiscreteMeasure

ABSDOT = "absdot_power"
ONEMINUSDOT = "oneminusdot_power"
RADIAL = "radial"
PHIS = ("exp_neg", "gaussian", "piecewise_linear")


def _is_int(x, tol=1e-12):
    return abs(x - round(x)) < tol


@dataclass(frozen=True)
class KernelSpec:
    """``G(x, y)`` for one of the shipped families.

    absdot_power:       |x.y|^(2 gamma + 1) on a sphere
    oneminusdot_power:  (1 - x.y)^gamma on a sphere
    radial:             phi(|x - y|_2) with phi in exp_neg, gaussian(sigma),
                        piecewise_linear(knots)
    """

    kind: str
    gamma: float = 0.0
    phi: Optional[str] = None
    sigma: float = 1.0
    knots: Tuple[Tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind == ABSDOT:
            p = 2 * self.gamma + 1
            if self.gamma < 0 or (_is_int(p) and round(p) % 2 == 0):
                raise InputError("absdot_power needs gamma >= 0 and 2*gamma+1 not an even integer")
        elif self.kind == ONEMINUSDOT:
            if not self.gamma > 0:
                raise InputError("oneminusdot_power needs gamma > 0")
        elif self.kind == RADIAL:
            if self.phi not in PHIS:
                raise InputError(f"radial phi must be one of {PHIS}")
            if self.phi == "gaussian" and not self.sigma > 0:
                raise InputError("gaussian sigma must be positive")
            if self.phi == "piecewise_linear":
                k = np.asarray(self.knots, dtype=float)
                if k.ndim != 2 or k.shape[0] < 2 or k.shape[1] != 2 or np.any(np.diff(k[:, 0]) <= 0):
                    raise InputError("piecewise_linear needs >= 2 knots (t, value) with increasing t")
                object.__setattr__(self, "knots", tuple(map(tuple, k.tolist())))
        else:
            raise InputError(f"unknown kernel kind {self.kind!r}")

    @property
    def on_sphere(self) -> bool:
        return self.kind in (ABSDOT, ONEMINUSDOT)

    def matrix(self, X, Y) -> np.ndarray:
        """``G(X[i], Y[j])`` as a ``(len(X), len(Y))`` array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != Y.shape[1]:
            raise InputError("kernel arguments have different dimensions")
        if self.kind == ABSDOT:
            return np.abs(X @ Y.T) ** (2 * self.gamma + 1)
        if self.kind == ONEMINUSDOT:
            return np.maximum(1.0 - X @ Y.T, 0.0) ** self.gamma
        sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
        t = np.sqrt(np.maximum(sq, 0.0))
        return self.profile_fn(t)

    def profile_fn(self, t):
        if self.phi == "exp_neg":
            return np.exp(-t)
        if self.phi == "gaussian":
            return np.exp(-0.5 * (t / self.sigma) ** 2)
        k = np.asarray(self.knots)
        return np.interp(t, k[:, 0], k[:, 1])

    def to_dict(self) -> dict:
        if self.kind == RADIAL:
            d = {"kind": RADIAL, "phi": self.phi}
            if self.phi == "gaussian":
                d["sigma"] = self.sigma
            if self.phi == "piecewise_linear":
                d["knots"] = [list(k) for k in self.knots]
            return d
        return {"kind": self.kind, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d.get("kind")
        if kind == RADIAL:
            knots = tuple(tuple(k) for k in d.get("knots", ()))
            return cls(RADIAL, phi=d.get("phi"), sigma=float(d.get("sigma", 1.0)), knots=knots)
        return cls(kind, gamma=float(d.get("gamma", 0.0)))


def kernel_eval(k: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InputError("kernel arguments have different dimensions")
    if k.on_sphere and (abs(x @ x - 1) > 1e-9 or abs(y @ y - 1) > 1e-9):
        raise InputError(f"{k.kind} is defined on the unit sphere")
    return float(k.matrix(x[None], y[None])[0, 0])


@dataclass(frozen=True)
class TargetFunction:
    """``f(x) = sum_i w_i G(x, y_i)`` for a discrete measure."""

    kernel: KernelSpec
    measure: DiscreteMeasure


def target_eval(t: TargetFunction, X, chunk: int = 4096) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(t.measure) == 0:
        return np.zeros(X.shape[0])
    out = np.empty(X.shape[0])
    for i in range(0, X.shape[0], chunk):
        out[i:i + chunk] = t.kernel.matrix(X[i:i + chunk], t.measure.points) @ t.measure.weights
    return out


@dataclass(frozen=True)
class SmoothnessProfile:
    """Smoothness metadata of a kernel class.

    ``F`` is ``"constant"`` or ``"power"``; for ``"power"`` the large-set
    norm behaves like ``delta^(Gamma - R)``.  ``beta`` fixes the rate of
    ``eps*_n = n^-beta`` for non-constant ``F``; ``None`` derives it from
    ``R``.
    """

    r: float
    R: float
    s: float
    alpha: float
    F: str = "constant"
    Gamma: float = 0.0
    beta: Optional[float] = None

    def __post_init__(self):
        if not (self.r > 0 and self.R >= self.r):
            raise InputError("need R >= r > 0")
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        if self.s < 0:
            raise InputError("s must be nonnegative")
        if self.F not in ("constant", "power"):
            raise InputError("F must be 'constant' or 'power'")
        if self.beta is not None and not 0 < self.beta <= 1:
            raise InputError("beta must lie in (0, 1]")


def _r_for_beta(Gamma, beta, qs):
    # smallest integer R with 2(R - r)/(q - s + 2R - 2Gamma) >= beta when r = Gamma
    return float(math.floor(Gamma + beta * qs / (2 - 2 * beta)) + 1)


def default_profile(k: KernelSpec, q: float, beta: float = 0.9, s: Optional[float] = None) -> SmoothnessProfile:
    """Metadata table for the shipped kernels at support dimension ``q``.

    ``s`` overrides the exceptional-set dimension (for absdot it may be
    ``q - 1`` or ``q`` depending on tau).
    """
    if k.kind == ABSDOT:
        p = 2 * k.gamma + 1
        s = q - 1 if s is None else s
        if _is_int(k.gamma):
            return SmoothnessProfile(r=p, R=p, s=s, alpha=1.0)
        return SmoothnessProfile(r=p, R=_r_for_beta(p, beta, q - s), s=s, alpha=1.0,
                                 F="power", Gamma=p, beta=beta)
    if k.kind == ONEMINUSDOT:
        r = 2 * k.gamma
        s = 0.0 if s is None else s
        return SmoothnessProfile(r=r, R=_r_for_beta(r, beta, q - s), s=s, alpha=min(1.0, 2 * k.gamma),
                                 F="power", Gamma=r, beta=beta)
    if k.phi == "gaussian":
        s = q if s is None else s
        return SmoothnessProfile(r=2 * q, R=2 * q, s=s, alpha=1.0)
    s = 0.0 if s is None else s
    return SmoothnessProfile(r=1.0, R=_r_for_beta(1.0, beta, q - s), s=s, alpha=1.0,
                             F="power", Gamma=1.0, beta=beta)


def _check_qs(profile, q):
    if not q > 0:
        raise InputError("q must be positive")
    if not 0 <= profile.s <= q:
        raise InputError("need 0 <= s <= q")


def effective_beta(profile: SmoothnessProfile, q: float) -> float:
    if profile.F == "constant":
        return 1.0
    if profile.beta is not None:
        return profile.beta
    denom = q - profile.s + 2 * profile.R - 2 * profile.Gamma
    if denom <= 0:
        raise InputError("degenerate smoothness profile: q - s + 2R - 2Gamma <= 0")
    return min(1.0, 2 * (profile.R - profile.r) / denom)


def predicted_exponent(profile: SmoothnessProfile, q: float) -> float:
    """``E`` with sup error ``O(sqrt(log N) N^-E)``: ``1/2 + r/q + beta (q - s) / (2q)``."""
    _check_qs(profile, q)
    return 0.5 + profile.r / q + effective_beta(profile, q) * (q - profile.s) / (2 * q)


def epsilon_star(n: float, profile: SmoothnessProfile, q: float) -> float:
    """``max(1/n, n^(-2(R - r)/(q - s + 2R - 2Gamma)))``; ``1/n`` for constant ``F``."""
    if n < 1:
        raise InputError("n must be >= 1")
    _check_qs(profile, q)
    if profile.F == "constant":
        return 1.0 / n
    denom = q - profile.s + 2 * profile.R - 2 * profile.Gamma
    if denom <= 0:
        raise InputError("degenerate smoothness profile: q - s + 2R - 2Gamma <= 0")
    return max(1.0 / n, n ** (-2 * (profile.R - profile.r) / denom))


class HolderFit(NamedTuple):
    alpha: Optional[float]
    constant: float
    constrained: bool


def _offset_pairs(space, m, rng, lo, hi):
    rho = np.exp(rng.uniform(np.log(lo), np.log(hi), size=m))
    if space.kind == SPHERE:
        x = space.uniform_sample(m, rng)
        t = rng.standard_normal(x.shape)
        t -= (t * x).sum(1, keepdims=True) * x
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        x2 = np.cos(rho)[:, None] * x + np.sin(rho)[:, None] * t
        return x, x2 / np.linalg.norm(x2, axis=1, keepdims=True), rho
    d = space.ambient
    if space.kind == "cube":
        x = rng.uniform(-1 + hi, 1 - hi, size=(m, d))
    else:
        x = space.uniform_sample(m, rng)
    u = rng.standard_normal((m, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return x, x + rho[:, None] * u, rho


def holder_estimate(k: KernelSpec, space: SpaceDescriptor, probe_count: int = 200, seed: Optional[int] = 0,
                    grid_size: int = 2000, rho_range=(1e-3, 1e-1)) -> HolderFit:
    """Fit ``log sup_y |G(x,y) - G(x',y)|`` against ``log rho(x, x')``.

    The sup runs over a uniform sample of ``space``.  Kernels whose
    differences vanish to rounding report ``alpha=None`` (unconstrained).
    """
    if probe_count < 100:
        raise InputError("probe_count must be >= 100")
    rng = np.random.default_rng(seed)
    Y = space.uniform_sample(grid_size, rng)
    x, x2, rho = _offset_pairs(space, probe_count, rng, *rho_range)
    diff = np.abs(k.matrix(x, Y) - k.matrix(x2, Y)).max(axis=1)
    if diff.max() <= 1e-13:
        return HolderFit(None, 0.0, False)
    ok = diff > 1e-15
    fit = fit_slope(np.column_stack([np.log(rho[ok]), np.log(diff[ok])]))
    return HolderFit(fit.slope, float(np.exp(fit.intercept)), True)


def validate_target(space: SpaceDescriptor, t: TargetFunction):
    if len(t.measure):
        as_points(space, t.measure.points)
    if t.kernel.on_sphere and space.kind not in (SPHERE, "point-cloud"):
        raise InputError(f"{t.kernel.kind} needs a sphere (or a point cloud on one)")
