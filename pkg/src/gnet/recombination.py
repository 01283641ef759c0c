"""Moment-matching quadrature by Caratheodory elimination.

A nonnegative discrete measure is replaced by one supported on at most
``rank + 1`` of its own atoms with the same moments against a polynomial
basis.  The randomized variant steps each elimination in a direction chosen
so that every weight is a martingale: averaged over draws, the reduced
weights equal the input weights.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
import logging
from math import comb
from typing import Optional, Union

import numpy as np

from .errors import InputError, ReductionError
from .measures import DiscreteMeasure

log = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.Generator, np.random.SeedSequence]


def _graded_lex(dim, R):
    out = []
    for deg in range(R):
        block = []
        for combo in combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for k in combo:
                e[k] += 1
            block.append(tuple(e))
        # lexicographic within a degree, first coordinate most significant
        block.sort(reverse=True)
        out.extend(block)
    return np.asarray(out, dtype=np.intp).reshape(len(out), dim)


@dataclass(frozen=True)
class PolynomialBasis:
    """Monomials of total degree ``< R`` in ``dim`` ambient coordinates."""

    dim: int
    R: int

    def __post_init__(self):
        if self.R < 1 or self.dim < 1:
            raise InputError("need R >= 1 and dim >= 1")

    @property
    def size(self) -> int:
        return comb(self.R - 1 + self.dim, self.dim)

    @property
    def exponents(self) -> np.ndarray:
        return _graded_lex(self.dim, self.R)


def basis_eval(basis: PolynomialBasis, points, center=None, scale: float = 1.0) -> np.ndarray:
    """Matrix with ``[j, i] = psi_j((x_i - center) / scale)``; row 0 is constant."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != basis.dim:
        raise InputError(f"points have dimension {X.shape[1]}, basis expects {basis.dim}")
    if center is not None:
        X = X - np.asarray(center, dtype=float)
    if scale != 1.0:
        X = X / scale
    exps = basis.exponents
    # powers[k][:, d] = X[:, d] ** k
    powers = [np.ones_like(X)]
    for _ in range(1, basis.R):
        powers.append(powers[-1] * X)
    out = np.ones((exps.shape[0], X.shape[0]))
    for j, e in enumerate(exps):
        for d, k in enumerate(e):
            if k:
                out[j] *= powers[k][:, d]
    return out


def numerical_rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > s[0] * max(M.shape) * np.finfo(float).eps).sum())


@dataclass(frozen=True)
class QuadratureMeasure:
    """Nonnegative few-point measure; ``indices`` point back into the source."""

    points: np.ndarray
    weights: np.ndarray
    indices: np.ndarray
    basis: PolynomialBasis
    residual: float

    def __len__(self):
        return self.weights.shape[0]

    def as_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.points, self.weights)


class MomentSystem:
    """Rank-reduced moment matrix of a fixed nonnegative point set.

    Built once and reused for any number of reductions of the same cell.
    Coordinates are centered at the centroid and scaled by the radius for
    conditioning; this is an invertible change of basis within the same
    polynomial space, so matched moments are basis independent.
    """

    def __init__(self, points, weights, basis: PolynomialBasis):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InputError("moment reduction needs a nonnegative measure")
        if not np.any(w > 0):
            raise InputError("moment reduction needs a nonzero measure")
        self.basis = basis
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = w
        self.active = np.flatnonzero(w > 0)
        P = self.points[self.active]
        center = P.mean(axis=0)
        scale = float(np.linalg.norm(P - center, axis=1).max()) or 1.0
        Phi = basis_eval(basis, P, center, scale)
        U, s, _ = np.linalg.svd(Phi, full_matrices=False)
        tol = s[0] * max(Phi.shape) * np.finfo(float).eps if s.size else 0.0
        self.rank = int((s > tol).sum())
        # rows span the same space as Phi restricted to the active atoms
        self.A = U[:, :self.rank].T @ Phi

    @property
    def target(self) -> int:
        return self.rank + 1

    def reduce(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Return reduced weights over ``self.points`` (zeros off-support)."""
        w = np.zeros_like(self.weights)
        w[self.active] = _eliminate(self.A, self.weights[self.active], self.target, rng)
        return w


def _orient(v):
    # fixed orientation: largest-magnitude entry positive
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def _choose_step(ws, v, rng):
    pos = v > 0
    neg = v < 0
    alpha = np.min(ws[pos] / v[pos]) if pos.any() else np.inf
    beta = np.min(ws[neg] / -v[neg]) if neg.any() else np.inf
    if not (np.isfinite(alpha) or np.isfinite(beta)):
        raise ReductionError("kernel direction has no stopping weight", {"kernel": v.tolist()})
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        log.debug("one-sided kernel direction; taking the finite side")
        return -alpha if np.isfinite(alpha) else beta
    # -alpha with probability beta/(alpha+beta) keeps E[new weights] = ws
    if rng is None or rng.random() < beta / (alpha + beta):
        return -alpha
    return beta


def _eliminate(A, w, target, rng, batch=16):
    """Drop atoms until at most ``target`` remain, preserving ``A @ w``.

    Each SVD of a window of ``rank + k`` columns yields ``k`` kernel vectors;
    after every step the spent coordinate is eliminated from the remaining
    vectors so they stay in the kernel of the shrunken window.
    """
    w = np.array(w, dtype=float)
    n = w.shape[0]
    if n <= target:
        return w
    r = A.shape[0]
    k = max(r, batch)
    alive = n
    window = np.arange(min(n, r + k))
    nxt = window.size
    while alive > target:
        V = np.linalg.svd(A[:, window])[2][r:].T.copy()
        while V.shape[1] and alive > target:
            v = _orient(V[:, 0])
            ws = w[window]
            new = ws + _choose_step(ws, v, rng) * v
            # an atom is spent once it keeps less than 1e-12 of its weight
            hit = new <= 1e-12 * ws
            if not hit.any():
                hit[np.argmin(new / ws)] = True
            new[hit] = 0.0
            w[window] = new
            V = V[:, 1:]
            pivots = list(np.flatnonzero(hit))
            first = max(pivots, key=lambda i: abs(v[i]))
            V -= np.outer(v / v[first], V[first])
            for extra in pivots:
                if extra == first or not V.shape[1]:
                    continue
                j = int(np.argmax(np.abs(V[extra])))
                u = V[:, j]
                V = np.delete(V, j, axis=1)
                if abs(u[extra]) > 0:
                    V -= np.outer(u / u[extra], V[extra])
            keep = ~hit
            window = window[keep]
            V = V[keep]
            alive -= int(hit.sum())
        if alive <= target:
            break
        fill = min(r + k - window.size, n - nxt)
        window = np.concatenate([window, np.arange(nxt, nxt + fill)])
        nxt += fill
    return w


def _to_quadrature(m, w, basis):
    keep = np.flatnonzero(w > 0)
    q_points = m.points[keep]
    res = _residual(basis, q_points, w[keep], m.points, m.weights)
    return QuadratureMeasure(q_points, w[keep], keep, basis, res)


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def caratheodory_reduce(m: DiscreteMeasure, basis: PolynomialBasis) -> QuadratureMeasure:
    """Deterministic reduction to at most ``rank + 1`` atoms."""
    system = MomentSystem(m.points, m.weights, basis)
    return _to_quadrature(m, system.reduce(None), basis)


def randomized_reduce(m: DiscreteMeasure, basis: PolynomialBasis, seed: SeedLike = None) -> QuadratureMeasure:
    """Unbiased random reduction: each elimination step is mean preserving."""
    system = MomentSystem(m.points, m.weights, basis)
    return _to_quadrature(m, system.reduce(_rng(seed)), basis)


def _residual(basis, qp, qw, mp, mw):
    target = basis_eval(basis, mp) @ mw
    got = basis_eval(basis, qp) @ qw
    return float(np.max(np.abs(got - target) / (1.0 + np.abs(target))))


def moment_residual(q, m: DiscreteMeasure, basis: PolynomialBasis) -> float:
    """``max_j |sum_q psi_j - sum_m psi_j| / (1 + |sum_m psi_j|)``."""
    return _residual(basis, q.points, q.weights, m.points, m.weights)
