"""Experiment runners: rate, out-of-sample, quadrature and partition checks."""

import logging
import time
from typing import Optional, Tuple

import numpy as np

from ..errors import GNetError
from ..geometry import mesh_norm
from ..kernels import TargetFunction, default_profile, predicted_exponent
from ..partition import build_partition, stage_radii, verify_partition
from ..synthesis import (GNetwork, SynthesisConfig, SynthesisReport, monte_carlo_baseline,
                         reference_measure, sup_error, synthesize)
from .config import ExperimentConfig, Problem, build_problem, seq, tube_grid
from .reports import OOS_COLUMNS, RATE_COLUMNS, StudyReport, fit_dict, loglog

log = logging.getLogger(__name__)

_TAG_MC, _TAG_TEST = 21, 22
MIN_FIT_POINTS = 4


def _n_value(n: float):
    return int(n) if float(n).is_integer() else float(n)


def synth_config(cfg: ExperimentConfig, n: float) -> SynthesisConfig:
    return SynthesisConfig(n=n, R=cfg.R, draws=cfg.T, eval_grid_size=cfg.eval_grid_size,
                           seed=cfg.seed, mode=cfg.mode)


def predicted(cfg: ExperimentConfig, problem: Problem) -> Optional[float]:
    try:
        return predicted_exponent(default_profile(cfg.kernel, problem.q, s=cfg.s), problem.q)
    except GNetError as exc:
        log.warning("no predicted exponent: %s", exc)
        return None


def run_synth(cfg: ExperimentConfig, threads: Optional[int] = None,
              problem: Optional[Problem] = None) -> Tuple[GNetwork, SynthesisReport]:
    problem = problem or build_problem(cfg)
    target = TargetFunction(cfg.kernel, problem.tau)
    return synthesize(problem.space, target, synth_config(cfg, cfg.n), grid=problem.grid, threads=threads)


def _mc_error(cfg, problem, target, N, row):
    errs = []
    for rep in range(cfg.mc_repeats):
        s = int(seq(cfg.seed, _TAG_MC, row, rep).generate_state(1)[0])
        errs.append(sup_error(monte_carlo_baseline(problem.space, target, N, seed=s), target, problem.grid))
    return float(np.median(errs))


def _sweep(cfg, problem, threads, per_row):
    """Synthesize at every n; ``per_row`` turns a result into a row dict."""
    target = TargetFunction(cfg.kernel, problem.tau)
    rows, failures = [], []
    for i, n in enumerate(cfg.n_sweep):
        t0 = time.perf_counter()
        try:
            net, rep = synthesize(problem.space, target, synth_config(cfg, n), grid=problem.grid,
                                  threads=threads)
            row = {"n": _n_value(n), "N": rep.N, **per_row(i, net, rep, target)}
        except GNetError as exc:
            log.error("n=%s failed: %s", n, exc)
            failures.append({"n": _n_value(n), "error": f"{type(exc).__name__}: {exc}"})
            continue
        row["wall_ms"] = (time.perf_counter() - t0) * 1e3
        rows.append(row)
    rows.sort(key=lambda r: (r["N"], r["n"]))
    return rows, failures


def _fits(rows, names):
    N = [r["N"] for r in rows]
    out = {}
    for name in names:
        fit = loglog(N, [r[name] for r in rows], MIN_FIT_POINTS)
        out[name] = fit_dict(fit)
    return out


def run_rate_study(cfg: ExperimentConfig, threads: Optional[int] = None,
                   problem: Optional[Problem] = None) -> StudyReport:
    """Sup / l2 error against N, with the Monte Carlo baseline at equal N.

    Slopes are fitted on log N vs log error over at least four rows; a fit
    is reported as ``None`` (degenerate) otherwise, e.g. when every error
    vanishes.
    """
    problem = problem or build_problem(cfg)

    def row(i, net, rep, target):
        return {"sup_error": rep.sup_error, "l2_error": rep.l2_error,
                "mc_error": _mc_error(cfg, problem, target, rep.N, i)}

    rows, failures = _sweep(cfg, problem, threads, row)
    fits = _fits(rows, ("sup_error", "mc_error"))
    extra = {"degenerate": fits["sup_error"] is None, "grid_size": int(problem.grid.shape[0]),
             "mc_crossover": cfg.mc_crossover,
             "beats_mc": all(r["sup_error"] < r["mc_error"] for r in rows if r["N"] >= cfg.mc_crossover)}
    return StudyReport("rate", RATE_COLUMNS, rows, fits, cfg.seed, predicted(cfg, problem), failures, extra)


def run_oos_study(cfg: ExperimentConfig, threads: Optional[int] = None,
                  problem: Optional[Problem] = None) -> StudyReport:
    """Fit on the manifold sample, then evaluate on the manifold and on a tube around it."""
    problem = problem or build_problem(cfg)
    tube = tube_grid(problem.grid, cfg.tube_delta, cfg.seed, on_sphere=cfg.kernel.on_sphere)

    def row(i, net, rep, target):
        m_err = rep.sup_error
        t_err = sup_error(net, target, tube)
        return {"manifold_error": m_err, "tube_error": t_err,
                "ratio": t_err / m_err if m_err > 0 else (1.0 if t_err == 0 else float("inf")),
                "center_mesh": mesh_norm(problem.space, net.centers, problem.tau.points)}

    rows, failures = _sweep(cfg, problem, threads, row)
    fits = _fits(rows, ("manifold_error", "tube_error"))
    fits["sup_error"] = fits["manifold_error"]
    extra = {"tube_delta": cfg.tube_delta, "manifold": problem.manifold,
             "grid_size": int(problem.grid.shape[0])}
    return StudyReport("oos", OOS_COLUMNS, rows, fits, cfg.seed, predicted(cfg, problem), failures, extra)


def random_test_measures(cfg: ExperimentConfig, grid: np.ndarray):
    """Random signed measures nu with ``|nu|_TV = 1`` on eval-grid points."""
    rng = np.random.default_rng(seq(cfg.seed, _TAG_TEST))
    out = []
    for _ in range(cfg.test_functions):
        idx = rng.choice(grid.shape[0], size=min(cfg.test_atoms, grid.shape[0]), replace=False)
        v = rng.standard_normal(idx.size)
        out.append((grid[idx], v / np.abs(v).sum()))
    return out


def integration_error(kernel, nu, tau, net: GNetwork) -> float:
    """``|int g dtau - sum_k a_k g(y_k)|`` for ``g = int G(x, .) dnu(x)``."""
    X, v = nu
    exact = (v @ kernel.matrix(X, tau.points)) @ tau.weights
    approx = (v @ kernel.matrix(X, net.centers)) @ net.coefficients if len(net) else 0.0
    return float(abs(exact - approx))


def run_quad_study(cfg: ExperimentConfig, threads: Optional[int] = None,
                   problem: Optional[Problem] = None) -> StudyReport:
    """Integration errors of the network's (a_k, y_k) as a quadrature rule.

    Test integrands are ``g(y) = sum_i v_i G(x_i, y)`` with ``|v|_1 = 1``;
    the rule depends only on tau, never on the test functions.
    """
    problem = problem or build_problem(cfg)
    nus = random_test_measures(cfg, problem.grid)
    names = [f"g{i}" for i in range(len(nus))]
    columns = ("n", "N", "sup_error", *names, "max_error", "wall_ms")

    def row(i, net, rep, target):
        errs = [integration_error(cfg.kernel, nu, problem.tau, net) for nu in nus]
        return {"sup_error": rep.sup_error, **dict(zip(names, errs)), "max_error": max(errs, default=0.0)}

    rows, failures = _sweep(cfg, problem, threads, row)
    fits = _fits(rows, ("sup_error", "max_error"))
    extra = {"bounded": all(r[g] <= r["sup_error"] + 1e-12 for r in rows for g in names),
             "test_functions": len(nus)}
    return StudyReport("quad", columns, rows, fits, cfg.seed, predicted(cfg, problem), failures, extra)


def run_check_partition(cfg: ExperimentConfig, problem: Optional[Problem] = None) -> dict:
    """Build one partition and report the recomputed properties."""
    problem = problem or build_problem(cfg)
    eps = cfg.eps if cfg.eps is not None else 1.0 / (2.0 * cfg.n)
    ref = reference_measure(problem.space, max(2048, len(problem.tau)), cfg.seed)
    t0 = time.perf_counter()
    p = build_partition(problem.space, problem.tau, ref, eps, seed=cfg.seed)
    diag = verify_partition(problem.space, p, problem.tau, ref, seed=cfg.seed)
    return {"eps": eps, "stage_radii": list(stage_radii(problem.space, p)),
            "diagnostics": diag.to_dict(), "wall_ms": (time.perf_counter() - t0) * 1e3}
