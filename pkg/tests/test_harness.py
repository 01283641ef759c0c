import json

import numpy as np
import pytest

from gnet.errors import InputError
from gnet.geometry import SpaceDescriptor
from gnet.harness import ExperimentConfig, build_problem, read_csv, run_check_partition
from gnet.harness.cli import main
from gnet.harness.config import circle_in_sphere, manifold_grid, torus_in_cube, tube_grid
from gnet.harness.reports import RATE_COLUMNS, StudyReport, loglog, strip_column
from gnet.harness.studies import (integration_error, run_oos_study, run_quad_study, run_rate_study,
                                  run_synth)
from gnet.kernels import KernelSpec, TargetFunction, target_eval
from gnet.measures import DiscreteMeasure, measure_to_dict
from gnet.synthesis import evaluate_network

SMALL_RATE = {
    "experiment": "rate-study",
    "kernel": {"kind": "absdot_power", "gamma": 0},
    "tau": {"builtin": "uniform-sphere", "samples": 800},
    "n_sweep": [1.5, 2, 2.5, 3],
    "R": 2, "T": 3, "eval_grid_size": 300, "mc_repeats": 2, "seed": 4,
}
SMALL_CIRCLE = {
    "experiment": "oos-study",
    "kernel": {"kind": "radial", "phi": "gaussian", "sigma": 0.5},
    "tau": {"builtin": "circle-in-sphere", "samples": 600},
    "n_sweep": [1.5, 3, 6],
    "R": 3, "T": 3, "eval_grid_size": 300, "tube_delta": 0.1, "seed": 1,
}


def cfg(base, **over):
    d = dict(base)
    d.update(over)
    return ExperimentConfig.from_dict(d)


class TestConfig:
    def test_round_trip(self):
        c = cfg(SMALL_RATE)
        assert ExperimentConfig.from_dict(c.to_dict()) == c

    @pytest.mark.parametrize("over", [
        dict(n_sweep=[2, 2]), dict(n_sweep=[3, 2]), dict(n_sweep=[]), dict(n_sweep=[0.5, 1]),
        dict(experiment="fit"), dict(R=0), dict(T=0), dict(bogus=1),
        dict(tau={"builtin": "uniform-sphere", "samples": 0}), dict(tau={"builtin": "moon", "samples": 5}),
        dict(tau={}),
    ])
    def test_invalid(self, over):
        with pytest.raises(InputError):
            cfg(SMALL_RATE, **over)

    def test_oos_needs_manifold(self):
        with pytest.raises(InputError):
            cfg(SMALL_RATE, experiment="oos-study")
        with pytest.raises(InputError):
            cfg(SMALL_CIRCLE, tube_delta=0)

    def test_missing_kernel(self):
        d = dict(SMALL_RATE)
        del d["kernel"]
        with pytest.raises(InputError):
            ExperimentConfig.from_dict(d)

    def test_file_source(self, tmp_path, rng):
        sp = SpaceDescriptor.cube(2)
        m = DiscreteMeasure.uniform(sp.uniform_sample(50, rng))
        (tmp_path / "tau.json").write_text(json.dumps(measure_to_dict(sp, m)))
        d = dict(SMALL_RATE, kernel={"kind": "radial", "phi": "exp_neg"}, tau={"file": "tau.json"})
        (tmp_path / "c.json").write_text(json.dumps(d))
        problem = build_problem(ExperimentConfig.load(tmp_path / "c.json"))
        np.testing.assert_array_equal(problem.tau.points, m.points)
        assert problem.space == sp and problem.q == 2


class TestBuiltins:
    def test_circle_on_sphere(self, rng):
        X = circle_in_sphere(100, rng)
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0)
        np.testing.assert_allclose(X @ np.ones(3), 0.0, atol=1e-14)

    def test_torus_in_cube(self, rng):
        X = torus_in_cube(2000, rng)
        ring = np.hypot(X[:, 0], X[:, 1])
        np.testing.assert_allclose((ring - 0.6) ** 2 + X[:, 2] ** 2, 0.25**2)
        assert np.abs(X).max() <= 1.0
        # area weighting puts more mass on the outer half of the tube
        assert (ring > 0.6).mean() > 0.55

    def test_tube_grid_within_delta(self, rng):
        base = manifold_grid("torus-in-cube", 200, 0)
        tube = tube_grid(base, 0.1, 3)
        assert np.linalg.norm(tube - base, axis=1).max() <= 0.1

    def test_tube_on_sphere(self):
        tube = tube_grid(manifold_grid("circle-in-sphere", 50, 0), 0.2, 0, on_sphere=True)
        np.testing.assert_allclose(np.linalg.norm(tube, axis=1), 1.0)

    def test_problem_spaces(self):
        p = build_problem(cfg(SMALL_CIRCLE))
        assert p.space.kind == "point-cloud" and p.q == 1 and p.manifold == "circle-in-sphere"
        p = build_problem(cfg(SMALL_RATE, tau={"builtin": "uniform-cube", "samples": 50}, space={"kind": "cube", "Q": 2}))
        assert p.space.kind == "cube" and p.tau.points.shape == (50, 2)
        with pytest.raises(InputError):
            build_problem(cfg(SMALL_RATE, space={"kind": "cube", "Q": 3}))


@pytest.fixture(scope="module")
def rate_report():
    return run_rate_study(cfg(SMALL_RATE))


class TestRateStudy:
    def test_rows(self, rate_report):
        r = rate_report
        assert [row["N"] for row in r.rows] == sorted(row["N"] for row in r.rows)
        assert r.predicted_exponent == 1.25
        assert r.slope is not None and r.slope < 0
        assert tuple(r.columns) == RATE_COLUMNS
        assert r.to_csv().splitlines()[0] == "n,N,sup_error,l2_error,mc_error,wall_ms"

    def test_csv_round_trip(self, rate_report):
        rows = read_csv(rate_report.to_csv())
        for got, want in zip(rows, rate_report.rows):
            for k in ("n", "N", "sup_error", "l2_error", "mc_error"):
                assert got[k] == want[k]

    def test_json_round_trip(self, rate_report):
        doc = json.loads(rate_report.to_json())
        assert doc["rows"] == rate_report.rows
        assert doc["fits"] == rate_report.fits

    def test_reproducible(self, rate_report):
        again = run_rate_study(cfg(SMALL_RATE))
        assert strip_column(again.to_csv()) == strip_column(rate_report.to_csv())

    def test_single_atom_degenerate(self):
        c = cfg(SMALL_RATE, tau={"builtin": "uniform-sphere", "samples": 1})
        r = run_rate_study(c)
        assert all(row["sup_error"] == 0 for row in r.rows)
        assert r.slope is None and r.to_dict()["degenerate"]

    def test_write(self, rate_report, tmp_path):
        paths = rate_report.write(str(tmp_path))
        assert set(paths) == {"csv", "json", "dat", "plt"}
        assert "rate.dat" in (tmp_path / "rate.plt").read_text()
        dat = (tmp_path / "rate.dat").read_text().splitlines()
        assert dat[0].startswith("#") and len(dat) == len(rate_report.rows) + 1


class TestMcSlopeOracle:
    def test_mc_rate(self):
        # Monte Carlo rate oracle: median sup errors of i.i.d. networks scale like N^-1/2
        from gnet.synthesis import monte_carlo_baseline, sup_error, eval_grid
        sp = SpaceDescriptor.sphere(2)
        X = sp.uniform_sample(4096, np.random.default_rng(0))
        t = TargetFunction(KernelSpec("absdot_power", gamma=0.0), DiscreteMeasure.uniform(X))
        grid = eval_grid(sp, 500, 0)
        Ns = [50, 100, 200, 400, 800, 1600]
        errs = [np.median([sup_error(monte_carlo_baseline(sp, t, N, seed=s), t, grid) for s in range(7)])
                for N in Ns]
        assert abs(loglog(Ns, errs).slope + 0.5) <= 0.15


class TestOosStudy:
    def test_tiny_tube_matches_manifold(self):
        r = run_oos_study(cfg(SMALL_CIRCLE, tube_delta=1e-9, n_sweep=[2, 4]))
        for row in r.rows:
            assert row["ratio"] == pytest.approx(1.0, abs=1e-3)

    def test_errors_decrease(self):
        runs = [run_oos_study(cfg(SMALL_CIRCLE, seed=s)) for s in range(3)]
        for col in ("manifold_error", "tube_error"):
            med = np.median([r.column(col) for r in runs], axis=0)
            assert np.all(np.diff(med) < 0), col

    def test_centers_on_manifold(self):
        c = cfg(SMALL_CIRCLE, experiment="synth", n=3)
        net, _ = run_synth(c)
        sample = {tuple(p) for p in build_problem(c).tau.points}
        assert all(tuple(y) in sample for y in net.centers)


class TestQuadStudy:
    def test_single_atom_nu(self):
        c = cfg(SMALL_RATE, experiment="synth", n=2)
        problem = build_problem(c)
        net, _ = run_synth(c, problem=problem)
        x1 = problem.grid[:1]
        err = integration_error(c.kernel, (x1, np.array([1.0])), problem.tau, net)
        t = TargetFunction(c.kernel, problem.tau)
        assert err == pytest.approx(abs(target_eval(t, x1)[0] - evaluate_network(net, x1)[0]), abs=1e-15)

    def test_bounded_by_sup_error(self):
        r = run_quad_study(cfg(SMALL_RATE, experiment="quad-study", test_functions=5))
        assert r.extra["bounded"]
        for row in r.rows:
            assert row["max_error"] <= row["sup_error"] + 1e-12
        assert [c for c in r.columns if c.startswith("g")] == [f"g{i}" for i in range(5)]


class TestCheckPartition:
    def test_passes(self):
        doc = run_check_partition(cfg(SMALL_RATE, experiment="check-partition", eps=0.2))
        assert doc["diagnostics"]["passed"]
        assert doc["stage_radii"][-1] <= 18


class TestCli:
    def write(self, tmp_path, d):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(d))
        return str(path)

    def test_synth(self, tmp_path):
        path = self.write(tmp_path, dict(SMALL_RATE, experiment="synth", n=2))
        out = tmp_path / "net.json"
        assert main(["synth", "--config", path, "--seed", "9", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["meta"]["seed"] == 9 and doc["meta"]["n"] == 2
        assert (tmp_path / "net.report.json").exists()

    def test_rate_study(self, tmp_path):
        path = self.write(tmp_path, dict(SMALL_RATE, n_sweep=[1.5, 2]))
        assert main(["rate-study", "--config", path, "--out", str(tmp_path / "rep")]) == 0
        rows = read_csv((tmp_path / "rep" / "rate.csv").read_text())
        assert len(rows) == 2

    def test_oos_and_quad(self, tmp_path):
        path = self.write(tmp_path, dict(SMALL_CIRCLE, n_sweep=[2]))
        assert main(["oos-study", "--config", path, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "oos.csv").read_text().startswith("n,N,manifold_error,tube_error,ratio,wall_ms")
        assert main(["quad-study", "--config", path, "--out", str(tmp_path / "q")]) == 0
        assert (tmp_path / "q" / "quad.json").exists()

    def test_check_partition(self, tmp_path, capsys):
        path = self.write(tmp_path, dict(SMALL_RATE, experiment="check-partition", eps=0.25))
        assert main(["check-partition", "--config", path]) == 0
        assert json.loads(capsys.readouterr().out)["diagnostics"]["passed"]

    def test_bad_config(self, tmp_path):
        path = self.write(tmp_path, dict(SMALL_RATE, n_sweep=[3, 1]))
        assert main(["rate-study", "--config", path]) == 2
        assert main(["synth", "--config", str(tmp_path / "missing.json")]) == 2

    def test_thread_env(self, tmp_path, monkeypatch):
        path = self.write(tmp_path, dict(SMALL_RATE, experiment="synth", n=2))
        outs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("GNET_THREADS", threads)
            out = tmp_path / f"net{threads}.json"
            assert main(["synth", "--config", path, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


def test_study_report_fit_accessor():
    r = StudyReport("rate", RATE_COLUMNS, [], {"sup_error": {"slope": -1.0, "intercept": 0.0, "r2": 1.0}}, 0)
    assert r.fit("sup_error").slope == -1.0 and r.fit("mc_error") is None
