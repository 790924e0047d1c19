import csv
import json
import math

import numpy as np
import pytest
from scipy import special, stats

from fracsub import CtrwSpec, DiffusionParams, JumpLaw, ParameterError, WaitingLaw, green_function_cdf
from fracsub import harness
from fracsub.cli import main
from fracsub.harness import (
    EnsembleInterrupted,
    RunConfig,
    compare_to_analytic,
    ctrw_limit_study,
    directing_samples,
    ks_distance,
    ks_threshold,
    reproduce_figures,
    run_ensemble,
    sample_moments,
    terminal_values,
)
from fracsub.paths import RefinementLevel, evaluate_path, path_streams, subordinated_path

GAUSS = DiffusionParams(2, 0, 1.0)


# --- configuration -----------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(n_paths=0), dict(n_steps=0), dict(tau_star=2.0),
                                    dict(observation_times=(2.0, 1.0)), dict(observation_times=(-1.0,)),
                                    dict(x_min=1.0, x_max=0.0)])
def test_run_config_validation(kwargs):
    base = dict(params=GAUSS, n_paths=10, n_steps=10, tau_star=0.1, master_seed=0)
    base.update(kwargs)
    with pytest.raises(ParameterError):
        RunConfig(**base)


def test_config_dict_is_json():
    cfg = RunConfig(DiffusionParams(1.5, 0.1, 0.9), 10, 10, 0.1, 3, (1.0, 2.0))
    d = json.loads(json.dumps(cfg.to_dict()))
    assert d["params"] == {"alpha": 1.5, "theta": 0.1, "beta": 0.9}
    assert d["observation_times"] == [1.0, 2.0]


# --- KS machinery ------------------------------------------------------------------------

def test_ks_matches_scipy_exactly_when_not_subsampled():
    x = np.random.default_rng(0).normal(size=500)
    assert ks_distance(x, special.ndtr) == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-15)


def test_ks_subsampled_is_upper_bound():
    x = np.random.default_rng(1).normal(size=50_000)
    exact = stats.kstest(x, "norm").statistic
    bound = ks_distance(x, special.ndtr, max_points=1000)
    assert exact <= bound <= exact + 2 * 50 / 50_000 + 1e-12


def test_ks_with_ties():
    x = np.array([0.0, 0.0, 1.0, 1.0])
    cdf = lambda v: np.clip(np.asarray(v) / 2 + 0.25, 0, 1)  # noqa: E731
    assert ks_distance(x, cdf) == pytest.approx(0.25)


def test_ks_threshold_value():
    assert ks_threshold(10_000) == pytest.approx(0.0186)


def test_sample_moments():
    m = sample_moments(np.array([1.0, 2.0, 3.0, 4.0]))
    assert m[0][:2] == (1, 2.5)
    assert m[1][:2] == (2, pytest.approx(5 / 3))


# --- ensembles -----------------------------------------------------------------------------

def test_terminal_values_match_full_paths():
    params = DiffusionParams(1.5, 0.2, 0.7)
    times = (0.3, 1.0, 2.5)
    for i in range(5):
        path = subordinated_path(params, 3000, RefinementLevel(0.01), path_streams(17, i))
        assert path.epochs[-1] > times[-1]
        np.testing.assert_array_equal(terminal_values(params, 0.01, 17, i, times),
                                      evaluate_path(path, np.array(times)))


def test_ensemble_independent_of_workers():
    cfg = RunConfig(DiffusionParams(2, 0, 0.8), 300, 100, 0.05, 9, (0.5, 1.0))
    a = run_ensemble(cfg, workers=1)
    b = run_ensemble(cfg, workers=3)
    for t in cfg.observation_times:
        np.testing.assert_array_equal(a[t], b[t])


def test_gaussian_ensemble_variance():
    cfg = RunConfig(GAUSS, 100_000, 100, 0.01, 4, (1.0,))
    x = run_ensemble(cfg, workers=2)[1.0]
    assert np.var(x, ddof=1) == pytest.approx(2.0, abs=0.03)


def test_single_path_reproducible():
    cfg = RunConfig(DiffusionParams(1.5, 0, 0.9), 1, 100, 0.01, 5, (1.0,))
    assert run_ensemble(cfg)[1.0][0] == run_ensemble(cfg)[1.0][0]


def test_resource_exhaustion_keeps_partial(monkeypatch):
    real = harness._block
    calls = []

    def flaky(args):
        calls.append(args)
        if len(calls) > 1:
            raise MemoryError
        return real(args)

    monkeypatch.setattr(harness, "_block", flaky)
    cfg = RunConfig(GAUSS, 12_000, 10, 0.1, 0, (1.0,))
    with pytest.raises(EnsembleInterrupted) as err:
        run_ensemble(cfg)
    assert err.value.completed == 5000
    assert err.value.partial.shape == (5000, 1)


def test_directing_samples_rejects_bad_beta():
    with pytest.raises(ParameterError):
        directing_samples(1.0, 10, 0.01, 0, 1.0)


# --- comparison ------------------------------------------------------------------------------

def test_compare_matched_and_cdf_ends():
    params = DiffusionParams(2, 0, 0.8)
    cfg = RunConfig(params, 4000, 100, 0.01, 2, (1.0,))
    x = run_ensemble(cfg, workers=2)[1.0]
    rep = compare_to_analytic(x, params, 1.0, cfg.x_grid)
    assert rep.ks_distance < rep.ks_threshold and rep.passed
    lo, hi = rep.extra["cdf_at_grid_ends"]
    assert lo == pytest.approx(0.0, abs=1e-3)
    assert hi == pytest.approx(1.0, abs=1e-3)
    assert rep.analytic_reference == "green_function_fourier"


def test_mismatched_beta_detected():
    # exact gap between the beta = 0.8 and beta = 1 laws at alpha = 2, t = 1
    grid = np.linspace(-6, 6, 1201)
    gap = np.max(np.abs(green_function_cdf(DiffusionParams(2, 0, 0.8), grid, 1.0) - special.ndtr(grid / math.sqrt(2))))
    assert gap == pytest.approx(0.0152, abs=5e-4)
    cfg = RunConfig(DiffusionParams(2, 0, 0.8), 100_000, 100, 0.01, 31, (1.0,))
    x = run_ensemble(cfg, workers=harness.default_workers())[1.0]
    rep = compare_to_analytic(x, GAUSS, 1.0, cfg.x_grid)
    assert rep.ks_distance > rep.ks_threshold
    assert not rep.passed


def test_compare_rejects_empty():
    with pytest.raises(ParameterError):
        compare_to_analytic(np.array([]), GAUSS, 1.0, np.linspace(-1, 1, 5))


def test_skewed_reference_falls_back_to_subordination():
    rep = compare_to_analytic(np.array([-0.5, 0.0, 0.4, 1.0]), DiffusionParams(1.5, 0.3, 0.8), 1.0,
                              np.linspace(-3, 3, 13))
    assert rep.analytic_reference == "subordinate_density"


# --- transform-domain limit -----------------------------------------------------------------

def test_limit_study_classical_decreasing():
    spec = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    rows = ctrw_limit_study(spec, GAUSS, [1e-1, 1e-2, 1e-3])
    gaps = [r["gap"] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert all(r["rho"] == pytest.approx(1.0) for r in rows)


def test_limit_study_single_row_and_validation():
    spec = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    assert len(ctrw_limit_study(spec, GAUSS, [0.1])) == 1
    with pytest.raises(ParameterError):
        ctrw_limit_study(spec, GAUSS, [0.01, 0.1])


# --- figures -----------------------------------------------------------------------------------

@pytest.mark.parametrize("side", ["left", "right"])
def test_figures(side):
    f1 = reproduce_figures(1, side, 3)
    f2 = reproduce_figures(2, side, 3)
    f3 = reproduce_figures(3, side, 3)
    assert len(f1.path) == len(f2.path) == len(f3.path) == 10_001
    assert f1.checks["strictly_increasing"]
    assert f2.checks["increment_ks"] < f2.checks["ks_threshold"]
    np.testing.assert_array_equal(f3.path.epochs, f1.path.values)
    np.testing.assert_array_equal(f3.path.values, f2.path.values)
    expected = {"left": (2.0, 0.8), "right": (1.5, 0.9)}[side]
    assert (f3.params.alpha, f3.params.beta) == expected


def test_figure_arguments_validated():
    with pytest.raises(ParameterError):
        reproduce_figures(4, "left", 0)


# --- command line ---------------------------------------------------------------------------------

def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_cli_density_stdout(capsys):
    assert main(["density", "--alpha", "2", "--beta", "0.5", "--points", "5", "--xmin", "-1", "--xmax", "1"]) == 0
    out, err = capsys.readouterr()
    lines = out.strip().splitlines()
    assert lines[0] == "x,u_subordination,u_fourier"
    assert len(lines) == 6
    assert float(lines[3].split(",")[1]) == pytest.approx(math.gamma(0.25) / (2 * math.sqrt(2) * math.pi), abs=1e-6)
    assert err.startswith("sup_norm_gap,")


def test_cli_exit_codes(capsys):
    assert main(["density", "--alpha", "2.5", "--beta", "0.5"]) == 2
    assert json.loads(capsys.readouterr().err)["kind"] == "ParameterError"
    assert main(["density", "--alpha", "1.5", "--theta", "0.3", "--beta", "0.8", "--method", "fourier"]) == 2
    with pytest.raises(SystemExit):
        main(["density", "--alpha", "2"])


def test_cli_accuracy_exit_code(monkeypatch, capsys):
    from fracsub import cli
    from fracsub.errors import AccuracyError

    def boom(*a, **k):
        raise AccuracyError("quadrature failed", error_estimate=1.0)

    monkeypatch.setattr(cli, "subordinate_density", boom)
    assert main(["density", "--alpha", "2", "--beta", "0.5", "--method", "subordination"]) == 3
    assert json.loads(capsys.readouterr().err)["error_estimate"] == 1.0


def test_cli_simulate_layout(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["simulate-paths", "--alpha", "2", "--beta", "0.8", "--n-paths", "500", "--n-steps", "200",
            "--seed", "1", "--t", "0.5,1", "--points", "41", "--out", str(out)]
    assert main(args) == 0
    for name in ["config.json", "report.json", "ensemble.csv", "plot.gp", "path_00000.png",
                 "paths/path_00000.csv", "densities/density_t1.csv", "densities/density_t0.5.csv"]:
        assert (out / name).exists(), name
    assert _rows(out / "densities" / "density_t1.csv")[0] == ["x", "u_analytic", "u_empirical"]
    assert _rows(out / "paths" / "path_00002.csv")[0] == ["index", "operational_time", "physical_time", "x"]
    rep = json.loads((out / "report.json").read_text())["reports"]
    assert [r["t"] for r in rep] == [0.5, 1.0]
    assert (out / "plot.gp").read_text().startswith("set datafile separator ','")


def test_cli_ctrw_limit(capsys):
    assert main(["ctrw-limit", "--waiting", "exp", "--tau-list", "0.1,0.01"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "tau,h,rho,gap"
    gaps = [float(r.split(",")[3]) for r in lines[1:]]
    assert gaps[1] <= gaps[0]


def test_cli_convergence(capsys):
    assert main(["convergence", "--alpha", "2", "--beta", "0.8", "--n-paths", "300", "--tau-list", "0.1,0.05"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "tau_star,n_paths,ks_distance,ks_threshold"
    assert len(lines) == 3


def test_cli_figures(tmp_path, capsys):
    assert main(["reproduce-figures", "--figure", "3", "--side", "left", "--seed", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fig3_left.csv")
    assert rows[0] == ["index", "operational_time", "physical_time", "x"]
    assert len(rows) == 10_002
    assert (tmp_path / "fig3_left.gp").exists() and (tmp_path / "fig3_left.png").exists()


def test_cli_floats_have_17_digits(tmp_path, capsys):
    main(["density", "--alpha", "2", "--beta", "1", "--points", "3", "--method", "fourier"])
    row = capsys.readouterr().out.splitlines()[2].split(",")
    assert float(row[1]) == 1 / (2 * math.sqrt(math.pi))
