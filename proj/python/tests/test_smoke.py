import math
import os

import numpy as np
import pytest

import traject


def test_ensemble_crps_hand_values():
    assert traject.crps_ensemble([2.0], 3.0) == pytest.approx(1.0)
    assert traject.crps_ensemble([0.0, 2.0], 1.0) == pytest.approx(0.5)
    assert traject.crps_ensemble([1.5] * 12, 1.5) == 0.0


def test_gaussian_crps_matches_integral():
    mu, sigma, y = 0.3, 1.7, 1.1
    grid = np.linspace(mu - 12 * sigma, mu + 12 * sigma, 200001)
    cdf = np.array([0.5 * math.erfc(-(x - mu) / (sigma * math.sqrt(2))) for x in grid])
    step = (grid > y).astype(float)
    f = (cdf - step) ** 2
    integral = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(grid)))
    assert traject.crps_gaussian(mu, sigma, y) == pytest.approx(integral, abs=1e-5)


def test_emos_recovers_planted_coefficients():
    rng = np.random.default_rng(3)
    n = 4000
    means = rng.normal(10.0, 4.0, n)
    variances = rng.uniform(0.2, 3.0, n)
    y = rng.normal(2.0 + means, np.sqrt(1.0 + 0.5 * variances))
    p = traject.fit_emos(means.tolist(), variances.tolist(), y.tolist())
    assert p.a == pytest.approx(2.0, abs=0.15)
    assert p.b**2 == pytest.approx(1.0, abs=0.1)
    assert p.c**2 == pytest.approx(1.0, abs=0.2)
    assert p.d**2 == pytest.approx(0.5, abs=0.2)
    mu, sigma2 = p.predict(10.0, 1.0)
    assert mu == pytest.approx(p.a + p.b**2 * 10.0)
    assert sigma2 == pytest.approx(p.c**2 + p.d**2)


def test_emos_rejects_short_windows():
    with pytest.raises(traject.InsufficientDataError):
        traject.fit_emos([1.0] * 5, [1.0] * 5, [1.0] * 5)


def test_link_recovers_slope():
    rng = np.random.default_rng(5)
    x = rng.normal(size=1000)
    y = 0.3 + 0.6 * x + rng.normal(scale=0.5, size=1000)
    link = traject.fit_link(x.tolist(), y.tolist())
    assert link.alpha == pytest.approx(0.3, abs=0.06)
    assert link.beta == pytest.approx(0.6, abs=0.06)
    assert link.significant(0.99)


def test_adjustment_period_for_lead_25():
    # predictors 17..23 significant at 90%, 16 is the first that is not
    p_values = {lp: 0.01 for lp in range(17, 24)}
    p_values[16] = 0.5
    plan = traject.select_adjustment_period(25, p_values)
    assert plan["period"] == 9
    assert plan["first_execution"] == 17
    assert plan["last_execution"] == 24


def test_skill_score_and_bootstrap():
    assert traject.skill_score(0.8, 1.0) == pytest.approx(0.2)
    low, mean, high = traject.bootstrap_ci([2.0] * 20, 200, 0.9, 1)
    assert low == mean == high == 2.0


def test_small_pipeline(tmp_path):
    data, model, reports = (str(tmp_path / d) for d in ("data", "model", "reports"))
    traject.run("synth", data_dir=data, days=75, stations=2, training_days=20, spinup_days=40, seed=11)
    traject.run("train-emos", data_dir=data, model_dir=model)
    traject.run("train-raft", data_dir=data, model_dir=model)
    traject.run("replay", data_dir=data, model_dir=model, report_dir=reports, policy="emos_only")
    traject.run("verify", data_dir=data, report_dir=reports)
    rows = {}
    with open(os.path.join(reports, "report.csv")) as fh:
        next(fh)
        for line in fh:
            panel, metric, slc, n, value, *_ = line.rstrip("\n").split(",")
            rows[(metric, slc)] = float(value)
    assert rows[("rmse_raft", "all")] == rows[("rmse_emos", "all")]
    assert rows[("crps_raft", "all")] == rows[("crps_emos", "all")]


def test_missing_artifact_exit_code(tmp_path):
    code, _, err = traject.run_cli(["train-raft", "--data-dir", str(tmp_path), "--model-dir", str(tmp_path)])
    assert code == 3
    assert "synth" in err
