import math

import numpy as np
import pytest

import qrmap


def design(n, rng):
    x = rng.uniform(0, 1, n)
    return np.column_stack([np.ones(n), x]), x


def test_pinball_and_grid():
    assert qrmap.pinball_loss(-2.0, 0.25) == pytest.approx(3.0)
    assert qrmap.pinball_loss(2.0, 0.25) == pytest.approx(1.0)
    grid = qrmap.default_tau_grid()
    assert len(grid) == 19 and grid[0] == pytest.approx(0.05) and grid[-1] == pytest.approx(0.95)
    with pytest.raises(ValueError):
        qrmap.pinball_loss(1.0, 1.0)


def test_fit_matches_brute_force():
    rng = np.random.default_rng(4)
    X, x = design(15, rng)
    y = 1.0 + 2.0 * x + rng.standard_t(3, 15)
    for tau in (0.1, 0.5, 0.9):
        fit = qrmap.fit_quantile(X, y, tau)
        beta, objective, subset = qrmap.brute_force_qr(X, y, tau)
        assert fit.objective == pytest.approx(objective, rel=1e-10)
        assert len(subset) == 2
        assert np.allclose(fit.residuals, y - X @ fit.beta, atol=1e-10)


def test_profile_and_ols():
    rng = np.random.default_rng(5)
    X, x = design(200, rng)
    y = 1.0 + 2.0 * x + rng.normal(size=200)
    fits = qrmap.fit_profile(X, y)
    assert [f.tau for f in fits] == pytest.approx(qrmap.default_tau_grid())
    at_mean = [f.beta[0] + f.beta[1] * x.mean() for f in fits]
    assert at_mean == sorted(at_mean)
    ols = qrmap.fit_ols(X, y)
    assert ols.beta[1] == pytest.approx(2.0, abs=4 * ols.standard_errors[1])


def test_bad_design_raises_data_error():
    X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(qrmap.DataError):
        qrmap.fit_quantile(X, np.arange(5.0), 0.5)


def test_loocv_noiseless_fit_is_perfect():
    rng = np.random.default_rng(6)
    X, x = design(30, rng)
    entries = qrmap.loocv(X, 3.0 - x, [0.25, 0.5])
    assert all(abs(e.r1 - 1.0) < 1e-10 for e in entries)
    assert all(e.n == 30 for e in entries)


def test_bootstrap_is_deterministic():
    rng = np.random.default_rng(7)
    X, x = design(80, rng)
    y = x + rng.normal(size=80)
    a = qrmap.bootstrap(X, y, 0.5, 60, seed=11)
    b = qrmap.bootstrap(X, y, 0.5, 60, seed=11, workers=3)
    assert a.draws.shape == (60, 2)
    assert np.array_equal(a.draws, b.draws)
    stats = qrmap.summarize_bootstrap(a)
    assert stats[1]["ci_lo"] <= stats[1]["median"] <= stats[1]["ci_hi"]
    assert qrmap.resample_indices(80, 11, 0) == qrmap.resample_indices(80, 11, 0)


def test_raster_round_trip_and_downscale(tmp_path):
    values = np.arange(16.0).reshape(4, 4)
    values[0, 0] = -9999.0
    r = qrmap.Raster(values, x_origin=10.0, y_origin=20.0, cellsize=5.0)
    path = tmp_path / "g.asc"
    qrmap.write_ascii_grid(path, r)
    back = qrmap.read_ascii_grid(path)
    assert back.shape == (4, 4) and back.cellsize == 5.0
    assert np.array_equal(back.values, values)
    coarse = qrmap.downscale(back, 2)
    assert coarse.shape == (2, 2) and coarse.cellsize == 10.0
    assert coarse.values[1, 1] == pytest.approx((10 + 11 + 14 + 15) / 4)


def test_iqr_map():
    reps = [qrmap.Raster(np.full((2, 2), float(v))) for v in range(1, 101)]
    assert np.allclose(qrmap.iqr_map(reps).values, 49.5)


def test_run_pipeline(tmp_path):
    rng = np.random.default_rng(8)
    n = 60
    elev = rng.uniform(100, 500, n)
    soc = np.exp(0.5 + 0.002 * elev + 0.3 * rng.normal(size=n))
    rows = ["x,y,soc,elev"] + [f"{i},{i},{float(s)!r},{float(e)!r}" for i, (s, e) in enumerate(zip(soc, elev))]
    (tmp_path / "points.csv").write_text("\n".join(rows) + "\n")
    (tmp_path / "run.cfg").write_text(
        "input = points.csv\nresponse = soc\nresponse_transform = log\n"
        "covariate = elev continuous\nout = out\n"
    )
    result = qrmap.run("fit", tmp_path / "run.cfg", taus=[0.25, 0.5, 0.75])
    assert result["exit_code"] == 0
    names = {p.name for p in result["written"]}
    assert "coefficients_fit.csv" in names and "manifest_fit.txt" in names
    lines = (tmp_path / "out" / "coefficients_fit.csv").read_text().splitlines()
    assert lines[0] == "tau,column,beta" and len(lines) == 1 + 3 * 2
    with pytest.raises(qrmap.ConfigError):
        qrmap.run("bootstrap", tmp_path / "run.cfg", bootstrap_b=0)
