import numpy as np
import pytest
from scipy.optimize import curve_fit

from fluxqubit import FitError
from fluxqubit import analysis as an


def test_sinusoid_recovery_noiseless():
    # Rabi-style trace: 12.30 MHz = 0.01230 GHz on a ns time grid
    t = np.linspace(0, 300, 241)
    y = 0.5 - 0.5 * np.cos(2 * np.pi * 0.01230 * t)
    fit = an.fit_nlls("cosine_fringe", t, y)
    assert fit.converged
    assert abs(fit["f"] - 0.01230) < 1e-9
    assert fit.residual_norm < 1e-9


def test_cosine_fringe_recovery_noiseless():
    t = np.linspace(0, 60, 181)
    y = 0.45 * np.cos(2 * np.pi * 0.1010 * t + 0.35) + 0.5
    fit = an.fit_nlls("cosine_fringe", t, y)
    assert fit.converged
    assert abs(fit["f"] - 0.1010) < 1e-9
    assert abs(fit["phi"] - 0.35) < 1e-6
    assert abs(fit["A"] - 0.45) < 1e-9


def test_sinusoid_model_form():
    t = np.linspace(0, 10, 101)
    y = 0.8 * np.sin(2 * np.pi * 0.31 * t + 1.1) - 0.2
    fit = an.fit_nlls("sinusoid", t, y)
    assert fit.converged
    assert abs(fit["f"] - 0.31) < 1e-9
    assert abs(np.remainder(fit["phi"] - 1.1 + np.pi, 2 * np.pi) - np.pi) < 1e-6


def test_exp_decay_recovery_noiseless():
    m = np.unique(np.round(np.logspace(0, np.log10(5000), 28))).astype(float)
    y = 0.418 * 0.99857**m + 0.558
    fit = an.fit_nlls("exp_decay", m, y)
    assert fit.converged
    assert abs(fit["A"] - 0.418) < 1e-9
    assert abs(fit["p"] - 0.99857) < 1e-9
    assert abs(fit["B"] - 0.558) < 1e-9


def test_exp_decay_constant_data_is_degenerate():
    x = np.arange(10, dtype=float)
    y = np.full(10, 0.7)
    fit = an.fit_nlls("exp_decay", x, y)
    assert fit.converged
    assert fit.degenerate
    assert abs(fit["A"]) < 1e-9
    assert abs(fit["B"] - 0.7) < 1e-9


def test_residual_history_is_monotone():
    rng = np.random.default_rng(21)
    x = np.linspace(0, 50, 80)
    y = 0.4 * 0.95**x + 0.5 + rng.normal(scale=0.01, size=x.size)
    fit = an.fit_nlls("exp_decay", x, y, p0={"A": 1.0, "p": 0.8, "B": 0.0})
    assert fit.converged
    assert all(b <= a + 1e-15 for a, b in zip(fit.history, fit.history[1:]))


def test_noisy_recovery_within_three_stderr():
    rng = np.random.default_rng(22)
    true = {"A": 0.42, "p": 0.9986, "B": 0.56}
    m = np.unique(np.round(np.logspace(0, np.log10(3000), 20))).astype(float)
    hits = 0
    trials = 100
    for _ in range(trials):
        y = true["A"] * true["p"] ** m + true["B"]
        y = y + rng.normal(scale=np.ptp(y) / 40, size=m.size)  # SNR >= 20
        fit = an.fit_nlls("exp_decay", m, y)
        if not fit.converged or fit.stderr is None:
            continue
        if all(abs(fit[k] - true[k]) <= 3 * max(fit.stderr[k], 1e-12) for k in true):
            hits += 1
    assert hits >= 95


def test_agrees_with_scipy_curve_fit():
    rng = np.random.default_rng(23)
    x = np.linspace(0, 200, 120)
    y = 0.35 * 0.985**x + 0.51 + rng.normal(scale=0.004, size=x.size)
    fit = an.fit_nlls("exp_decay", x, y)
    popt, pcov = curve_fit(
        lambda x, a, p, b: a * p**x + b, x, y,
        p0=[fit["A"], fit["p"], fit["B"]],
    )
    assert abs(fit["A"] - popt[0]) < 1e-6
    assert abs(fit["p"] - popt[1]) < 1e-8
    assert abs(fit["B"] - popt[2]) < 1e-6
    perr = np.sqrt(np.diag(pcov))
    for name, ref in zip(("A", "p", "B"), perr):
        assert abs(fit.stderr[name] - ref) < 0.05 * ref


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        an.fit_nlls("nope", [1, 2, 3, 4], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        an.fit_nlls("exp_decay", [1, 2, 3], [1, 2, 3])


def test_allan_constant_series_is_zero():
    t = np.arange(100, dtype=float)
    result = an.allan_deviation(t, np.full(100, 3.3), [1, 2, 5, 10])
    assert np.all(result[:, 1] == 0.0)


def test_allan_tau_one_matches_brute_force_exactly():
    rng = np.random.default_rng(24)
    y = rng.normal(size=257)
    t = np.arange(257, dtype=float)
    result = an.allan_deviation(t, y, [1.0])
    brute = np.sqrt(0.5 * np.mean((y[1:] - y[:-1]) ** 2))
    assert result[0, 1] == brute


def test_allan_overlapping_equals_non_overlapping_at_base_spacing():
    rng = np.random.default_rng(25)
    y = rng.normal(size=128)
    t = np.arange(128, dtype=float)
    overlapping = an.allan_deviation(t, y, [1.0])[0, 1]
    diffs = y[1:] - y[:-1]
    non_overlapping = np.sqrt(0.5 * np.mean(diffs**2))
    assert overlapping == non_overlapping


def test_allan_white_noise_slope():
    rng = np.random.default_rng(26)
    n = 16384
    t = np.arange(n, dtype=float)
    y = rng.normal(size=n)
    taus = np.array([4, 8, 16, 32, 40], dtype=float)
    result = an.allan_deviation(t, y, taus)
    slope = np.polyfit(np.log(result[:, 0]), np.log(result[:, 1]), 1)[0]
    assert abs(slope + 0.5) < 0.1


def test_allan_drift_slope():
    n = 1000
    t = np.arange(n, dtype=float)
    y = 0.01 * t
    taus = np.array([2, 4, 8, 16, 20], dtype=float)
    result = an.allan_deviation(t, y, taus)
    slope = np.polyfit(np.log(result[:, 0]), np.log(result[:, 1]), 1)[0]
    assert abs(slope - 1.0) < 0.1
    # linear drift gives ad = c * tau / sqrt(2) exactly
    assert np.allclose(result[:, 1], 0.01 * taus / np.sqrt(2), rtol=1e-9)


def test_allan_rejects_bad_taus_and_spacing():
    t = np.arange(100, dtype=float)
    y = np.zeros(100)
    with pytest.raises(ValueError):
        an.allan_deviation(t, y, [1.5])
    with pytest.raises(ValueError):
        an.allan_deviation(t, y, [50.0])  # beyond span / 3
    bad_t = t.copy()
    bad_t[50] += 0.5
    with pytest.raises(ValueError):
        an.allan_deviation(bad_t, y, [1.0])


def test_percentile_basic_and_masked():
    values = np.arange(101, dtype=float)
    assert an.percentile(values, 90) == 90.0
    assert an.percentile([7.0], 25) == 7.0
    mask = values > 50
    assert an.percentile(values, 100, exclude=mask) == 50.0
    with pytest.raises(ValueError):
        an.percentile(values, 50, exclude=np.ones(101, dtype=bool))
